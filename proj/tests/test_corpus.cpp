#include <doctest.h>

#include <filesystem>

#include "videonav/corpus.hpp"
#include "videonav/errors.hpp"

using namespace videonav;

TEST_CASE("generated corpus is deterministic and valid") {
    const Corpus a = generate_corpus(3, 8);
    const Corpus b = generate_corpus(3, 8);
    CHECK(a == b);
    CHECK_FALSE(a == generate_corpus(4, 8));
    REQUIRE(a.videos.size() == 8);
    CHECK(a.qa_count() == 24);
    for (const auto& v : a.videos) {
        CHECK_NOTHROW(validate_video(v));
        for (std::size_t i = 1; i < v.events.size(); ++i) {
            CHECK(v.events[i - 1].interval.end < v.events[i].interval.start);
        }
        for (const auto& q : v.qa) {
            CHECK(q.choices.size() == 4);
            CHECK(q.answer_index >= 0);
            CHECK(q.answer_index < 4);
            CHECK(q.clue.size() == 1);
            CHECK(q.hint_texts.size() == 2);
        }
    }
}

TEST_CASE("jsonl round trip") {
    const Corpus c = generate_corpus(11, 4);
    CHECK(parse_corpus(dump_corpus(c)) == c);
    const auto path = std::filesystem::temp_directory_path() / "videonav_corpus_rt.jsonl";
    save_corpus(c, path);
    CHECK(load_corpus(path) == c);
    std::filesystem::remove(path);
}

TEST_CASE("malformed records name the record and field") {
    const Corpus c = generate_corpus(1, 2);
    std::string text = dump_corpus(c);
    const std::string broken = text.substr(0, text.find('\n') + 1) + "{not json}\n";
    try {
        parse_corpus(broken);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.record() == 1);
    }

    GroundedVideo v = c.videos[0];
    v.qa[0].clue = IntervalSet{{v.duration_s - 1, v.duration_s + 5}};
    try {
        validate_video(v);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "qa[0].clue[0]");
    }

    v = c.videos[0];
    v.qa[0].answer_index = 9;
    CHECK_THROWS_AS(validate_video(v), ValidationError);

    const std::string bad_interval = R"({"schema":"v1","id":"x","duration_s":100,"events":[{"interval":[50,40],"description":"d","keywords":["k"]}],"qa":[]})";
    CHECK_THROWS_AS(parse_corpus(bad_interval + "\n"), ValidationError);
}

TEST_CASE("parameter validation") {
    CorpusParams p;
    p.duration_min_s = 900;
    p.duration_max_s = 800;
    CHECK_THROWS_AS(validate_params(p), ConfigError);
    p = {};
    p.choices = 1;
    CHECK_THROWS_AS(validate_params(p), ConfigError);
    CHECK_THROWS_AS(generate_corpus(1, 0), ConfigError);
}
