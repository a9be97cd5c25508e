#include <doctest.h>

#include <cmath>

#include "videonav/errors.hpp"
#include "videonav/tools.hpp"

using namespace videonav;

namespace {

GroundedVideo one_event_video() {
    GroundedVideo v;
    v.id = "vid";
    v.duration_s = 4096;
    v.events.push_back({{100, 110}, "the dog catches a red kite near the bridge", {"dog", "kite", "red"}});
    v.events.push_back({{2000, 2008}, "the cat drops a blue cup near the river", {"cat", "cup", "blue"}});
    GroundedQA q;
    q.id = "vid-q0";
    q.question = "What color is the kite the dog catches?";
    q.choices = {"blue", "red", "green", "black"};
    q.answer_index = 1;
    q.clue = IntervalSet{{100, 110}};
    q.hint_texts = {"a dog plays", "the dog catches a kite"};
    v.qa.push_back(q);
    return v;
}

}  // namespace

TEST_CASE("clue coverage") {
    CHECK(clue_coverage({100, 116}, IntervalSet{{92, 108}}) == doctest::Approx(0.5));
    CHECK(clue_coverage({0, 50}, IntervalSet{{92, 108}}) == 0.0);
    CHECK(clue_coverage({0, 500}, IntervalSet{{92, 108}}) == 1.0);
    CHECK(clue_coverage({100, 104}, IntervalSet{{90, 100}, {102, 106}}) == doctest::Approx(2.0 / 14.0));
}

TEST_CASE("mock qa answers only from a leaf holding the clue") {
    const auto v = one_event_video();
    const auto cfg = make_tree_config(v.duration_s);
    REQUIRE(cfg.width == 6);
    const auto hit = mock_qa(v, v.qa[0], {0, 0, 5}, cfg);
    CHECK_FALSE(hit.is_idk);
    CHECK(hit.answer_index == 1);
    CHECK(hit.text.rfind("B.", 0) == 0);
    const auto miss = mock_qa(v, v.qa[0], {0, 0, 4}, cfg);
    CHECK(miss.is_idk);
    CHECK_FALSE(miss.answer_index.has_value());
    CHECK_THROWS_AS(mock_qa(v, v.qa[0], {0, 0}, cfg), LegalityError);
    CHECK(mock_qa(v, v.qa[0], {0, 0, 5}, cfg, 1.01).is_idk);
}

TEST_CASE("mock captions list overlapping events with time ranges") {
    const auto v = one_event_video();
    const auto cfg = make_tree_config(v.duration_s);
    const auto r = mock_caption(v, {0}, cfg);
    CHECK(r.text.find("kite") != std::string::npos);
    CHECK(r.text.find("cup") == std::string::npos);
    CHECK(r.frames_used == frame_budget(1));
    CHECK(mock_caption(v, {0}, cfg).text == r.text);

    const auto mentions = caption_mentions(r.text);
    REQUIRE(mentions.size() == 2);
    CHECK(mentions[1].time_s == 100.0);
    CHECK(mentions[1].end_s == 110.0);
    CHECK(mentions[1].text.find("kite") != std::string::npos);

    const auto root = mock_caption(v, NodePath::root(), cfg);
    CHECK(root.text.find("cup") != std::string::npos);
}

TEST_CASE("caption mentions") {
    const auto m = caption_mentions("At 12s a dog runs. Later 30.5s-40s a cat sits.");
    REQUIRE(m.size() == 2);
    CHECK(m[0].time_s == 12.0);
    CHECK(m[0].end_s == 12.0);
    CHECK(m[0].text == " a dog runs. Later ");
    CHECK(m[1].time_s == 30.5);
    CHECK(m[1].end_s == 40.0);
    CHECK(caption_mentions("no times here").empty());
}

TEST_CASE("content tokens drop stopwords") {
    const auto t = content_tokens("What color is the Kite near the bridge?");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "kite");
    CHECK(t[1] == "bridge");
}

TEST_CASE("cost meter") {
    CostMeter m;
    m.record(CostCategory::Round, 1.5);
    m.record(CostCategory::Caption, 2.0);
    m.record(CostCategory::Caption, 0.0);
    m.record(CostCategory::QA, 0.25);
    const auto c = m.snapshot();
    CHECK(c.c1_rounds == 1);
    CHECK(c.c2_captions == 2);
    CHECK(c.c3_qa == 1);
    CHECK(c.caption_time_s == 2.0);
    CHECK_THROWS_AS(m.record(CostCategory::QA, -1.0), DomainError);
    CHECK_THROWS_AS(m.record(CostCategory::QA, std::nan("")), DomainError);
    CHECK(m.snapshot() == c);
    CostMeter copy = m;
    CHECK(copy.snapshot() == c);
}
