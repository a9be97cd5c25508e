#include <doctest.h>

#include <random>

#include "videonav/protocol.hpp"

using namespace videonav;

namespace {

ParseOptions opts6() {
    ParseOptions o;
    o.width = 6;
    o.choices = {"red", "blue", "green", "yellow"};
    return o;
}

std::string random_words(std::mt19937_64& rng, int min_words, int max_words) {
    static const char* words[] = {"segment", "the", "clue", "maybe", "red", "kite", "near",
                                  "bridge", "zoom", "in", "(2)", "3,4", "why?", "ok.", "at",
                                  "12.5s", "parent", "child's", "video"};
    std::uniform_int_distribution<int> n(min_words, max_words);
    std::uniform_int_distribution<std::size_t> w(0, std::size(words) - 1);
    std::string out;
    const int count = n(rng);
    for (int i = 0; i < count; ++i) {
        if (i) out += ' ';
        out += words[w(rng)];
    }
    return out;
}

}  // namespace

TEST_CASE("parse tool calls") {
    auto r = parse_action("<think>look</think><tool>get_caption((2,3))</tool>", opts6());
    REQUIRE(r.ok());
    CHECK(r.action->think == "look");
    CHECK(r.action->tool() == ToolCall::caption({1, 2}));

    r = parse_action("<think>t</think>\n<tool>get_caption(4)</tool>", opts6());
    REQUIRE(r.ok());
    CHECK(r.action->tool().path == NodePath{3});

    r = parse_action("<think>t</think><tool>video_qa((1,2,3), what color is it?)</tool>", opts6());
    REQUIRE(r.ok());
    CHECK(r.action->tool() == ToolCall::video_qa({0, 1, 2}, "what color is it?"));
}

TEST_CASE("parse answers") {
    const auto o = opts6();
    CHECK(parse_action("<think>t</think><answer>B</answer>", o).action->answer().choice_index == 1);
    CHECK(parse_action("<think>t</think><answer>(C)</answer>", o).action->answer().choice_index == 2);
    CHECK(parse_action("<think>t</think><answer>D. yellow</answer>", o).action->answer().choice_index == 3);
    CHECK(parse_action("<think>t</think><answer>2</answer>", o).action->answer().choice_index == 1);
    CHECK(parse_action("<think>t</think><answer>Green</answer>", o).action->answer().choice_index == 2);
    const auto free = parse_action("<think>t</think><answer>purple</answer>", o);
    REQUIRE(free.ok());
    CHECK_FALSE(free.action->answer().choice_index.has_value());
    CHECK(parse_action("<think>t</think><answer>F</answer>", o).error->code == ProtocolErrorCode::BadAnswer);
}

TEST_CASE("parse errors") {
    const auto o = opts6();
    auto r = parse_action("<think>only thinking</think>", o);
    CHECK(r.error->code == ProtocolErrorCode::NoTerminal);
    CHECK(r.error->message == "no tool/answer");
    r = parse_action("<think>t</think><tool>get_caption((1))</tool><answer>A</answer>", o);
    CHECK(r.error->code == ProtocolErrorCode::AmbiguousTerminal);
    CHECK(r.error->message == "ambiguous terminal");
    CHECK(parse_action("<think>t</think><tool>get_caption((1))", o).error->code == ProtocolErrorCode::UnclosedTag);
    CHECK(parse_action("<tool>get_caption((1))</tool>", o).error->code == ProtocolErrorCode::MissingThink);
    CHECK(parse_action("<think> </think><tool>get_caption((1))</tool>", o).error->code == ProtocolErrorCode::MissingThink);
    CHECK(parse_action("<think>t</think><tool>get_caption((7))</tool>", o).error->code == ProtocolErrorCode::IndexRange);
    CHECK(parse_action("<think>t</think><tool>get_caption((0))</tool>", o).error->code == ProtocolErrorCode::IndexRange);
    CHECK(parse_action("<think>t</think><tool>get_caption((1,1,1,1))</tool>", o).error->code == ProtocolErrorCode::IndexRange);
    CHECK(parse_action("<think>t</think><tool>zoom((1))</tool>", o).error->code == ProtocolErrorCode::UnknownTool);
    CHECK(parse_action("<think>t</think><tool>get_caption((a))</tool>", o).error->code == ProtocolErrorCode::MalformedCall);
    CHECK(parse_action("<think>t</think><tool>video_qa((1,1,1))</tool>", o).error->code == ProtocolErrorCode::MalformedCall);

    ParseOptions lenient = o;
    lenient.lenient = true;
    CHECK(parse_action("<tool>get_caption((1))</tool>", lenient).ok());
}

TEST_CASE("text outside tags is a warning") {
    const auto r = parse_action("Sure! <think>t</think><tool>get_caption((1))</tool> done", opts6());
    REQUIRE(r.ok());
    REQUIRE(r.warnings.size() == 2);
    CHECK(r.warnings[0].kind == DiagnosticKind::OutsideText);
}

TEST_CASE("tag validation") {
    CHECK(validate_tags("<think>a</think><tool>x</tool>").empty());
    CHECK_FALSE(validate_tags("<think>a<tool>x</tool></think>").empty());
    CHECK_FALSE(validate_tags("<think>a").empty());
    CHECK_FALSE(validate_tags("</answer>").empty());
}

TEST_CASE("render and parse round trip on fuzzed actions") {
    std::mt19937_64 rng(424242);
    const std::vector<std::string> choices{"red", "blue", "green", "yellow", "black"};
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const int width = std::uniform_int_distribution<int>(2, 16)(rng);
        ParseOptions o;
        o.width = width;
        o.choices = choices;
        const std::string think = random_words(rng, 1, 12);
        Action a;
        a.think = think;
        const int kind = std::uniform_int_distribution<int>(0, 3)(rng);
        if (kind <= 1) {
            const int level = kind == 0 ? std::uniform_int_distribution<int>(1, 3)(rng) : 3;
            std::vector<int> ids;
            for (int l = 0; l < level; ++l) ids.push_back(std::uniform_int_distribution<int>(0, width - 1)(rng));
            a.terminal = kind == 0 ? ToolCall::caption(NodePath(ids))
                                   : ToolCall::video_qa(NodePath(ids), random_words(rng, 1, 10));
        } else if (kind == 2) {
            a.terminal = FinalAnswer::choice(std::uniform_int_distribution<int>(0, 4)(rng));
        } else {
            a.terminal = FinalAnswer{std::nullopt, "purple " + random_words(rng, 1, 4)};
        }
        const std::string text = render_action(a);
        const auto r = parse_action(text, o);
        if (!r.ok() || !(*r.action == a) || render_action(*r.action) != text || !r.warnings.empty()) {
            ++mismatches;
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("episode rendering") {
    Episode e;
    e.video_id = "v";
    e.question = "What color?";
    e.choices = {"red", "blue"};
    e.init_captions = {{NodePath{0}, "first"}, {NodePath{1}, "second"}};
    e.steps.push_back({"<think>a</think><tool>get_caption((1,1))</tool>", ObservationKind::Tool, "Segment (1,1): x"});
    e.steps.push_back({"<think>b</think><answer>A</answer>", ObservationKind::Answer, "Final answer: A"});
    CHECK(e.answered());
    CHECK_NOTHROW(check_episode(e));
    const auto ctx = render_context(e);
    CHECK(ctx.find("What color?") != std::string::npos);
    CHECK(ctx.find("second") != std::string::npos);
    const auto msgs = render_messages(e, "sys");
    REQUIRE(msgs.size() == 5);
    CHECK(msgs[0].role == "system");
    CHECK(msgs[2].role == "assistant");
    CHECK(msgs[3].content == "<observation>Segment (1,1): x</observation>");
    CHECK(msgs[4].role == "assistant");
    CHECK(render_history(e) == render_history(e));

    e.steps.push_back(e.steps.back());
    CHECK_THROWS(check_episode(e));
}
