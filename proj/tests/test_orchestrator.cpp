#include <doctest.h>

#include "videonav/errors.hpp"
#include "videonav/orchestrator.hpp"

using namespace videonav;

namespace {

class ScriptPolicy final : public Policy {
public:
    explicit ScriptPolicy(std::vector<std::string> turns) : turns_(std::move(turns)) {}
    PolicyTurn act(const NavigatorState&) override {
        if (next_ >= turns_.size()) return {"<think>out of ideas</think><answer>A</answer>", {}};
        return {turns_[next_++], {}};
    }

private:
    std::vector<std::string> turns_;
    std::size_t next_ = 0;
};

std::string cap(const std::string& wire) {
    return "<think>look</think><tool>get_caption(" + wire + ")</tool>";
}
std::string qa(const std::string& wire) {
    return "<think>ask</think><tool>video_qa(" + wire + ", what color?)</tool>";
}

GroundedVideo sample_video() {
    GroundedVideo v;
    v.id = "vid";
    v.duration_s = 4096;
    v.events.push_back({{100, 110}, "the dog catches a red kite near the bridge", {"dog", "kite", "red"}});
    GroundedQA q;
    q.id = "vid-q0";
    q.question = "What color is the kite the dog catches?";
    q.choices = {"blue", "red", "green", "black"};
    q.answer_index = 1;
    q.clue = IntervalSet{{100, 110}};
    q.hint_texts = {"a", "b"};
    v.qa.push_back(q);
    return v;
}

}  // namespace

TEST_CASE("init modes") {
    const auto v = sample_video();
    MockBackend mock;
    CostMeter meter;
    EpisodeConfig cfg;
    auto s = init_context(v, v.qa[0], cfg, mock, meter);
    CHECK(s.init_paths.size() == 6);
    CHECK(s.visited.size() == 6);
    CHECK(meter.snapshot().c2_captions == 6);
    CHECK(s.history.init_captions.size() == 6);

    cfg.init = InitMode::RootCaption;
    CostMeter m2;
    s = init_context(v, v.qa[0], cfg, mock, m2);
    REQUIRE(s.init_paths.size() == 1);
    CHECK(s.init_paths[0].is_root());
    CHECK(m2.snapshot().c2_captions == 1);

    cfg.budget = 0;
    CHECK_THROWS_AS(init_context(v, v.qa[0], cfg, mock, m2), ConfigError);
    CHECK(init_mode_from_string("root") == InitMode::RootCaption);
    CHECK(init_mode_from_string("first_level") == InitMode::FirstLevel);
    CHECK_THROWS(init_mode_from_string("leaves"));
}

TEST_CASE("legality taxonomy") {
    const auto v = sample_video();
    MockBackend mock;
    CostMeter meter;
    auto s = init_context(v, v.qa[0], EpisodeConfig{}, mock, meter);
    CHECK_FALSE(enforce_legality(s, ToolCall::caption({0, 0})));
    CHECK(enforce_legality(s, ToolCall::caption({0, 0, 0}))->kind == ViolationKind::ParentNotVisited);
    CHECK(enforce_legality(s, ToolCall::caption({6}))->kind == ViolationKind::InvalidPath);
    CHECK(enforce_legality(s, ToolCall::caption({0, 0, 0, 0}))->kind == ViolationKind::InvalidPath);
    CHECK(enforce_legality(s, ToolCall::video_qa({0, 0}, "q"))->kind == ViolationKind::NotALeaf);
    CHECK(enforce_legality(s, ToolCall::video_qa({0, 0, 0}, "q"))->kind ==
          ViolationKind::CaptionNotRetrieved);
    s.visited.insert({0, 0});
    s.visited.insert({0, 0, 0});
    CHECK_FALSE(enforce_legality(s, ToolCall::caption({0, 0, 1})));
    CHECK_FALSE(enforce_legality(s, ToolCall::video_qa({0, 0, 0}, "q")));
}

TEST_CASE("violations and format errors consume rounds") {
    const auto v = sample_video();
    MockBackend mock;
    ScriptPolicy p({cap("(1,1,1)"), "no tags at all", qa("(1,1)"), cap("(1,1)"), cap("(1,1,6)"),
                    qa("(1,1,6)"), "<think>done</think><answer>B</answer>"});
    const auto r = run_episode(v, v.qa[0], p, mock, EpisodeConfig{});
    CHECK(r.outcome == Outcome::Answered);
    CHECK(r.correct);
    REQUIRE(r.rounds.size() == 7);
    CHECK(r.rounds[0].kind == "violation");
    CHECK(r.rounds[0].detail == to_string(ViolationKind::ParentNotVisited));
    CHECK(r.rounds[1].kind == "format_error");
    CHECK(r.rounds[2].kind == "violation");
    CHECK(r.rounds[3].kind == "caption");
    CHECK(r.rounds[5].kind == "qa");
    CHECK(r.episode.steps[0].kind == ObservationKind::Violation);
    CHECK(r.episode.steps[0].observation.rfind("Invalid call:", 0) == 0);
    CHECK(r.episode.steps[1].observation.rfind("Format error at offset", 0) == 0);
    CHECK(r.episode.steps[5].observation.find("B.") != std::string::npos);
    CHECK(r.tool_calls() == 3);
    CHECK(r.cost.c1_rounds == 7);
    CHECK(r.cost.c2_captions == 6 + 2);
    CHECK(r.cost.c3_qa == 1);
}

TEST_CASE("repeats are served from cache and still counted") {
    const auto v = sample_video();
    MockBackend mock;
    ScriptPolicy p({cap("(1,1)"), cap("(1,1)"), cap("(1)")});
    EpisodeConfig cfg;
    cfg.budget = 3;
    const auto r = run_episode(v, v.qa[0], p, mock, cfg);
    CHECK(r.outcome == Outcome::Unanswered);
    CHECK_FALSE(r.correct);
    REQUIRE(r.rounds.size() == 3);
    CHECK_FALSE(r.rounds[0].repeat);
    CHECK(r.rounds[1].repeat);
    CHECK(r.rounds[2].repeat);
    CHECK(r.episode.steps[0].observation == r.episode.steps[1].observation);
    CHECK(r.cost.c2_captions == 6 + 3);
}

TEST_CASE("lenient think") {
    const auto v = sample_video();
    MockBackend mock;
    EpisodeConfig cfg;
    cfg.lenient_think = true;
    ScriptPolicy p({"<answer>B</answer>"});
    CHECK(run_episode(v, v.qa[0], p, mock, cfg).correct);
    ScriptPolicy strict({"<answer>B</answer>"});
    cfg.lenient_think = false;
    cfg.budget = 1;
    CHECK(run_episode(v, v.qa[0], strict, mock, cfg).rounds[0].kind == "format_error");
}

TEST_CASE("oracle answers in few calls and caption count matches the identity") {
    const auto v = sample_video();
    MockBackend mock;
    ScriptedOraclePolicy oracle;
    const auto r = run_episode(v, v.qa[0], oracle, mock, EpisodeConfig{});
    CHECK(r.correct);
    CHECK(r.rounds_used() == 4);
    CHECK(r.cost.c2_captions == 6 + r.cost.c1_rounds - 1 - r.cost.c3_qa);
}

TEST_CASE("caption frontier") {
    const auto v = sample_video();
    MockBackend mock;
    CostMeter meter;
    auto s = init_context(v, v.qa[0], EpisodeConfig{}, mock, meter);
    CHECK(caption_frontier(s).size() == 36);
    s.visited.insert({2, 3});
    CHECK(caption_frontier(s).size() == 41);
}

TEST_CASE("node evidence follows captions") {
    const auto v = sample_video();
    MockBackend mock;
    CostMeter meter;
    auto s = init_context(v, v.qa[0], EpisodeConfig{}, mock, meter);
    const auto inside = node_evidence(s, {0, 0});
    const auto outside = node_evidence(s, {0, 3});
    CHECK(inside.hits > 0);
    CHECK(inside.focus == doctest::Approx(1.0));
    CHECK(outside.hits == 0);
    CHECK(node_evidence(s, {4}).hits == 0);
}

TEST_CASE("episode log") {
    const auto v = sample_video();
    MockBackend mock;
    ScriptPolicy p({cap("(1,1)"), cap("(1,1)"), "<think>done</think><answer>B</answer>"});
    const auto j = episode_log(run_episode(v, v.qa[0], p, mock, EpisodeConfig{}));
    CHECK(j["outcome"] == "answered");
    CHECK(j["answer"] == "B");
    CHECK(j["init_paths"].size() == 6);
    CHECK(j["visited"].size() == 7);
    REQUIRE(j["rounds"].size() == 3);
    CHECK(j["rounds"][0]["path"] == "(1,1)");
    CHECK(j["rounds"][1]["repeat"] == true);
    CHECK(j["rounds"][2]["path"].is_null());
    CHECK(j["cost"]["c2_captions"] == 8);
    CHECK(j.dump().find('\n') == std::string::npos);
}
