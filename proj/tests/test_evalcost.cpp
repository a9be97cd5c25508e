#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "videonav/corpus.hpp"
#include "videonav/errors.hpp"
#include "videonav/evalcost.hpp"

using namespace videonav;

namespace {

ReportRow row(const std::string& name, double acc, double cost) {
    ReportRow r;
    r.setting = name;
    r.accuracy = acc;
    r.modeled_cost_s = cost;
    return r;
}

EvalRecord rec(const std::string& setting, bool correct, long rounds, long captions, long qa) {
    EvalRecord r;
    r.setting = setting;
    r.correct = correct;
    r.rounds = rounds;
    r.captions = captions;
    r.qa_calls = qa;
    r.modeled_time_s = modeled_cost(rounds, captions, qa);
    return r;
}

}  // namespace

TEST_CASE("time model") {
    CHECK(std::abs(modeled_cost(10.5, 14.14, 0.36) - 126.202) < 1e-9);
    CHECK(modeled_cost(2, 1, 1) == doctest::Approx(14.7));
    CHECK(modeled_cost(1, 0, 0, TimeModel{1, 2, 3}) == 1.0);
    CostCounters c;
    c.c1_rounds = 3;
    c.c2_captions = 2;
    c.c3_qa = 1;
    CHECK(modeled_cost(c) == doctest::Approx(3 * 2.5 + 2 * 7.0 + 2.7));
    CHECK_THROWS_AS(validate_time_model(TimeModel{-1, 1, 1}), ConfigError);
}

TEST_CASE("caption identity") {
    CHECK(expected_captions(5, 10.5, 0.36) == 14.14);
    CHECK(expected_captions(6, 1, 0) == 6);
    CHECK(expected_captions(5, 2, 1) == 5);
    CHECK(expected_captions(16, 1, 0) == 16);
    CHECK_THROWS_AS(expected_captions(6, 0, 0), DomainError);
}

TEST_CASE("dominance") {
    CHECK(dominates(row("a", 0.9, 10), row("b", 0.8, 20)));
    CHECK(dominates(row("a", 0.9, 10), row("b", 0.9, 20)));
    CHECK_FALSE(dominates(row("a", 0.9, 10), row("b", 0.9, 10)));
    CHECK_FALSE(dominates(row("a", 0.7, 10), row("b", 0.9, 20)));
}

TEST_CASE("pareto report") {
    std::vector<EvalRecord> records{
        rec("slow", true, 10, 15, 1), rec("slow", true, 10, 15, 1),
        rec("fast", true, 2, 6, 1),   rec("fast", false, 1, 6, 0),
        rec("mid", false, 5, 8, 0),   rec("mid", false, 5, 8, 0),
    };
    EvalRecord err = rec("fast", false, 0, 0, 0);
    err.errored = true;
    records.push_back(err);
    const auto rows = pareto_report(records);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].setting == "fast");
    CHECK(rows[0].n == 2);
    CHECK(rows[0].errored == 1);
    CHECK(rows[0].accuracy == 0.5);
    CHECK(rows[0].mean_rounds == 1.5);
    CHECK_FALSE(rows[0].dominated);
    CHECK(rows[1].setting == "mid");
    CHECK(rows[1].dominated);
    CHECK(rows[2].setting == "slow");
    CHECK_FALSE(rows[2].dominated);
    const auto csv = report_csv(rows);
    CHECK(csv.rfind("setting,n,accuracy,mean_rounds,mean_captions,mean_qa,modeled_cost_s,dominated,errored\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("batch eval is deterministic across thread counts") {
    CorpusParams cp;
    cp.duration_min_s = 2700;
    cp.duration_max_s = 4300;
    const auto corpus = generate_corpus(8, 5, cp);
    EvalSetting s{"b10", {}};
    s.episode.budget = 10;
    const auto make_policy = [](std::size_t task) {
        return std::make_unique<NoisyOraclePolicy>(0.3, task);
    };
    const auto make_backend = [] { return std::make_unique<MockBackend>(); };
    const auto a = batch_eval(corpus, s, make_policy, make_backend, {}, {}, 1);
    const auto b = batch_eval(corpus, s, make_policy, make_backend, {}, {}, 3);
    REQUIRE(a.size() == 15);
    CHECK(records_csv(a) == records_csv(b));
    for (const auto& r : a) {
        CHECK(r.rounds <= 10);
        CHECK(r.captions == 6 + r.rounds - (r.correct ? 1 : 0) - r.qa_calls);
    }
}

TEST_CASE("backend failures mark items errored") {
    class Failing final : public ToolBackend {
    public:
        ToolResult caption(const GroundedVideo&, const NodePath&, const TreeConfig&) override {
            throw TransportError("connection refused");
        }
        ToolResult video_qa(const GroundedVideo&, const GroundedQA&, const NodePath&,
                            const std::string&, const TreeConfig&) override {
            throw TransportError("connection refused");
        }
    };
    const auto corpus = generate_corpus(2, 1);
    const auto records = batch_eval(
        corpus, EvalSetting{"x", {}}, [](std::size_t) { return std::make_unique<ScriptedOraclePolicy>(); },
        [] { return std::make_unique<Failing>(); });
    REQUIRE(records.size() == 3);
    for (const auto& r : records) {
        CHECK(r.errored);
        CHECK(r.error.find("connection refused") != std::string::npos);
    }
    const auto rows = pareto_report(records);
    CHECK(rows[0].errored == 3);
    CHECK(rows[0].n == 0);
}
