#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "videonav/corpus.hpp"
#include "videonav/orchestrator.hpp"
#include "videonav/reward.hpp"

namespace videonav {

/// Average wall time per reasoning round, caption call and QA call.
struct TimeModel {
    double t1_s = 2.5;
    double t2_s = 7.0;
    double t3_s = 2.7;
};

/// Throws ConfigError on a negative or non-finite entry.
void validate_time_model(const TimeModel& tm);

/// C1·t1 + C2·t2 + C3·t3. Counts may be fractional (averages).
double modeled_cost(double c1, double c2, double c3, const TimeModel& tm = {});
double modeled_cost(const CostCounters& c, const TimeModel& tm = {});

/// Captions implied by first-level init when every non-final round captions
/// once: W + C1 - 1 - C3. Throws DomainError for rounds < 1.
double expected_captions(double width, double rounds, double qa_calls);

struct EvalRecord {
    std::string setting;
    std::string qa_id;
    bool correct = false;
    bool errored = false;
    std::string error;
    long rounds = 0;
    long captions = 0;
    long qa_calls = 0;
    double modeled_time_s = 0.0;
    double measured_time_s = 0.0;
    double r_loc = 0.0;
    double reward = 0.0;
};

struct EvalSetting {
    std::string name;
    EpisodeConfig episode;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>(std::size_t task)>;
using BackendFactory = std::function<std::unique_ptr<ToolBackend>()>;

/// Evaluates every question of the corpus once under `setting`, in parallel.
/// Backend failures mark the item errored instead of failing the batch.
std::vector<EvalRecord> batch_eval(const Corpus& corpus, const EvalSetting& setting,
                                   const PolicyFactory& make_policy,
                                   const BackendFactory& make_backend, const TimeModel& tm = {},
                                   const ScoreOptions& score = {}, int jobs = 1);

struct ReportRow {
    std::string setting;
    int n = 0;
    int errored = 0;
    double accuracy = 0.0;
    double mean_rounds = 0.0;
    double mean_captions = 0.0;
    double mean_qa = 0.0;
    double modeled_cost_s = 0.0;
    double measured_cost_s = 0.0;
    bool dominated = false;
};

/// One row per setting (in first-seen order of `records`), sorted by modeled
/// cost. Errored items are excluded from every mean and counted separately.
std::vector<ReportRow> pareto_report(const std::vector<EvalRecord>& records);

/// True when `other` has >= accuracy and <= cost with at least one strict.
bool dominates(const ReportRow& other, const ReportRow& row);

std::string report_csv(const std::vector<ReportRow>& rows);
std::string records_csv(const std::vector<EvalRecord>& records);

}  // namespace videonav
