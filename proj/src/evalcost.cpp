#include "videonav/evalcost.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "videonav/errors.hpp"
#include "videonav/util.hpp"

namespace videonav {

void validate_time_model(const TimeModel& tm) {
    for (double t : {tm.t1_s, tm.t2_s, tm.t3_s}) {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw ConfigError(fmt::format("time model entries must be finite and >= 0, got {}", t));
        }
    }
}

double modeled_cost(double c1, double c2, double c3, const TimeModel& tm) {
    for (double c : {c1, c2, c3}) {
        if (!std::isfinite(c)) throw DomainError("cost counters must be finite");
    }
    return c1 * tm.t1_s + c2 * tm.t2_s + c3 * tm.t3_s;
}

double modeled_cost(const CostCounters& c, const TimeModel& tm) {
    return modeled_cost(static_cast<double>(c.c1_rounds), static_cast<double>(c.c2_captions),
                        static_cast<double>(c.c3_qa), tm);
}

double expected_captions(double width, double rounds, double qa_calls) {
    if (!(rounds >= 1.0)) throw DomainError(fmt::format("rounds must be >= 1, got {}", rounds));
    return width + rounds - 1.0 - qa_calls;
}

std::vector<EvalRecord> batch_eval(const Corpus& corpus, const EvalSetting& setting,
                                   const PolicyFactory& make_policy,
                                   const BackendFactory& make_backend, const TimeModel& tm,
                                   const ScoreOptions& score, int jobs) {
    const auto tasks = enumerate_tasks(corpus);
    if (tasks.empty()) throw ConfigError("evaluation corpus has no questions");
    std::vector<EvalRecord> out(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), jobs, [&](int k) {
        const auto idx = static_cast<std::size_t>(k);
        const auto& video = corpus.videos[tasks[idx].video];
        const auto& qa = video.qa[tasks[idx].qa];
        EvalRecord& rec = out[idx];
        rec.setting = setting.name;
        rec.qa_id = qa.id;
        auto policy = make_policy(idx);
        auto backend = make_backend();
        EpisodeResult res;
        try {
            res = run_episode(video, qa, *policy, *backend, setting.episode);
        } catch (const TransportError& e) {
            res.outcome = Outcome::Aborted;
            res.diagnostic = e.what();
        }
        if (res.outcome == Outcome::Aborted) {
            rec.errored = true;
            rec.error = res.diagnostic;
            return;
        }
        rec.correct = res.correct;
        rec.rounds = res.cost.c1_rounds;
        rec.captions = res.cost.c2_captions;
        rec.qa_calls = res.cost.c3_qa;
        rec.modeled_time_s = modeled_cost(res.cost, tm);
        rec.measured_time_s = res.cost.round_time_s + res.cost.caption_time_s + res.cost.qa_time_s;
        const auto b = score_episode(res, video, qa, score);
        rec.r_loc = b.r_loc;
        rec.reward = b.total;
    });
    return out;
}

bool dominates(const ReportRow& other, const ReportRow& row) {
    return other.accuracy >= row.accuracy && other.modeled_cost_s <= row.modeled_cost_s &&
           (other.accuracy > row.accuracy || other.modeled_cost_s < row.modeled_cost_s);
}

std::vector<ReportRow> pareto_report(const std::vector<EvalRecord>& records) {
    std::vector<ReportRow> rows;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, fresh] = index.emplace(r.setting, rows.size());
        if (fresh) rows.push_back({.setting = r.setting});
        ReportRow& row = rows[it->second];
        if (r.errored) {
            ++row.errored;
            continue;
        }
        ++row.n;
        row.accuracy += r.correct ? 1.0 : 0.0;
        row.mean_rounds += static_cast<double>(r.rounds);
        row.mean_captions += static_cast<double>(r.captions);
        row.mean_qa += static_cast<double>(r.qa_calls);
        row.modeled_cost_s += r.modeled_time_s;
        row.measured_cost_s += r.measured_time_s;
    }
    for (auto& row : rows) {
        if (row.n == 0) continue;
        const double n = row.n;
        row.accuracy /= n;
        row.mean_rounds /= n;
        row.mean_captions /= n;
        row.mean_qa /= n;
        row.modeled_cost_s /= n;
        row.measured_cost_s /= n;
    }
    for (auto& row : rows) {
        row.dominated = std::any_of(rows.begin(), rows.end(), [&](const ReportRow& other) {
            return &other != &row && dominates(other, row);
        });
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return a.modeled_cost_s < b.modeled_cost_s;
    });
    return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::string out =
        "setting,n,accuracy,mean_rounds,mean_captions,mean_qa,modeled_cost_s,dominated,errored\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{}\n", r.setting, r.n,
                           r.accuracy, r.mean_rounds, r.mean_captions, r.mean_qa, r.modeled_cost_s,
                           r.dominated ? 1 : 0, r.errored);
    }
    return out;
}

std::string records_csv(const std::vector<EvalRecord>& records) {
    std::string out =
        "setting,qa_id,correct,errored,rounds,captions,qa_calls,modeled_time_s,r_loc,reward\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{},{},{},{},{:.6f},{:.6f},{:.6f}\n", r.setting, r.qa_id,
                           r.correct ? 1 : 0, r.errored ? 1 : 0, r.rounds, r.captions, r.qa_calls,
                           r.modeled_time_s, r.r_loc, r.reward);
    }
    return out;
}

}  // namespace videonav
