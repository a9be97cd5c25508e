#include "videonav/reward.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "videonav/errors.hpp"

namespace videonav {

void validate_weights(const RewardWeights& w) {
    if (!(w.w_ans > 0.0) || !std::isfinite(w.w_ans)) {
        throw ConfigError(fmt::format("w_ans must be positive, got {}", w.w_ans));
    }
    if (!(w.w_loc >= 0.0) || !std::isfinite(w.w_loc)) {
        throw ConfigError(fmt::format("w_loc must be >= 0, got {}", w.w_loc));
    }
    if (!(w.w_repeat >= 0.0) || !std::isfinite(w.w_repeat)) {
        throw ConfigError(fmt::format("w_repeat must be >= 0, got {}", w.w_repeat));
    }
}

IntervalSet model_interval_set(const std::vector<NodePath>& requested,
                               const std::vector<NodePath>& init_paths, double duration_s,
                               const TreeConfig& cfg, bool exclude_init) {
    const std::set<NodePath> init(init_paths.begin(), init_paths.end());
    std::vector<Interval> spans;
    spans.reserve(requested.size() + (exclude_init ? 0 : init.size()));
    for (const auto& p : requested) spans.push_back(interval_of(p, duration_s, cfg));
    if (!exclude_init) {
        for (const auto& p : init) spans.push_back(interval_of(p, duration_s, cfg));
    }
    return IntervalSet(spans);
}

double location_reward(const IntervalSet& model, const IntervalSet& gt) {
    const double g = gt.total_length();
    if (!(g > 0.0)) throw DomainError("location reward needs a non-empty ground-truth set");
    const double m = model.total_length();
    const double inter = intersection_length(model, gt);
    const double cov = inter / g;
    const double pre = m > 0.0 ? inter / m : 0.0;
    if (cov + pre <= 0.0) return 0.0;
    return std::clamp(2.0 * cov * pre / (cov + pre), 0.0, 1.0);
}

double repeat_penalty(const std::vector<ToolCall>& log) {
    std::set<std::pair<ToolKind, NodePath>> seen;
    int repeats = 0;
    for (const auto& c : log) {
        if (!seen.emplace(c.kind, c.path).second) ++repeats;
    }
    return -static_cast<double>(repeats);
}

double repeat_penalty(const std::vector<NodePath>& log) {
    std::set<NodePath> seen;
    int repeats = 0;
    for (const auto& p : log) {
        if (!seen.insert(p).second) ++repeats;
    }
    return -static_cast<double>(repeats);
}

double composite_reward(double r_ans, double r_loc, double r_repeat, const RewardWeights& w) {
    if (r_ans != 0.0 && r_ans != 1.0) {
        throw DomainError(fmt::format("r_ans must be 0 or 1, got {}", r_ans));
    }
    if (!(r_loc >= 0.0 && r_loc <= 1.0)) {
        throw DomainError(fmt::format("r_loc must lie in [0, 1], got {}", r_loc));
    }
    if (!(r_repeat <= 0.0)) {
        throw DomainError(fmt::format("r_repeat must be <= 0, got {}", r_repeat));
    }
    return w.w_ans * r_ans + w.w_loc * r_loc + w.w_repeat * r_repeat;
}

RewardBreakdown score_episode(const EpisodeResult& result, const GroundedVideo& video,
                              const GroundedQA& qa, const ScoreOptions& opts) {
    RewardBreakdown b;
    b.r_ans = result.correct ? 1.0 : 0.0;
    std::vector<NodePath> requested;
    requested.reserve(result.visit_log.size());
    for (const auto& c : result.visit_log) requested.push_back(c.path);
    b.model_set = model_interval_set(requested, result.init_paths, video.duration_s, result.tree,
                                     opts.exclude_init);
    b.r_loc = location_reward(b.model_set, qa.clue);
    // Initial captions count as already requested, so asking for them again is a repeat.
    std::vector<ToolCall> log;
    log.reserve(result.init_paths.size() + result.visit_log.size());
    for (const auto& p : result.init_paths) log.push_back(ToolCall::caption(p));
    log.insert(log.end(), result.visit_log.begin(), result.visit_log.end());
    b.r_repeat = repeat_penalty(log);
    b.total = composite_reward(b.r_ans, b.r_loc, b.r_repeat, opts.weights);
    return b;
}

}  // namespace videonav
