#pragma once

#include <vector>

#include "videonav/interval_set.hpp"
#include "videonav/orchestrator.hpp"
#include "videonav/protocol.hpp"
#include "videonav/tree.hpp"

namespace videonav {

struct RewardWeights {
    double w_ans = 1.0;
    double w_loc = 0.5;
    /// Multiplies the (non-positive) repeat penalty.
    double w_repeat = 0.1;
};

/// Throws ConfigError unless w_ans > 0 and the other weights are finite and >= 0.
void validate_weights(const RewardWeights& w);

/// Union of the intervals of `requested`. With `exclude_init`, paths listed in
/// `init_paths` are left out unless the policy requested them itself.
IntervalSet model_interval_set(const std::vector<NodePath>& requested,
                               const std::vector<NodePath>& init_paths, double duration_s,
                               const TreeConfig& cfg, bool exclude_init = true);

/// F1 of coverage |m∩g|/|g| and precision |m∩g|/|m| (0 for an empty model set).
/// Throws DomainError when `gt` is empty.
double location_reward(const IntervalSet& model, const IntervalSet& gt);

/// Minus the number of calls that repeat an earlier (kind, path) pair.
double repeat_penalty(const std::vector<ToolCall>& log);
/// Path-only variant: minus the number of entries seen earlier in the log.
double repeat_penalty(const std::vector<NodePath>& log);

/// w_ans·r_ans + w_loc·r_loc + w_repeat·r_repeat. Throws DomainError when an
/// input is outside its range.
double composite_reward(double r_ans, double r_loc, double r_repeat, const RewardWeights& w = {});

struct RewardBreakdown {
    double r_ans = 0.0;
    double r_loc = 0.0;
    double r_repeat = 0.0;
    double total = 0.0;
    IntervalSet model_set;
};

struct ScoreOptions {
    RewardWeights weights;
    bool exclude_init = true;
};

RewardBreakdown score_episode(const EpisodeResult& result, const GroundedVideo& video,
                              const GroundedQA& qa, const ScoreOptions& opts = {});

}  // namespace videonav
