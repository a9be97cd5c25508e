#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videonav/corpus.hpp"
#include "videonav/orchestrator.hpp"
#include "videonav/reward.hpp"
#include "videonav/util.hpp"

namespace videonav {

inline constexpr const char* kFeatureSchema = "toy-features-v1";

/// Rows of the weight matrix.
enum class ActionKind : int { Caption = 0, QA = 1, Answer = 2 };
inline constexpr int kActionKinds = 3;

/// Per-candidate feature layout.
enum Feature : int {
    kBias = 0,
    kEvidence,      // distinct question tokens found / question tokens
    kMentionHits,   // best single-mention hits / question tokens
    kFocus,         // share of the best mention inside the node
    kBestSibling,   // ties the best mention hits among same-kind candidates
    kLevel,         // node level / depth
    kSiblingIndex,  // child index / (width - 1)
    kVisited,       // caption already retrieved / QA already asked
    kRoundsLeft,    // remaining rounds / budget
    kHasAnswer,     // some QA call named a choice
    kIdkRate,       // share of QA calls that returned "I don't know"
    kFeatureCount
};

struct ToyPolicyParams {
    int n_kinds = kActionKinds;
    int n_features = kFeatureCount;
    /// Row-major [n_kinds x n_features].
    std::vector<double> weights = std::vector<double>(kActionKinds * kFeatureCount, 0.0);
    double temperature = 1.0;

    double& w(int kind, int f) { return weights[static_cast<std::size_t>(kind * n_features + f)]; }
    double w(int kind, int f) const {
        return weights[static_cast<std::size_t>(kind * n_features + f)];
    }
};

/// Throws ConfigError on shape mismatch, non-finite weights or temperature <= 0.
void validate_toy_params(const ToyPolicyParams& p);

/// A legal move of the toy policy.
struct Candidate {
    ActionKind kind = ActionKind::Answer;
    NodePath path;
};

/// Caption of any child of a captioned non-leaf node (root children included),
/// VideoQA on any captioned leaf, and Answer once some VideoQA call was made.
/// Repeats stay in the set, flagged.
std::vector<Candidate> legal_candidates(const NavigatorState& state);

/// One feature row per candidate, entries in [-1, 1]. Deterministic.
std::vector<std::vector<double>> featurize(const NavigatorState& state,
                                           const std::vector<Candidate>& candidates);

/// Softmax over W[kind]·φ / temperature. Throws PolicyError on an empty set.
std::vector<double> action_distribution(const ToyPolicyParams& params,
                                        const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& kinds);

struct SampledAction {
    int index = 0;
    double logp = 0.0;
};

SampledAction sample_action(const std::vector<double>& dist, std::mt19937_64& rng);

/// (r - mean) / population std; all zeros when std < 1e-8. Throws DomainError for G < 2.
std::vector<double> group_advantages(const std::vector<double>& rewards);

/// min(ratio·A, clip(ratio, 1-ε, 1+ε)·A) with ratio = exp(logp_new - logp_old).
double clipped_surrogate(double logp_new, double logp_old, double advantage, double epsilon);

/// Mean over decisions of KL(π_params ‖ π_ref) on each legal set.
double kl_term(const ToyPolicyParams& params, const ToyPolicyParams& ref,
               const std::vector<DecisionTrace>& batch);

/// Learned navigation policy: samples from action_distribution.
class ToyPolicy final : public Policy {
public:
    ToyPolicy(ToyPolicyParams params, std::uint64_t seed);
    PolicyTurn act(const NavigatorState& state) override;

private:
    ToyPolicyParams params_;
    std::mt19937_64 rng_;
};

struct RolloutGroup {
    std::vector<EpisodeResult> episodes;
    std::vector<double> rewards;
};

struct TrainHyper {
    double epsilon = 0.2;
    double beta = 0.01;
    double lr = 0.3;
};

struct StepDiagnostics {
    double objective = 0.0;
    double surrogate = 0.0;
    double kl = 0.0;
    double mean_ratio = 1.0;
    double clip_fraction = 0.0;
    double grad_norm = 0.0;
};

/// Objective J = mean over groups of (1/G) Σ_i A_i-weighted clipped surrogate
/// summed over the episode's decisions, minus β·KL.
double grpo_objective(const ToyPolicyParams& params, const ToyPolicyParams& ref,
                      const std::vector<RolloutGroup>& groups, const TrainHyper& hyper,
                      StepDiagnostics* diag = nullptr);

/// Analytic dJ/dW, same layout as ToyPolicyParams::weights. Throws
/// TrainingError naming the group whose contribution is non-finite.
std::vector<double> grpo_gradient(const ToyPolicyParams& params, const ToyPolicyParams& ref,
                                  const std::vector<RolloutGroup>& groups,
                                  const TrainHyper& hyper);

/// One gradient-ascent step on J.
ToyPolicyParams train_step(const ToyPolicyParams& params, const ToyPolicyParams& ref,
                           const std::vector<RolloutGroup>& groups, const TrainHyper& hyper,
                           StepDiagnostics* diag = nullptr);

struct TrainConfig {
    int steps = 300;
    int group_size = 16;
    int groups_per_step = 4;
    TrainHyper hyper;
    EpisodeConfig episode;
    ScoreOptions score;
    std::uint64_t seed = 0;
    int jobs = 1;
    /// Log every n steps.
    int log_every = 10;
};

struct TrainLogRow {
    int step = 0;
    double objective = 0.0;
    double kl = 0.0;
    double mean_reward = 0.0;
    /// Share of the step's rollouts answered correctly.
    double accuracy = 0.0;
};

struct TrainResult {
    ToyPolicyParams params;
    std::vector<TrainLogRow> log;
};

/// Rollout-and-update loop against the mock backend. `ref` defaults to the
/// initial parameters.
TrainResult train(const Corpus& corpus, const ToyPolicyParams& init, const TrainConfig& cfg,
                  const std::function<void(const TrainLogRow&)>& on_log = {});

std::string train_log_csv(const std::vector<TrainLogRow>& rows);

struct PolicyEvalSummary {
    int n = 0;
    double accuracy = 0.0;
    double mean_rounds = 0.0;
    double mean_reward = 0.0;
};

/// Runs every task once with seeded sampling.
PolicyEvalSummary evaluate_toy(const Corpus& corpus, const ToyPolicyParams& params,
                               const EpisodeConfig& cfg, std::uint64_t seed, int jobs = 1);

nlohmann::json to_json(const ToyPolicyParams& p);
/// Throws ConfigError on a schema mismatch or malformed matrix.
ToyPolicyParams toy_params_from_json(const nlohmann::json& j);
void save_checkpoint(const ToyPolicyParams& p, const std::filesystem::path& path);
ToyPolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace videonav
