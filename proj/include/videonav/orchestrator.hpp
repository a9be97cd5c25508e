#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videonav/corpus.hpp"
#include "videonav/protocol.hpp"
#include "videonav/tools.hpp"
#include "videonav/tree.hpp"

namespace videonav {

inline constexpr int kDefaultBudget = 30;

enum class InitMode { RootCaption, FirstLevel };

const char* to_string(InitMode mode) noexcept;
InitMode init_mode_from_string(const std::string& s);

struct EpisodeConfig {
    int budget = kDefaultBudget;
    InitMode init = InitMode::FirstLevel;
    int depth = kDefaultDepth;
    double leaf_target_s = kDefaultLeafTargetS;
    std::optional<int> width_override;
    /// Accept turns with a missing or empty think block.
    bool lenient_think = false;
};

/// Clue hint placed in a teacher's private context. Never written to the episode.
struct Hint {
    int level = 0;
    std::string text;
    NodePath segment;
};

struct TokenizedMention {
    double time_s = 0.0;
    double end_s = 0.0;
    std::vector<std::string> tokens;
};

/// Everything a policy may look at before emitting its next turn.
struct NavigatorState {
    const GroundedVideo* video = nullptr;
    const GroundedQA* qa = nullptr;
    TreeConfig tree;
    int budget = kDefaultBudget;
    int round = 0;
    /// Nodes whose caption has been retrieved (including the initial ones).
    std::set<NodePath> visited;
    std::vector<NodePath> init_paths;
    std::map<NodePath, std::string> captions;
    /// Timestamped content tokens of each retrieved caption.
    std::map<NodePath, std::vector<TokenizedMention>> mentions;
    /// Distinct content tokens of the question.
    std::vector<std::string> question_tokens;
    std::map<NodePath, ToolResult> qa_results;
    /// Executed policy tool calls in order, repeats included.
    std::vector<ToolCall> visit_log;
    Episode history;
    std::optional<Hint> hint;

    const std::string& question() const { return qa->question; }
    const std::vector<std::string>& choices() const { return qa->choices; }
    int rounds_left() const noexcept { return budget - round; }
};

enum class ViolationKind { InvalidPath, ParentNotVisited, NotALeaf, CaptionNotRetrieved };

const char* to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::string message;
};

/// Caption of every level-1 node (FirstLevel) or of the root (RootCaption).
/// Charges one caption per seeded node to `meter`.
NavigatorState init_context(const GroundedVideo& video, const GroundedQA& qa,
                            const EpisodeConfig& cfg, ToolBackend& backend, CostMeter& meter);

/// GetCaption needs a visited parent (root children are always legal);
/// VideoQA needs a leaf whose caption was retrieved.
std::optional<Violation> enforce_legality(const NavigatorState& state, const ToolCall& call);

/// Per-decision record of the learned toy policy, consumed by the trainer.
struct DecisionTrace {
    /// One row per legal candidate action.
    std::vector<std::vector<double>> features;
    /// Action kind (row of the weight matrix) of each candidate.
    std::vector<int> kinds;
    int chosen = 0;
    double logp = 0.0;
};

struct PolicyTurn {
    std::string text;
    std::optional<DecisionTrace> decision;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual PolicyTurn act(const NavigatorState& state) = 0;
};

enum class Outcome { Answered, Unanswered, Aborted };

const char* to_string(Outcome outcome) noexcept;

struct RoundRecord {
    int round = 0;
    /// "caption", "qa", "answer", "violation" or "format_error".
    std::string kind;
    std::optional<NodePath> path;
    bool repeat = false;
    double wall_time_s = 0.0;
    std::string detail;
};

struct EpisodeResult {
    Episode episode;
    Outcome outcome = Outcome::Unanswered;
    std::optional<FinalAnswer> answer;
    bool correct = false;
    TreeConfig tree;
    std::set<NodePath> visited;
    std::vector<NodePath> init_paths;
    std::vector<ToolCall> visit_log;
    CostCounters cost;
    std::vector<RoundRecord> rounds;
    std::vector<DecisionTrace> decisions;
    std::string diagnostic;

    int rounds_used() const noexcept { return static_cast<int>(rounds.size()); }
    int tool_calls() const noexcept { return static_cast<int>(visit_log.size()); }
};

/// Runs policy -> parse -> legality -> tool -> history until an answer or the
/// round budget. Format errors and illegal calls consume a round and are fed
/// back as observations. Transport failures abort the episode.
EpisodeResult run_episode(const GroundedVideo& video, const GroundedQA& qa, Policy& policy,
                          ToolBackend& backend, const EpisodeConfig& cfg,
                          std::optional<Hint> hint = std::nullopt);

/// One-line episode log: transcript, visited paths (one-based), per-round
/// records and cost counters.
nlohmann::ordered_json episode_log(const EpisodeResult& result);

/// Next action of the clue-aware teacher: answer once a QA call named a
/// choice, else VideoQA on the visited leaf with most clue overlap, else the
/// caption of the unvisited legal node with most clue overlap.
Action scripted_oracle_action(const NavigatorState& state, const IntervalSet& clue);

/// Legal GetCaption targets that have not been visited, in path order.
std::vector<NodePath> caption_frontier(const NavigatorState& state);

class ScriptedOraclePolicy final : public Policy {
public:
    PolicyTurn act(const NavigatorState& state) override;
};

/// Oracle that, with probability `noise`, wastes the round on a random
/// unvisited legal caption instead.
class NoisyOraclePolicy final : public Policy {
public:
    NoisyOraclePolicy(double noise, std::uint64_t seed);
    PolicyTurn act(const NavigatorState& state) override;

private:
    double noise_;
    std::mt19937_64 rng_;
};

/// Clue-blind teacher: descends by keyword overlap between the question and
/// caption mentions, honoring a hint's segment when one is present.
class KeywordTeacherPolicy final : public Policy {
public:
    PolicyTurn act(const NavigatorState& state) override;
};

/// Keyword-overlap score of a candidate node given the captions seen so far.
/// Uses the node's own caption when retrieved, else the mentions of the
/// nearest captioned ancestor that overlap the node.
struct NodeEvidence {
    /// Distinct question tokens found in the mentions.
    int hits = 0;
    int question_tokens = 0;
    /// Best single-mention hit count.
    int best_mention_hits = 0;
    /// Share of the best mention's time span that lies inside the node.
    double focus = 0.0;
    double fraction() const noexcept {
        return question_tokens ? static_cast<double>(hits) / question_tokens : 0.0;
    }
};

NodeEvidence node_evidence(const NavigatorState& state, const NodePath& node);

}  // namespace videonav
