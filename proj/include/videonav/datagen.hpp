#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videonav/corpus.hpp"
#include "videonav/orchestrator.hpp"

namespace videonav {

inline constexpr int kDefaultMaxHintLevel = 2;

using HintState = Hint;

/// Hint for level current_level + 1: level 1 names the level-1 segment with
/// the most clue overlap, deeper levels the best leaf plus the event text.
/// Throws DomainError past `max_level`.
Hint escalate_hint(const GroundedVideo& video, const GroundedQA& qa, int current_level,
                   const TreeConfig& cfg, int max_level = kDefaultMaxHintLevel);

/// Builds a fresh teacher for each attempt.
using TeacherFactory = std::function<std::unique_ptr<Policy>(int attempt)>;

struct DatagenConfig {
    EpisodeConfig episode;
    int max_hint_level = kDefaultMaxHintLevel;
    /// Compare replayed observations with the recorded ones (mock backends only).
    bool check_observations = true;
};

struct Trajectory {
    std::string video_id;
    std::string qa_id;
    std::string teacher;
    EpisodeResult result;
    int hint_level_used = 0;
    int attempts = 0;
    bool verified = false;
    std::string diagnostic;
    /// Hints shown to the teacher over all attempts.
    std::vector<Hint> hints;
};

struct VerifyReport {
    bool ok = false;
    std::string reason;
};

/// Correct final answer, well-formed tags in every turn, and a replay against
/// the mock backend with no illegal call and (optionally) identical observations.
VerifyReport verify_trajectory(const Trajectory& traj, const GroundedVideo& video,
                               const GroundedQA& qa, const DatagenConfig& cfg);

/// Runs the teacher, restarting from scratch with an escalated hint until the
/// trajectory verifies or escalation is exhausted. First-level init is forced.
Trajectory generate_trajectory(const GroundedVideo& video, const GroundedQA& qa,
                               const std::string& teacher_name, const TeacherFactory& make_teacher,
                               ToolBackend& backend, const DatagenConfig& cfg);

/// One SFT line: {video_id, question, turns, answer_index, steps, hint_level_used}.
/// Throws DomainError for an unverified trajectory.
nlohmann::ordered_json sft_record(const Trajectory& traj, const GroundedQA& qa, int width);

/// Quarantine line for a rejected trajectory.
nlohmann::ordered_json quarantine_record(const Trajectory& traj);

/// Substring audit: true when any hint text shown to the teacher appears in `text`.
bool leaks_hint(const std::string& text, const std::vector<Hint>& hints);

struct DatagenReport {
    std::vector<Trajectory> trajectories;
    int emitted = 0;
    int quarantined = 0;
    double mean_steps = 0.0;
};

struct DatagenTarget {
    std::filesystem::path sft_path;
    std::filesystem::path quarantine_path;
};

/// Generates one trajectory per question (in parallel), then writes verified,
/// leak-free ones to the SFT file and the rest to the quarantine log.
DatagenReport run_datagen(const Corpus& corpus, const std::string& teacher_name,
                          const std::function<std::unique_ptr<Policy>(std::size_t task, int attempt)>& make_teacher,
                          const std::function<std::unique_ptr<ToolBackend>()>& make_backend,
                          const DatagenConfig& cfg, const DatagenTarget& target, int jobs = 1);

}  // namespace videonav
