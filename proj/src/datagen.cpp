#include "videonav/datagen.hpp"

#include <fstream>

#include <fmt/format.h>

#include "videonav/errors.hpp"
#include "videonav/prompts.hpp"
#include "videonav/util.hpp"

namespace videonav {

namespace {

/// Re-emits recorded turns in order.
class ReplayPolicy final : public Policy {
public:
    explicit ReplayPolicy(const std::vector<Step>& steps) : steps_(steps) {}

    PolicyTurn act(const NavigatorState&) override {
        if (next_ >= steps_.size()) return {"", std::nullopt};
        return {steps_[next_++].reasoning, std::nullopt};
    }

private:
    const std::vector<Step>& steps_;
    std::size_t next_ = 0;
};

EpisodeConfig forced_first_level(EpisodeConfig cfg) {
    cfg.init = InitMode::FirstLevel;
    cfg.lenient_think = false;
    return cfg;
}

}  // namespace

Hint escalate_hint(const GroundedVideo& video, const GroundedQA& qa, int current_level,
                   const TreeConfig& cfg, int max_level) {
    const int level = current_level + 1;
    if (current_level < 0 || level > max_level) {
        throw DomainError(fmt::format("cannot escalate hint from level {} (max {})", current_level,
                                      max_level));
    }
    if (qa.clue.empty()) throw DomainError("cannot hint an empty clue");
    Hint h;
    h.level = level;
    h.segment = best_overlap_path(qa.clue, video.duration_s, cfg, level == 1 ? 1 : cfg.depth);
    const Interval iv = interval_of(h.segment, video.duration_s, cfg);
    const std::string detail =
        qa.hint_texts.empty()
            ? std::string()
            : qa.hint_texts[static_cast<std::size_t>(
                  std::min<int>(level - 1, static_cast<int>(qa.hint_texts.size()) - 1))];
    h.text = fmt::format("Hint (level {}): the relevant event lies in segment {} ({:.1f}s-{:.1f}s).",
                         level, h.segment.wire_string(), iv.start, iv.end);
    if (!detail.empty()) h.text += fmt::format(" Event: {}", detail);
    return h;
}

VerifyReport verify_trajectory(const Trajectory& traj, const GroundedVideo& video,
                               const GroundedQA& qa, const DatagenConfig& cfg) {
    const EpisodeResult& r = traj.result;
    if (r.outcome != Outcome::Answered) return {false, fmt::format("episode {}", to_string(r.outcome))};
    if (!r.answer || !r.answer->choice_index || *r.answer->choice_index != qa.answer_index) {
        return {false, "final answer does not match ground truth"};
    }
    for (std::size_t i = 0; i < r.episode.steps.size(); ++i) {
        const auto diags = validate_tags(r.episode.steps[i].reasoning);
        if (!diags.empty()) {
            return {false, fmt::format("turn {}: malformed tags: {}", i + 1, diags.front().message)};
        }
    }

    MockBackend mock;
    ReplayPolicy replay(r.episode.steps);
    const EpisodeResult again =
        run_episode(video, qa, replay, mock, forced_first_level(cfg.episode));
    for (const auto& rec : again.rounds) {
        if (rec.kind == "violation" || rec.kind == "format_error") {
            return {false, fmt::format("replay round {}: {} ({})", rec.round, rec.kind, rec.detail)};
        }
    }
    if (again.episode.steps.size() != r.episode.steps.size() || !again.correct) {
        return {false, "replay diverged from the recorded episode"};
    }
    if (cfg.check_observations) {
        if (again.episode.init_captions != r.episode.init_captions) {
            return {false, "replay produced different initial captions"};
        }
        for (std::size_t i = 0; i < r.episode.steps.size(); ++i) {
            if (again.episode.steps[i].observation != r.episode.steps[i].observation) {
                return {false, fmt::format("replay turn {}: observation differs", i + 1)};
            }
        }
    }
    return {true, ""};
}

Trajectory generate_trajectory(const GroundedVideo& video, const GroundedQA& qa,
                               const std::string& teacher_name, const TeacherFactory& make_teacher,
                               ToolBackend& backend, const DatagenConfig& cfg) {
    const EpisodeConfig ecfg = forced_first_level(cfg.episode);
    const TreeConfig tree =
        make_tree_config(video.duration_s, ecfg.depth, ecfg.leaf_target_s, ecfg.width_override);
    Trajectory traj;
    traj.video_id = video.id;
    traj.qa_id = qa.id;
    traj.teacher = teacher_name;
    std::optional<Hint> hint;
    for (int level = 0; level <= cfg.max_hint_level; ++level) {
        if (level > 0) {
            hint = escalate_hint(video, qa, level - 1, tree, cfg.max_hint_level);
            traj.hints.push_back(*hint);
        }
        auto teacher = make_teacher(level);
        traj.result = run_episode(video, qa, *teacher, backend, ecfg, hint);
        traj.hint_level_used = level;
        traj.attempts = level + 1;
        if (traj.result.outcome == Outcome::Aborted) {
            traj.verified = false;
            traj.diagnostic = "aborted: " + traj.result.diagnostic;
            return traj;
        }
        const VerifyReport v = verify_trajectory(traj, video, qa, cfg);
        traj.verified = v.ok;
        traj.diagnostic = v.reason;
        if (v.ok) return traj;
    }
    traj.diagnostic = fmt::format("unverified after {} attempt(s): {}", traj.attempts,
                                  traj.diagnostic);
    return traj;
}

nlohmann::ordered_json sft_record(const Trajectory& traj, const GroundedQA& qa, int width) {
    const EpisodeResult& r = traj.result;
    if (!traj.verified || !r.correct || !r.answer || r.answer->choice_index != qa.answer_index) {
        throw DomainError(fmt::format("trajectory {} is not verified", traj.qa_id));
    }
    nlohmann::ordered_json turns = nlohmann::ordered_json::array();
    for (const auto& m : render_messages(r.episode, prompts::system_prompt(width))) {
        turns.push_back({{"role", m.role}, {"tagged_text", m.content}});
    }
    nlohmann::ordered_json j;
    j["video_id"] = traj.video_id;
    j["question"] = qa.question;
    j["turns"] = std::move(turns);
    j["answer_index"] = qa.answer_index;
    j["steps"] = r.episode.steps.size();
    j["hint_level_used"] = traj.hint_level_used;
    return j;
}

nlohmann::ordered_json quarantine_record(const Trajectory& traj) {
    nlohmann::ordered_json j;
    j["video_id"] = traj.video_id;
    j["qa_id"] = traj.qa_id;
    j["teacher"] = traj.teacher;
    j["attempts"] = traj.attempts;
    j["hint_level_used"] = traj.hint_level_used;
    j["reason"] = traj.diagnostic;
    j["transcript"] = render_history(traj.result.episode);
    return j;
}

bool leaks_hint(const std::string& text, const std::vector<Hint>& hints) {
    for (const auto& h : hints) {
        if (!h.text.empty() && text.find(h.text) != std::string::npos) return true;
    }
    return false;
}

DatagenReport run_datagen(
    const Corpus& corpus, const std::string& teacher_name,
    const std::function<std::unique_ptr<Policy>(std::size_t task, int attempt)>& make_teacher,
    const std::function<std::unique_ptr<ToolBackend>()>& make_backend, const DatagenConfig& cfg,
    const DatagenTarget& target, int jobs) {
    const auto tasks = enumerate_tasks(corpus);
    if (tasks.empty()) throw ConfigError("corpus has no questions");
    DatagenReport report;
    report.trajectories.resize(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), jobs, [&](int k) {
        const auto idx = static_cast<std::size_t>(k);
        const auto& video = corpus.videos[tasks[idx].video];
        const auto& qa = video.qa[tasks[idx].qa];
        auto backend = make_backend();
        report.trajectories[idx] = generate_trajectory(
            video, qa, teacher_name, [&](int attempt) { return make_teacher(idx, attempt); },
            *backend, cfg);
    });

    std::ofstream sft(target.sft_path);
    if (!sft) throw ConfigError(fmt::format("cannot write {}", target.sft_path.string()));
    std::ofstream quarantine;
    if (!target.quarantine_path.empty()) {
        quarantine.open(target.quarantine_path);
        if (!quarantine) {
            throw ConfigError(fmt::format("cannot write {}", target.quarantine_path.string()));
        }
    }
    long steps = 0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        auto& traj = report.trajectories[k];
        const auto& video = corpus.videos[tasks[k].video];
        const auto& qa = video.qa[tasks[k].qa];
        if (traj.verified) {
            const std::string line = sft_record(traj, qa, traj.result.tree.width).dump();
            if (!leaks_hint(line, traj.hints)) {
                sft << line << '\n';
                ++report.emitted;
                steps += static_cast<long>(traj.result.episode.steps.size());
                continue;
            }
            traj.verified = false;
            traj.diagnostic = "hint text leaked into the transcript";
        }
        ++report.quarantined;
        if (quarantine.is_open()) quarantine << quarantine_record(traj).dump() << '\n';
    }
    report.mean_steps = report.emitted ? static_cast<double>(steps) / report.emitted : 0.0;
    return report;
}

}  // namespace videonav
