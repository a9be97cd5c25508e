#include "videonav/orchestrator.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "videonav/errors.hpp"

namespace videonav {

namespace {

constexpr double kOverlapTol = 1e-9;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<TokenizedMention> tokenize_caption(const std::string& caption) {
    std::vector<TokenizedMention> out;
    for (const auto& m : caption_mentions(caption)) {
        auto tokens = content_tokens(m.text);
        if (!tokens.empty()) out.push_back({m.time_s, m.end_s, std::move(tokens)});
    }
    return out;
}

void store_caption(NavigatorState& state, const NodePath& node, const std::string& text) {
    state.captions[node] = text;
    state.mentions[node] = tokenize_caption(text);
    state.visited.insert(node);
}

std::string caption_observation(const NodePath& node, const std::string& text) {
    if (node.is_root()) return fmt::format("Whole video: {}", text);
    return fmt::format("Segment {}: {}", node.wire_string(), text);
}

std::string qa_observation(const NodePath& node, const std::string& text) {
    return fmt::format("video_qa on segment {}: {}", node.wire_string(), text);
}

std::string describe_node(const NavigatorState& state, const NodePath& node) {
    const Interval iv = interval_of(node, state.video->duration_s, state.tree);
    return fmt::format("segment {} ({:.1f}s-{:.1f}s)", node.wire_string(), iv.start, iv.end);
}

/// Visited leaves that have not been sent to video_qa yet.
std::vector<NodePath> unasked_leaves(const NavigatorState& state) {
    std::vector<NodePath> out;
    for (const auto& p : state.visited) {
        if (p.level() == state.tree.depth && !state.qa_results.count(p)) out.push_back(p);
    }
    return out;
}

std::optional<int> known_answer(const NavigatorState& state) {
    for (const auto& [path, res] : state.qa_results) {
        if (res.answer_index) return res.answer_index;
    }
    return std::nullopt;
}

/// Deeper first, then smaller path.
bool prefer(const NodePath& a, const NodePath& b) {
    if (a.level() != b.level()) return a.level() > b.level();
    return a < b;
}

Action answer_action(std::string think, int choice) {
    return Action{std::move(think), FinalAnswer::choice(choice)};
}

}  // namespace

const char* to_string(InitMode mode) noexcept {
    return mode == InitMode::RootCaption ? "root" : "first_level";
}

InitMode init_mode_from_string(const std::string& s) {
    if (s == "root" || s == "root_caption") return InitMode::RootCaption;
    if (s == "first_level") return InitMode::FirstLevel;
    throw ConfigError(fmt::format("unknown init mode '{}' (root|first_level)", s));
}

const char* to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::InvalidPath: return "invalid path";
        case ViolationKind::ParentNotVisited: return "parent not yet captioned";
        case ViolationKind::NotALeaf: return "not a leaf";
        case ViolationKind::CaptionNotRetrieved: return "caption not yet retrieved";
    }
    return "unknown";
}

const char* to_string(Outcome outcome) noexcept {
    switch (outcome) {
        case Outcome::Answered: return "answered";
        case Outcome::Unanswered: return "unanswered";
        case Outcome::Aborted: return "aborted";
    }
    return "unknown";
}

NavigatorState init_context(const GroundedVideo& video, const GroundedQA& qa,
                            const EpisodeConfig& cfg, ToolBackend& backend, CostMeter& meter) {
    if (cfg.budget < 1) throw ConfigError(fmt::format("budget must be >= 1, got {}", cfg.budget));
    NavigatorState state;
    state.video = &video;
    state.qa = &qa;
    state.tree = make_tree_config(video.duration_s, cfg.depth, cfg.leaf_target_s,
                                  cfg.width_override);
    state.budget = cfg.budget;
    state.history.video_id = video.id;
    state.history.question = qa.question;
    state.history.choices = qa.choices;
    {
        auto tokens = content_tokens(qa.question);
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        state.question_tokens = std::move(tokens);
    }

    std::vector<NodePath> seeds;
    if (cfg.init == InitMode::RootCaption) {
        seeds.push_back(NodePath::root());
    } else {
        seeds = children(NodePath::root(), state.tree);
    }
    for (const auto& node : seeds) {
        const ToolResult r = backend.caption(video, node, state.tree);
        record_cost(meter, CostCategory::Caption, r.wall_time_s);
        store_caption(state, node, r.text);
        state.init_paths.push_back(node);
        state.history.init_captions.emplace_back(node, r.text);
    }
    return state;
}

std::optional<Violation> enforce_legality(const NavigatorState& state, const ToolCall& call) {
    if (!is_valid_path(call.path, state.tree)) {
        return Violation{ViolationKind::InvalidPath,
                         fmt::format("segment {} does not exist in a depth-{} tree of width {}",
                                     call.path.wire_string(), state.tree.depth, state.tree.width)};
    }
    if (call.kind == ToolKind::GetCaption) {
        const auto up = parent(call.path);
        if (up && !up->is_root() && !state.visited.count(*up)) {
            return Violation{ViolationKind::ParentNotVisited,
                             fmt::format("cannot caption {}: parent not yet captioned {}",
                                         call.path.wire_string(), up->wire_string())};
        }
        return std::nullopt;
    }
    if (call.path.level() != state.tree.depth) {
        return Violation{ViolationKind::NotALeaf,
                         fmt::format("video_qa on {}: not a leaf", call.path.wire_string())};
    }
    if (!state.visited.count(call.path)) {
        return Violation{ViolationKind::CaptionNotRetrieved,
                         fmt::format("video_qa on {}: caption not yet retrieved",
                                     call.path.wire_string())};
    }
    return std::nullopt;
}

EpisodeResult run_episode(const GroundedVideo& video, const GroundedQA& qa, Policy& policy,
                          ToolBackend& backend, const EpisodeConfig& cfg, std::optional<Hint> hint) {
    EpisodeResult result;
    CostMeter meter;
    NavigatorState state;
    try {
        state = init_context(video, qa, cfg, backend, meter);
    } catch (const TransportError& e) {
        result.outcome = Outcome::Aborted;
        result.diagnostic = e.what();
        result.cost = meter.snapshot();
        return result;
    } catch (const BackendError& e) {
        result.outcome = Outcome::Aborted;
        result.diagnostic = e.what();
        result.cost = meter.snapshot();
        return result;
    }
    state.hint = std::move(hint);

    ParseOptions opts;
    opts.width = state.tree.width;
    opts.depth = state.tree.depth;
    opts.choices = qa.choices;
    opts.lenient = cfg.lenient_think;

    try {
        while (state.round < state.budget) {
            const auto t0 = std::chrono::steady_clock::now();
            PolicyTurn turn = policy.act(state);
            record_cost(meter, CostCategory::Round, seconds_since(t0));
            ++state.round;
            if (turn.decision) result.decisions.push_back(std::move(*turn.decision));

            RoundRecord rec;
            rec.round = state.round;
            const ParseResult parsed = parse_action(turn.text, opts);
            if (!parsed.ok()) {
                rec.kind = "format_error";
                rec.detail = parsed.error->message;
                state.history.steps.push_back(
                    {turn.text, ObservationKind::Violation,
                     fmt::format("Format error at offset {}: {}. Reply with <think>...</think> "
                                 "followed by exactly one <tool> or <answer> block.",
                                 parsed.error->offset, parsed.error->message)});
                result.rounds.push_back(std::move(rec));
                continue;
            }
            const Action& action = *parsed.action;
            if (action.is_answer()) {
                const FinalAnswer& a = action.answer();
                rec.kind = "answer";
                rec.detail = a.choice_index ? choice_letter(*a.choice_index) : a.text;
                state.history.steps.push_back(
                    {turn.text, ObservationKind::Answer, fmt::format("Final answer: {}", rec.detail)});
                result.rounds.push_back(std::move(rec));
                result.outcome = Outcome::Answered;
                result.answer = a;
                result.correct = a.choice_index && *a.choice_index == qa.answer_index;
                break;
            }

            const ToolCall& call = action.tool();
            rec.path = call.path;
            if (auto violation = enforce_legality(state, call)) {
                rec.kind = "violation";
                rec.detail = to_string(violation->kind);
                state.history.steps.push_back({turn.text, ObservationKind::Violation,
                                               fmt::format("Invalid call: {}", violation->message)});
                result.rounds.push_back(std::move(rec));
                continue;
            }

            std::string observation;
            if (call.kind == ToolKind::GetCaption) {
                rec.kind = "caption";
                if (state.visited.count(call.path)) {
                    // Re-requests are served from cache: counted, not timed.
                    rec.repeat = true;
                    record_cost(meter, CostCategory::Caption, 0.0);
                    observation = caption_observation(call.path, state.captions.at(call.path));
                } else {
                    const ToolResult r = backend.caption(video, call.path, state.tree);
                    record_cost(meter, CostCategory::Caption, r.wall_time_s);
                    rec.wall_time_s = r.wall_time_s;
                    if (r.warning) rec.detail = *r.warning;
                    store_caption(state, call.path, r.text);
                    observation = caption_observation(call.path, r.text);
                }
            } else {
                rec.kind = "qa";
                if (auto hit = state.qa_results.find(call.path); hit != state.qa_results.end()) {
                    rec.repeat = true;
                    record_cost(meter, CostCategory::QA, 0.0);
                    observation = qa_observation(call.path, hit->second.text);
                } else {
                    const ToolResult r =
                        backend.video_qa(video, qa, call.path, *call.query, state.tree);
                    record_cost(meter, CostCategory::QA, r.wall_time_s);
                    rec.wall_time_s = r.wall_time_s;
                    state.qa_results.emplace(call.path, r);
                    observation = qa_observation(call.path, r.text);
                }
            }
            state.visit_log.push_back(call);
            state.history.steps.push_back({turn.text, ObservationKind::Tool, observation});
            result.rounds.push_back(std::move(rec));
        }
    } catch (const TransportError& e) {
        result.outcome = Outcome::Aborted;
        result.diagnostic = e.what();
    } catch (const BackendError& e) {
        result.outcome = Outcome::Aborted;
        result.diagnostic = e.what();
    }

    result.episode = std::move(state.history);
    result.tree = state.tree;
    result.visited = std::move(state.visited);
    result.init_paths = std::move(state.init_paths);
    result.visit_log = std::move(state.visit_log);
    result.cost = meter.snapshot();
    return result;
}

nlohmann::ordered_json episode_log(const EpisodeResult& r) {
    nlohmann::ordered_json j;
    j["video_id"] = r.episode.video_id;
    j["question"] = r.episode.question;
    j["outcome"] = to_string(r.outcome);
    j["correct"] = r.correct;
    if (r.answer) {
        j["answer"] = r.answer->choice_index ? choice_letter(*r.answer->choice_index) : r.answer->text;
    } else {
        j["answer"] = nullptr;
    }
    j["width"] = r.tree.width;
    j["depth"] = r.tree.depth;
    auto wires = [](const auto& paths) {
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (const auto& p : paths) out.push_back(p.wire_string());
        return out;
    };
    j["init_paths"] = wires(r.init_paths);
    j["visited"] = wires(r.visited);
    nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
    for (const auto& rec : r.rounds) {
        nlohmann::ordered_json x;
        x["round"] = rec.round;
        x["kind"] = rec.kind;
        x["path"] = rec.path ? nlohmann::ordered_json(rec.path->wire_string()) : nlohmann::ordered_json();
        x["repeat"] = rec.repeat;
        x["wall_time_s"] = rec.wall_time_s;
        x["detail"] = rec.detail;
        rounds.push_back(std::move(x));
    }
    j["rounds"] = std::move(rounds);
    j["cost"] = {{"c1_rounds", r.cost.c1_rounds},
                 {"c2_captions", r.cost.c2_captions},
                 {"c3_qa", r.cost.c3_qa},
                 {"round_time_s", r.cost.round_time_s},
                 {"caption_time_s", r.cost.caption_time_s},
                 {"qa_time_s", r.cost.qa_time_s}};
    j["transcript"] = render_history(r.episode);
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    return j;
}

std::vector<NodePath> caption_frontier(const NavigatorState& state) {
    std::set<NodePath> out;
    for (const auto& c : children(NodePath::root(), state.tree)) {
        if (!state.visited.count(c)) out.insert(c);
    }
    for (const auto& v : state.visited) {
        if (v.level() >= state.tree.depth) continue;
        for (int i = 0; i < state.tree.width; ++i) {
            auto c = v.child(i);
            if (!state.visited.count(c)) out.insert(std::move(c));
        }
    }
    return {out.begin(), out.end()};
}

Action scripted_oracle_action(const NavigatorState& state, const IntervalSet& clue) {
    const double T = state.video->duration_s;
    if (auto choice = known_answer(state)) {
        return answer_action(
            fmt::format("The video_qa tool identified option {}, which answers the question.",
                        choice_letter(*choice)),
            *choice);
    }

    auto best_of = [&](const std::vector<NodePath>& cands) -> std::optional<NodePath> {
        std::optional<NodePath> best;
        double best_ov = 0.0;
        for (const auto& c : cands) {
            const double ov = intersection_length(clue, interval_of(c, T, state.tree));
            if (ov <= kOverlapTol) continue;
            if (!best || ov > best_ov + kOverlapTol ||
                (ov > best_ov - kOverlapTol && prefer(c, *best))) {
                best = c;
                best_ov = std::max(best_ov, ov);
            }
        }
        return best;
    };

    if (auto leaf = best_of(unasked_leaves(state))) {
        return Action{fmt::format("The captions place the relevant event in {}. I will ask the "
                                  "video QA tool about it.",
                                  describe_node(state, *leaf)),
                      ToolCall::video_qa(*leaf, state.question())};
    }
    if (auto next = best_of(caption_frontier(state))) {
        return Action{fmt::format("The relevant event most likely lies within {}. I will zoom in "
                                  "on it.",
                                  describe_node(state, *next)),
                      ToolCall::caption(*next)};
    }
    return answer_action("No segment left to inspect; answering with the first option.", 0);
}

PolicyTurn ScriptedOraclePolicy::act(const NavigatorState& state) {
    return {render_action(scripted_oracle_action(state, state.qa->clue)), std::nullopt};
}

NoisyOraclePolicy::NoisyOraclePolicy(double noise, std::uint64_t seed)
    : noise_(noise), rng_(seed) {
    if (!(noise >= 0.0 && noise <= 1.0)) {
        throw ConfigError(fmt::format("noise {} outside [0, 1]", noise));
    }
}

PolicyTurn NoisyOraclePolicy::act(const NavigatorState& state) {
    const bool detour = std::bernoulli_distribution(noise_)(rng_);
    if (detour) {
        const auto frontier = caption_frontier(state);
        if (!frontier.empty()) {
            const auto& pick = frontier[std::uniform_int_distribution<std::size_t>(
                0, frontier.size() - 1)(rng_)];
            return {render_action(Action{
                        fmt::format("Let me also check {}.", describe_node(state, pick)),
                        ToolCall::caption(pick)}),
                    std::nullopt};
        }
    }
    return {render_action(scripted_oracle_action(state, state.qa->clue)), std::nullopt};
}

NodeEvidence node_evidence(const NavigatorState& state, const NodePath& node) {
    NodeEvidence ev;
    ev.question_tokens = static_cast<int>(state.question_tokens.size());
    if (state.question_tokens.empty()) return ev;

    const std::vector<TokenizedMention>* source = nullptr;
    for (int len = node.level(); len >= 0; --len) {
        if (auto it = state.mentions.find(node.prefix(len)); it != state.mentions.end()) {
            source = &it->second;
            break;
        }
    }
    if (!source) return ev;
    const Interval iv = interval_of(node, state.video->duration_s, state.tree);
    std::vector<char> found(state.question_tokens.size(), 0);
    std::vector<char> local(found.size());
    for (const auto& m : *source) {
        double inside = 1.0;
        if (m.end_s > m.time_s) {
            inside = overlap_length({m.time_s, m.end_s}, iv) / (m.end_s - m.time_s);
        } else if (!(m.time_s >= iv.start && m.time_s < iv.end)) {
            inside = 0.0;
        }
        if (inside <= 0.0) continue;
        std::fill(local.begin(), local.end(), 0);
        for (const auto& tok : m.tokens) {
            const auto it = std::lower_bound(state.question_tokens.begin(),
                                             state.question_tokens.end(), tok);
            if (it != state.question_tokens.end() && *it == tok) {
                local[static_cast<std::size_t>(it - state.question_tokens.begin())] = 1;
            }
        }
        const int hits = static_cast<int>(std::count(local.begin(), local.end(), 1));
        if (hits == 0) continue;
        for (std::size_t i = 0; i < found.size(); ++i) found[i] |= local[i];
        if (hits > ev.best_mention_hits || (hits == ev.best_mention_hits && inside > ev.focus)) {
            ev.best_mention_hits = hits;
            ev.focus = inside;
        }
    }
    ev.hits = static_cast<int>(std::count(found.begin(), found.end(), 1));
    return ev;
}

PolicyTurn KeywordTeacherPolicy::act(const NavigatorState& state) {
    if (auto choice = known_answer(state)) {
        return {render_action(answer_action(
                    fmt::format("The clip answer points to option {}.", choice_letter(*choice)),
                    *choice)),
                std::nullopt};
    }
    const std::optional<NodePath> scope =
        state.hint ? std::optional<NodePath>(state.hint->segment) : std::nullopt;
    auto in_scope = [&](const NodePath& p) {
        if (!scope) return true;
        const int common = std::min(p.level(), scope->level());
        return p.prefix(common) == scope->prefix(common);
    };

    auto best_by_evidence = [&](const std::vector<NodePath>& cands) -> std::optional<NodePath> {
        std::optional<NodePath> best;
        std::pair<int, double> best_score{0, 0.0};
        for (const auto& c : cands) {
            if (!in_scope(c)) continue;
            const NodeEvidence ev = node_evidence(state, c);
            const std::pair<int, double> score{ev.best_mention_hits, ev.focus};
            // A hint narrows the search enough that zero-evidence nodes are still worth a look.
            if (score.first == 0 && !scope) continue;
            if (!best || score > best_score || (score == best_score && prefer(c, *best))) {
                best = c;
                best_score = score;
            }
        }
        return best;
    };

    if (auto leaf = best_by_evidence(unasked_leaves(state))) {
        return {render_action(Action{
                    fmt::format("The captions of {} mention what the question asks about. I will "
                                "check the clip directly.",
                                describe_node(state, *leaf)),
                    ToolCall::video_qa(*leaf, state.question())}),
                std::nullopt};
    }
    if (auto next = best_by_evidence(caption_frontier(state))) {
        return {render_action(Action{
                    fmt::format("The question's key objects seem to appear around {}. I will "
                                "look closer.",
                                describe_node(state, *next)),
                    ToolCall::caption(*next)}),
                std::nullopt};
    }
    return {render_action(answer_action(
                "The captions give no further lead; I will guess the first option.", 0)),
            std::nullopt};
}

}  // namespace videonav
