#include "videonav/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "videonav/errors.hpp"

namespace videonav {

namespace {

constexpr double kStdEps = 1e-8;

std::vector<double> logits_of(const ToyPolicyParams& p,
                              const std::vector<std::vector<double>>& features,
                              const std::vector<int>& kinds) {
    std::vector<double> z(features.size());
    for (std::size_t j = 0; j < features.size(); ++j) {
        const auto& phi = features[j];
        if (static_cast<int>(phi.size()) != p.n_features) {
            throw PolicyError(fmt::format("feature row {} has {} entries, expected {}", j,
                                          phi.size(), p.n_features));
        }
        const int k = kinds[j];
        if (k < 0 || k >= p.n_kinds) throw PolicyError(fmt::format("action kind {} out of range", k));
        double s = 0.0;
        for (int f = 0; f < p.n_features; ++f) s += p.w(k, f) * phi[static_cast<std::size_t>(f)];
        z[j] = s / p.temperature;
    }
    return z;
}

std::vector<double> log_softmax(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    std::vector<double> out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] - lse;
    return out;
}

std::vector<double> decision_logp(const ToyPolicyParams& p, const DecisionTrace& d) {
    if (d.features.empty()) throw PolicyError("decision has no legal candidates");
    return log_softmax(logits_of(p, d.features, d.kinds));
}

double kl_of(const std::vector<double>& logp, const std::vector<double>& logq) {
    double kl = 0.0;
    for (std::size_t j = 0; j < logp.size(); ++j) kl += std::exp(logp[j]) * (logp[j] - logq[j]);
    return std::max(kl, 0.0);
}

/// Adds scale · Σ_j c_j dz_j/dW to grad, where z_j = W[kind_j]·φ_j / τ.
void accumulate(std::vector<double>& grad, const ToyPolicyParams& p, const DecisionTrace& d,
                const std::vector<double>& c, double scale) {
    const double s = scale / p.temperature;
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[j] == 0.0) continue;
        const auto row = static_cast<std::size_t>(d.kinds[j] * p.n_features);
        for (int f = 0; f < p.n_features; ++f) {
            grad[row + static_cast<std::size_t>(f)] += s * c[j] * d.features[j][static_cast<std::size_t>(f)];
        }
    }
}

std::size_t decision_count(const std::vector<RolloutGroup>& groups) {
    std::size_t n = 0;
    for (const auto& g : groups) {
        for (const auto& e : g.episodes) n += e.decisions.size();
    }
    return n;
}

void check_groups(const std::vector<RolloutGroup>& groups) {
    if (groups.empty()) throw DomainError("no rollout groups");
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].episodes.size() != groups[g].rewards.size()) {
            throw TrainingError(g, "episode and reward counts differ");
        }
    }
}

std::optional<int> known_answer(const NavigatorState& state) {
    for (const auto& [path, res] : state.qa_results) {
        if (res.answer_index) return res.answer_index;
    }
    return std::nullopt;
}

}  // namespace

void validate_toy_params(const ToyPolicyParams& p) {
    if (p.n_kinds != kActionKinds || p.n_features != kFeatureCount) {
        throw ConfigError(fmt::format("weight matrix must be {}x{}, got {}x{}", kActionKinds,
                                      kFeatureCount, p.n_kinds, p.n_features));
    }
    if (p.weights.size() != static_cast<std::size_t>(p.n_kinds * p.n_features)) {
        throw ConfigError(fmt::format("weight matrix has {} entries, expected {}",
                                      p.weights.size(), p.n_kinds * p.n_features));
    }
    for (double v : p.weights) {
        if (!std::isfinite(v)) throw ConfigError("weight matrix has a non-finite entry");
    }
    if (!(p.temperature > 0.0) || !std::isfinite(p.temperature)) {
        throw ConfigError(fmt::format("temperature must be positive, got {}", p.temperature));
    }
}

std::vector<Candidate> legal_candidates(const NavigatorState& state) {
    std::vector<Candidate> out;
    const auto add_children = [&](const NodePath& p) {
        for (int i = 0; i < state.tree.width; ++i) out.push_back({ActionKind::Caption, p.child(i)});
    };
    if (!state.visited.count(NodePath::root())) add_children(NodePath::root());
    for (const auto& v : state.visited) {
        if (v.level() < state.tree.depth) add_children(v);
    }
    for (const auto& v : state.visited) {
        if (v.level() == state.tree.depth) out.push_back({ActionKind::QA, v});
    }
    if (!state.qa_results.empty() || out.empty()) out.push_back({ActionKind::Answer, {}});
    return out;
}

std::vector<std::vector<double>> featurize(const NavigatorState& state,
                                           const std::vector<Candidate>& candidates) {
    if (candidates.empty()) throw PolicyError("no legal candidates to featurize");
    const double qn = static_cast<double>(state.question_tokens.size());
    const double rounds_left =
        state.budget > 0 ? static_cast<double>(state.rounds_left()) / state.budget : 0.0;
    const double has_answer = known_answer(state) ? 1.0 : 0.0;
    int idk = 0;
    for (const auto& [path, res] : state.qa_results) idk += res.is_idk ? 1 : 0;
    const double idk_rate =
        state.qa_results.empty() ? 0.0 : static_cast<double>(idk) / state.qa_results.size();

    std::vector<NodeEvidence> ev(candidates.size());
    int best_hits[kActionKinds] = {0, 0, 0};
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto& c = candidates[j];
        if (c.kind == ActionKind::Answer) continue;
        ev[j] = node_evidence(state, c.path);
        auto& b = best_hits[static_cast<int>(c.kind)];
        b = std::max(b, ev[j].best_mention_hits);
    }

    std::vector<std::vector<double>> rows(candidates.size(),
                                          std::vector<double>(kFeatureCount, 0.0));
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto& c = candidates[j];
        auto& r = rows[j];
        r[kBias] = 1.0;
        r[kRoundsLeft] = rounds_left;
        r[kHasAnswer] = has_answer;
        r[kIdkRate] = idk_rate;
        if (c.kind == ActionKind::Answer) continue;
        const auto& e = ev[j];
        r[kEvidence] = qn > 0 ? e.hits / qn : 0.0;
        r[kMentionHits] = qn > 0 ? e.best_mention_hits / qn : 0.0;
        r[kFocus] = e.focus;
        r[kBestSibling] =
            e.best_mention_hits > 0 && e.best_mention_hits == best_hits[static_cast<int>(c.kind)]
                ? 1.0
                : 0.0;
        r[kLevel] = static_cast<double>(c.path.level()) / state.tree.depth;
        r[kSiblingIndex] =
            state.tree.width > 1 ? static_cast<double>(c.path.back()) / (state.tree.width - 1) : 0.0;
        r[kVisited] = c.kind == ActionKind::Caption ? (state.visited.count(c.path) ? 1.0 : 0.0)
                                                    : (state.qa_results.count(c.path) ? 1.0 : 0.0);
    }
    return rows;
}

std::vector<double> action_distribution(const ToyPolicyParams& params,
                                        const std::vector<std::vector<double>>& features,
                                        const std::vector<int>& kinds) {
    if (features.empty()) throw PolicyError("empty legal action set");
    if (features.size() != kinds.size()) throw PolicyError("features and kinds differ in length");
    auto lp = log_softmax(logits_of(params, features, kinds));
    for (auto& v : lp) v = std::exp(v);
    return lp;
}

SampledAction sample_action(const std::vector<double>& dist, std::mt19937_64& rng) {
    if (dist.empty()) throw PolicyError("empty legal action set");
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    std::size_t pick = dist.size() - 1;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        acc += dist[j];
        if (u < acc) {
            pick = j;
            break;
        }
    }
    while (dist[pick] <= 0.0 && pick > 0) --pick;
    return {static_cast<int>(pick), std::log(dist[pick])};
}

std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2) {
        throw DomainError(fmt::format("group needs at least 2 rewards, got {}", rewards.size()));
    }
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> out(rewards.size(), 0.0);
    if (sd < kStdEps) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
    return out;
}

double clipped_surrogate(double logp_new, double logp_old, double advantage, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw DomainError(fmt::format("epsilon must lie in (0, 1), got {}", epsilon));
    }
    const double ratio = std::exp(logp_new - logp_old);
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

double kl_term(const ToyPolicyParams& params, const ToyPolicyParams& ref,
               const std::vector<DecisionTrace>& batch) {
    if (params.n_features != ref.n_features || params.n_kinds != ref.n_kinds) {
        throw DomainError("policy and reference shapes differ");
    }
    if (batch.empty()) return 0.0;
    double total = 0.0;
    for (const auto& d : batch) total += kl_of(decision_logp(params, d), decision_logp(ref, d));
    return total / static_cast<double>(batch.size());
}

ToyPolicy::ToyPolicy(ToyPolicyParams params, std::uint64_t seed)
    : params_(std::move(params)), rng_(seed) {
    validate_toy_params(params_);
}

PolicyTurn ToyPolicy::act(const NavigatorState& state) {
    const auto cands = legal_candidates(state);
    DecisionTrace trace;
    trace.features = featurize(state, cands);
    trace.kinds.reserve(cands.size());
    for (const auto& c : cands) trace.kinds.push_back(static_cast<int>(c.kind));
    const auto dist = action_distribution(params_, trace.features, trace.kinds);
    const auto pick = sample_action(dist, rng_);
    trace.chosen = pick.index;
    trace.logp = pick.logp;

    const Candidate& c = cands[static_cast<std::size_t>(pick.index)];
    Action action;
    switch (c.kind) {
        case ActionKind::Caption:
            action = {fmt::format("Segment {} may hold the event; requesting its caption.",
                                  c.path.wire_string()),
                      ToolCall::caption(c.path)};
            break;
        case ActionKind::QA:
            action = {fmt::format("Asking the clip tool about segment {}.", c.path.wire_string()),
                      ToolCall::video_qa(c.path, state.question())};
            break;
        case ActionKind::Answer: {
            if (auto known = known_answer(state)) {
                action = {fmt::format("The clip tool named option {}.", choice_letter(*known)),
                          FinalAnswer::choice(*known)};
            } else {
                const int n = static_cast<int>(state.choices().size());
                const int guess = std::uniform_int_distribution<int>(0, n - 1)(rng_);
                action = {"No direct evidence yet; committing to a guess.",
                          FinalAnswer::choice(guess)};
            }
            break;
        }
    }
    return {render_action(action), std::move(trace)};
}

double grpo_objective(const ToyPolicyParams& params, const ToyPolicyParams& ref,
                      const std::vector<RolloutGroup>& groups, const TrainHyper& hyper,
                      StepDiagnostics* diag) {
    check_groups(groups);
    double surrogate = 0.0;
    double kl = 0.0;
    double ratio_sum = 0.0;
    std::size_t clipped = 0;
    const std::size_t n_dec = decision_count(groups);
    for (const auto& g : groups) {
        const auto adv = group_advantages(g.rewards);
        double group_sum = 0.0;
        for (std::size_t i = 0; i < g.episodes.size(); ++i) {
            for (const auto& d : g.episodes[i].decisions) {
                const auto lp = decision_logp(params, d);
                const double lp_new = lp[static_cast<std::size_t>(d.chosen)];
                group_sum += clipped_surrogate(lp_new, d.logp, adv[i], hyper.epsilon);
                const double ratio = std::exp(lp_new - d.logp);
                ratio_sum += ratio;
                if (ratio < 1.0 - hyper.epsilon || ratio > 1.0 + hyper.epsilon) ++clipped;
                kl += kl_of(lp, decision_logp(ref, d));
            }
        }
        surrogate += group_sum / static_cast<double>(g.episodes.size());
    }
    surrogate /= static_cast<double>(groups.size());
    if (n_dec > 0) kl /= static_cast<double>(n_dec);
    const double objective = surrogate - hyper.beta * kl;
    if (diag) {
        diag->objective = objective;
        diag->surrogate = surrogate;
        diag->kl = kl;
        diag->mean_ratio = n_dec ? ratio_sum / static_cast<double>(n_dec) : 1.0;
        diag->clip_fraction = n_dec ? static_cast<double>(clipped) / n_dec : 0.0;
    }
    return objective;
}

std::vector<double> grpo_gradient(const ToyPolicyParams& params, const ToyPolicyParams& ref,
                                  const std::vector<RolloutGroup>& groups,
                                  const TrainHyper& hyper) {
    check_groups(groups);
    std::vector<double> grad(params.weights.size(), 0.0);
    const std::size_t n_dec = decision_count(groups);
    const double kl_scale = n_dec ? -hyper.beta / static_cast<double>(n_dec) : 0.0;
    const double group_scale = 1.0 / static_cast<double>(groups.size());

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const auto adv = group_advantages(g.rewards);
        std::vector<double> local(grad.size(), 0.0);
        const double ep_scale = group_scale / static_cast<double>(g.episodes.size());
        for (std::size_t i = 0; i < g.episodes.size(); ++i) {
            for (const auto& d : g.episodes[i].decisions) {
                const auto lp = decision_logp(params, d);
                const std::size_t a = static_cast<std::size_t>(d.chosen);
                const double ratio = std::exp(lp[a] - d.logp);
                const double A = adv[i];
                const bool active = A >= 0.0 ? ratio <= 1.0 + hyper.epsilon
                                             : ratio >= 1.0 - hyper.epsilon;
                std::vector<double> c(lp.size());
                if (active && A != 0.0) {
                    // d(ratio·A)/dz_j = ratio·A·(1[j=a] - p_j)
                    for (std::size_t j = 0; j < lp.size(); ++j) {
                        c[j] = ratio * A * ((j == a ? 1.0 : 0.0) - std::exp(lp[j]));
                    }
                    accumulate(local, params, d, c, ep_scale);
                }
                if (hyper.beta != 0.0) {
                    const auto lq = decision_logp(ref, d);
                    const double kl = kl_of(lp, lq);
                    for (std::size_t j = 0; j < lp.size(); ++j) {
                        c[j] = std::exp(lp[j]) * ((lp[j] - lq[j]) - kl);
                    }
                    accumulate(local, params, d, c, kl_scale);
                }
            }
        }
        for (std::size_t k = 0; k < grad.size(); ++k) {
            if (!std::isfinite(local[k])) {
                throw TrainingError(gi, "non-finite gradient");
            }
            grad[k] += local[k];
        }
    }
    return grad;
}

ToyPolicyParams train_step(const ToyPolicyParams& params, const ToyPolicyParams& ref,
                           const std::vector<RolloutGroup>& groups, const TrainHyper& hyper,
                           StepDiagnostics* diag) {
    const auto grad = grpo_gradient(params, ref, groups, hyper);
    if (diag) grpo_objective(params, ref, groups, hyper, diag);
    ToyPolicyParams next = params;
    double norm = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) {
        next.weights[k] += hyper.lr * grad[k];
        norm += grad[k] * grad[k];
    }
    if (diag) diag->grad_norm = std::sqrt(norm);
    return next;
}

namespace {

EpisodeResult rollout(const GroundedVideo& video, const GroundedQA& qa,
                      const ToyPolicyParams& params, const EpisodeConfig& cfg,
                      std::uint64_t seed) {
    ToyPolicy policy(params, seed);
    MockBackend backend;
    return run_episode(video, qa, policy, backend, cfg);
}

}  // namespace

TrainResult train(const Corpus& corpus, const ToyPolicyParams& init, const TrainConfig& cfg,
                  const std::function<void(const TrainLogRow&)>& on_log) {
    validate_toy_params(init);
    if (cfg.steps < 0) throw ConfigError("steps must be >= 0");
    if (cfg.group_size < 2) throw ConfigError("group_size must be >= 2");
    if (cfg.groups_per_step < 1) throw ConfigError("groups_per_step must be >= 1");
    const auto tasks = enumerate_tasks(corpus);
    if (tasks.empty()) throw ConfigError("training corpus has no questions");

    TrainResult out;
    out.params = init;
    const ToyPolicyParams ref = init;
    std::mt19937_64 task_rng(mix_seed(cfg.seed, 0x7a5c));
    const int G = cfg.group_size;

    for (int step = 1; step <= cfg.steps; ++step) {
        std::vector<TaskRef> picked(static_cast<std::size_t>(cfg.groups_per_step));
        for (auto& t : picked) {
            t = tasks[std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(task_rng)];
        }
        std::vector<RolloutGroup> groups(picked.size());
        for (auto& g : groups) {
            g.episodes.resize(static_cast<std::size_t>(G));
            g.rewards.resize(static_cast<std::size_t>(G));
        }
        const ToyPolicyParams snapshot = out.params;
        parallel_for(cfg.groups_per_step * G, cfg.jobs, [&](int k) {
            const auto gi = static_cast<std::size_t>(k / G);
            const auto i = static_cast<std::size_t>(k % G);
            const auto& video = corpus.videos[picked[gi].video];
            const auto& qa = video.qa[picked[gi].qa];
            auto res = rollout(video, qa, snapshot, cfg.episode,
                               mix_seed(cfg.seed, static_cast<std::uint64_t>(step), gi, i));
            groups[gi].rewards[i] = score_episode(res, video, qa, cfg.score).total;
            groups[gi].episodes[i] = std::move(res);
        });

        StepDiagnostics diag;
        out.params = train_step(out.params, ref, groups, cfg.hyper, &diag);

        if (step % std::max(1, cfg.log_every) == 0 || step == cfg.steps) {
            TrainLogRow row;
            row.step = step;
            row.objective = diag.objective;
            row.kl = diag.kl;
            double reward = 0.0;
            int correct = 0;
            for (const auto& g : groups) {
                reward += std::accumulate(g.rewards.begin(), g.rewards.end(), 0.0);
                for (const auto& e : g.episodes) correct += e.correct ? 1 : 0;
            }
            const double n = static_cast<double>(groups.size() * static_cast<std::size_t>(G));
            row.mean_reward = reward / n;
            row.accuracy = correct / n;
            out.log.push_back(row);
            if (on_log) on_log(row);
        }
    }
    return out;
}

std::string train_log_csv(const std::vector<TrainLogRow>& rows) {
    std::string out = "step,objective,kl,mean_reward,accuracy\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.step, r.objective, r.kl,
                           r.mean_reward, r.accuracy);
    }
    return out;
}

PolicyEvalSummary evaluate_toy(const Corpus& corpus, const ToyPolicyParams& params,
                               const EpisodeConfig& cfg, std::uint64_t seed, int jobs) {
    const auto tasks = enumerate_tasks(corpus);
    std::vector<EpisodeResult> results(tasks.size());
    std::vector<double> rewards(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), jobs, [&](int k) {
        const auto& t = tasks[static_cast<std::size_t>(k)];
        const auto& video = corpus.videos[t.video];
        const auto& qa = video.qa[t.qa];
        auto res = rollout(video, qa, params, cfg, mix_seed(seed, static_cast<std::uint64_t>(k)));
        rewards[static_cast<std::size_t>(k)] = score_episode(res, video, qa).total;
        results[static_cast<std::size_t>(k)] = std::move(res);
    });
    PolicyEvalSummary s;
    s.n = static_cast<int>(tasks.size());
    if (s.n == 0) return s;
    for (std::size_t k = 0; k < results.size(); ++k) {
        s.accuracy += results[k].correct ? 1.0 : 0.0;
        s.mean_rounds += results[k].rounds_used();
        s.mean_reward += rewards[k];
    }
    s.accuracy /= s.n;
    s.mean_rounds /= s.n;
    s.mean_reward /= s.n;
    return s;
}

nlohmann::json to_json(const ToyPolicyParams& p) {
    nlohmann::json rows = nlohmann::json::array();
    for (int k = 0; k < p.n_kinds; ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (int f = 0; f < p.n_features; ++f) row.push_back(p.w(k, f));
        rows.push_back(std::move(row));
    }
    return {{"schema", kFeatureSchema},
            {"kinds", p.n_kinds},
            {"features", p.n_features},
            {"temperature", p.temperature},
            {"weights", std::move(rows)}};
}

ToyPolicyParams toy_params_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != kFeatureSchema) {
            throw ConfigError(fmt::format("checkpoint schema '{}' does not match '{}'",
                                          j.at("schema").get<std::string>(), kFeatureSchema));
        }
        ToyPolicyParams p;
        p.n_kinds = j.at("kinds").get<int>();
        p.n_features = j.at("features").get<int>();
        p.temperature = j.at("temperature").get<double>();
        const auto& rows = j.at("weights");
        p.weights.clear();
        for (const auto& row : rows) {
            if (row.size() != static_cast<std::size_t>(p.n_features)) {
                throw ConfigError("checkpoint weight row has the wrong length");
            }
            for (const auto& v : row) p.weights.push_back(v.get<double>());
        }
        validate_toy_params(p);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("malformed checkpoint: {}", e.what()));
    }
}

void save_checkpoint(const ToyPolicyParams& p, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write checkpoint {}", path.string()));
    out << to_json(p).dump(2) << '\n';
}

ToyPolicyParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read checkpoint {}", path.string()));
    try {
        return toy_params_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("checkpoint {} is not valid JSON: {}", path.string(), e.what()));
    }
}

}  // namespace videonav
