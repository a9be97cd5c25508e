#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "videonav/config.hpp"
#include "videonav/errors.hpp"
#include "videonav/util.hpp"

using namespace videonav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitTransport = 2;

struct Flags {
    std::string config;
    std::string corpus;
    std::string policy;
    std::string backend;
    std::string init;
    std::string out;
    std::optional<int> budget;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool json = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--corpus", f.corpus, "Corpus JSONL path");
    cmd->add_option("--policy", f.policy, "oracle | noisy:<p> | keyword | random | llm | toy:<checkpoint>");
    cmd->add_option("--backend", f.backend, "mock | http");
    cmd->add_option("--budget", f.budget, "Maximum reasoning rounds");
    cmd->add_option("--init", f.init, "root | first_level");
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--jobs", f.jobs, "Worker threads (default: logical cores)");
    cmd->add_option("--out", f.out, "Output path");
    cmd->add_flag("--json", f.json, "Machine-readable output and errors");
}

RunConfig resolve(const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (!f.corpus.empty()) cfg.corpus = f.corpus;
    if (!f.policy.empty()) cfg.policy = f.policy;
    if (!f.backend.empty()) cfg.backend = f.backend;
    if (f.budget) cfg.episode.budget = *f.budget;
    if (!f.init.empty()) cfg.episode.init = init_mode_from_string(f.init);
    if (f.seed) cfg.seed = f.seed;
    if (f.jobs) cfg.jobs = *f.jobs;
    if (!f.out.empty()) cfg.out = f.out;
    if (cfg.jobs <= 0) cfg.jobs = default_jobs();
    if (cfg.episode.budget < 1) {
        throw ConfigError(fmt::format("--budget must be >= 1, got {}", cfg.episode.budget));
    }
    validate_weights(cfg.score.weights);
    validate_time_model(cfg.time_model);
    return cfg;
}

std::uint64_t require_seed(const RunConfig& cfg) {
    if (!cfg.seed) throw ConfigError("--seed is required for this command");
    std::cerr << "seed: " << *cfg.seed << '\n';
    return *cfg.seed;
}

Corpus require_corpus(const RunConfig& cfg) {
    if (!cfg.corpus) throw ConfigError("--corpus is required");
    return load_corpus(*cfg.corpus);
}

void write_output(const std::optional<std::string>& path, const std::string& text) {
    if (!path) {
        std::cout << text;
        return;
    }
    std::ofstream out(*path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("--out: cannot write {}", *path));
    out << text;
}

int cmd_gen_corpus(const Flags& f, int videos) {
    RunConfig cfg = resolve(f);
    if (videos > 0) cfg.videos = videos;
    const auto seed = require_seed(cfg);
    const Corpus corpus = generate_corpus(seed, cfg.videos, cfg.corpus_params);
    write_output(cfg.out, dump_corpus(corpus));
    std::cerr << fmt::format("{} videos, {} questions\n", corpus.videos.size(), corpus.qa_count());
    return kExitOk;
}

int cmd_run(const Flags& f, int item) {
    const RunConfig cfg = resolve(f);
    const Corpus corpus = require_corpus(cfg);
    const auto tasks = enumerate_tasks(corpus);
    if (item < 0 || static_cast<std::size_t>(item) >= tasks.size()) {
        throw ConfigError(fmt::format("--item {} outside [0, {})", item, tasks.size()));
    }
    const PolicySpec spec = parse_policy_spec(cfg.policy);
    const std::uint64_t seed = is_stochastic(spec) ? require_seed(cfg) : cfg.seed.value_or(0);
    const auto& task = tasks[static_cast<std::size_t>(item)];
    const auto& video = corpus.videos[task.video];
    const auto& qa = video.qa[task.qa];
    auto policy = policy_factory(cfg, seed)(static_cast<std::size_t>(item));
    auto backend = backend_factory(cfg)();
    const EpisodeResult res = run_episode(video, qa, *policy, *backend, cfg.episode);
    if (res.outcome == Outcome::Aborted) throw TransportError(res.diagnostic);
    const RewardBreakdown rb = score_episode(res, video, qa, cfg.score);
    const double cost = modeled_cost(res.cost, cfg.time_model);

    if (f.json) {
        nlohmann::ordered_json j = episode_log(res);
        j["qa_id"] = qa.id;
        j["reward"] = {{"r_ans", rb.r_ans},
                       {"r_loc", rb.r_loc},
                       {"r_repeat", rb.r_repeat},
                       {"total", rb.total}};
        j["modeled_time_s"] = cost;
        write_output(cfg.out, j.dump(2) + "\n");
        return kExitOk;
    }
    std::string text = render_history(res.episode);
    text += fmt::format("\noutcome: {} ({})\n", to_string(res.outcome),
                        res.correct ? "correct" : "incorrect");
    text += fmt::format("reward: r_ans={:.4f} r_loc={:.4f} r_repeat={:.4f} total={:.4f}\n",
                        rb.r_ans, rb.r_loc, rb.r_repeat, rb.total);
    text += fmt::format("cost: rounds={} captions={} qa_calls={} modeled_time_s={:.3f}\n",
                        res.cost.c1_rounds, res.cost.c2_captions, res.cost.c3_qa, cost);
    write_output(cfg.out, text);
    return kExitOk;
}

int cmd_eval(const Flags& f, const std::string& budgets_flag, const std::string& records_path) {
    RunConfig cfg = resolve(f);
    const Corpus corpus = require_corpus(cfg);
    std::vector<int> budgets = budgets_flag.empty() ? cfg.budgets : parse_budgets(budgets_flag);
    if (budgets.empty()) budgets.push_back(cfg.episode.budget);
    const PolicySpec spec = parse_policy_spec(cfg.policy);
    const std::uint64_t seed = is_stochastic(spec) ? require_seed(cfg) : cfg.seed.value_or(0);

    const auto make_policy = policy_factory(cfg, seed);
    const auto make_backend = backend_factory(cfg);
    std::vector<EvalRecord> all;
    for (int b : budgets) {
        EvalSetting setting{fmt::format("budget={}", b), cfg.episode};
        setting.episode.budget = b;
        auto recs = batch_eval(corpus, setting, make_policy, make_backend, cfg.time_model,
                               cfg.score, cfg.jobs);
        all.insert(all.end(), recs.begin(), recs.end());
    }
    const auto rows = pareto_report(all);
    write_output(cfg.out, report_csv(rows));
    if (!records_path.empty()) write_output(records_path, records_csv(all));

    int errored = 0;
    for (const auto& r : all) errored += r.errored ? 1 : 0;
    if (errored > 0) {
        std::cerr << fmt::format("{} of {} items errored\n", errored, all.size());
        if (errored == static_cast<int>(all.size())) return kExitTransport;
    }
    return kExitOk;
}

std::vector<EvalRecord> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("--records: cannot read {}", path));
    std::string line;
    std::getline(in, line);
    if (line.rfind("setting,qa_id,correct,errored,rounds,captions,qa_calls,modeled_time_s", 0) != 0) {
        throw ParseError(0, fmt::format("{}: not a records CSV", path));
    }
    std::vector<EvalRecord> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() != 10) {
            throw ParseError(row, fmt::format("{}: expected 10 columns, got {}", path, cells.size()));
        }
        try {
            EvalRecord r;
            r.setting = cells[0];
            r.qa_id = cells[1];
            r.correct = cells[2] == "1";
            r.errored = cells[3] == "1";
            r.rounds = std::stol(cells[4]);
            r.captions = std::stol(cells[5]);
            r.qa_calls = std::stol(cells[6]);
            r.modeled_time_s = std::stod(cells[7]);
            r.r_loc = std::stod(cells[8]);
            r.reward = std::stod(cells[9]);
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError(row, fmt::format("{}: {}", path, e.what()));
        }
    }
    return out;
}

int cmd_report(const Flags& f, const std::vector<std::string>& record_paths) {
    const RunConfig cfg = resolve(f);
    if (record_paths.empty()) throw ConfigError("--records is required");
    std::vector<EvalRecord> all;
    for (const auto& p : record_paths) {
        auto recs = read_records(p);
        all.insert(all.end(), recs.begin(), recs.end());
    }
    write_output(cfg.out, report_csv(pareto_report(all)));
    return kExitOk;
}

int cmd_train(const Flags& f, const std::string& eval_corpus, const std::string& log_path,
              int steps) {
    RunConfig cfg = resolve(f);
    if (steps > 0) cfg.train_steps = steps;
    const Corpus corpus = require_corpus(cfg);
    if (!cfg.out) throw ConfigError("--out (checkpoint path) is required");
    const auto seed = require_seed(cfg);

    TrainConfig tc;
    tc.steps = cfg.train_steps;
    tc.group_size = cfg.group_size;
    tc.groups_per_step = cfg.groups_per_step;
    tc.hyper = cfg.hyper;
    tc.episode = cfg.episode;
    tc.score = cfg.score;
    tc.seed = seed;
    tc.jobs = cfg.jobs;
    tc.log_every = cfg.log_every;
    ToyPolicyParams init;
    init.temperature = cfg.temperature;

    const auto result = train(corpus, init, tc, [&](const TrainLogRow& r) {
        std::cerr << fmt::format("step {:>4}  objective {:+.4f}  kl {:.4f}  reward {:.3f}  acc {:.3f}\n",
                                 r.step, r.objective, r.kl, r.mean_reward, r.accuracy);
    });
    save_checkpoint(result.params, *cfg.out);
    const std::string csv = train_log_csv(result.log);
    if (!log_path.empty()) write_output(log_path, csv);

    if (!eval_corpus.empty()) {
        const Corpus held_out = load_corpus(eval_corpus);
        const auto before = evaluate_toy(held_out, init, cfg.episode, seed, cfg.jobs);
        const auto after = evaluate_toy(held_out, result.params, cfg.episode, seed, cfg.jobs);
        std::cout << fmt::format("untrained: accuracy {:.3f}, mean rounds {:.2f}\n",
                                 before.accuracy, before.mean_rounds);
        std::cout << fmt::format("trained:   accuracy {:.3f}, mean rounds {:.2f}\n", after.accuracy,
                                 after.mean_rounds);
    }
    return kExitOk;
}

int cmd_datagen(const Flags& f, const std::string& teacher, const std::string& quarantine,
                std::optional<int> max_hint) {
    RunConfig cfg = resolve(f);
    if (!teacher.empty()) cfg.teacher = teacher;
    if (max_hint) cfg.max_hint_level = *max_hint;
    const Corpus corpus = require_corpus(cfg);
    if (!cfg.out) throw ConfigError("--out (SFT file path) is required");

    RunConfig teacher_cfg = cfg;
    teacher_cfg.policy = cfg.teacher;
    const PolicySpec spec = parse_policy_spec(cfg.teacher);
    const std::uint64_t seed = is_stochastic(spec) ? require_seed(cfg) : cfg.seed.value_or(0);
    const auto make_policy = policy_factory(teacher_cfg, seed);

    DatagenConfig dc;
    dc.episode = cfg.episode;
    dc.max_hint_level = cfg.max_hint_level;
    dc.check_observations = cfg.backend == "mock";
    DatagenTarget target{*cfg.out, quarantine.empty() ? *cfg.out + ".quarantine.jsonl" : quarantine};
    const auto report = run_datagen(
        corpus, cfg.teacher,
        [&](std::size_t task, int attempt) {
            return make_policy(static_cast<std::size_t>(mix_seed(task, static_cast<std::uint64_t>(attempt))));
        },
        backend_factory(cfg), dc, target, cfg.jobs);

    int by_level[8] = {};
    for (const auto& t : report.trajectories) {
        if (t.verified) ++by_level[std::min(t.hint_level_used, 7)];
    }
    std::cout << fmt::format("emitted {} trajectories, quarantined {}, mean steps {:.2f}\n",
                             report.emitted, report.quarantined, report.mean_steps);
    for (int l = 0; l <= cfg.max_hint_level && l < 8; ++l) {
        std::cout << fmt::format("  hint level {}: {}\n", l, by_level[l]);
    }
    return kExitOk;
}

void print_error(bool json, const char* kind, const std::string& message, int code) {
    if (json) {
        nlohmann::ordered_json j;
        j["error"] = kind;
        j["message"] = message;
        j["exit_code"] = code;
        std::cerr << j.dump() << '\n';
    } else {
        std::cerr << "error: " << message << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical long-video navigation: corpus, training, evaluation"};
    app.require_subcommand(1);

    Flags f;
    int videos = 0;
    int item = 0;
    int steps = 0;
    std::string budgets, records_out, eval_corpus, log_path, teacher, quarantine;
    std::vector<std::string> record_paths;
    std::optional<int> max_hint;

    auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic grounded corpus");
    add_common(gen, f);
    gen->add_option("--videos", videos, "Number of videos");

    auto* dg = app.add_subcommand("datagen", "Generate verified trajectories as SFT data");
    add_common(dg, f);
    dg->add_option("--teacher", teacher, "oracle | keyword | llm");
    dg->add_option("--quarantine", quarantine, "Log of rejected trajectories");
    dg->add_option("--max-hint-level", max_hint, "Hint escalation depth");

    auto* tr = app.add_subcommand("train", "Train the toy navigation policy");
    add_common(tr, f);
    tr->add_option("--eval-corpus", eval_corpus, "Held-out corpus to compare before and after");
    tr->add_option("--log", log_path, "Training log CSV");
    tr->add_option("--steps", steps, "Training steps");

    auto* run = app.add_subcommand("run", "Run one episode and print its transcript");
    add_common(run, f);
    run->add_option("--item", item, "Question index in corpus order");

    auto* ev = app.add_subcommand("eval", "Evaluate a policy over budgets");
    add_common(ev, f);
    ev->add_option("--budgets", budgets, "Comma-separated round budgets, e.g. 5,10,30");
    ev->add_option("--records", records_out, "Per-item records CSV");

    auto* rep = app.add_subcommand("report", "Pareto report from records CSVs");
    add_common(rep, f);
    rep->add_option("--records", record_paths, "Records CSV files")->expected(1, -1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error(f.json, "usage", e.what(), kExitValidation);
        return kExitValidation;
    }

    try {
        if (gen->parsed()) return cmd_gen_corpus(f, videos);
        if (dg->parsed()) return cmd_datagen(f, teacher, quarantine, max_hint);
        if (tr->parsed()) return cmd_train(f, eval_corpus, log_path, steps);
        if (run->parsed()) return cmd_run(f, item);
        if (ev->parsed()) return cmd_eval(f, budgets, records_out);
        if (rep->parsed()) return cmd_report(f, record_paths);
    } catch (const TransportError& e) {
        print_error(f.json, "transport", e.what(), kExitTransport);
        return kExitTransport;
    } catch (const BackendError& e) {
        print_error(f.json, "backend", e.what(), kExitTransport);
        return kExitTransport;
    } catch (const Error& e) {
        print_error(f.json, "validation", e.what(), kExitValidation);
        return kExitValidation;
    } catch (const std::exception& e) {
        print_error(f.json, "internal", e.what(), kExitValidation);
        return kExitValidation;
    }
    return kExitValidation;
}
