#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "videonav/config.hpp"
#include "videonav/corpus.hpp"
#include "videonav/errors.hpp"
#include "videonav/evalcost.hpp"
#include "videonav/grpo.hpp"
#include "videonav/orchestrator.hpp"
#include "videonav/protocol.hpp"
#include "videonav/reward.hpp"
#include "videonav/tree.hpp"
#include "videonav/util.hpp"

namespace py = pybind11;
using namespace videonav;

namespace {

using Span = std::pair<double, double>;

IntervalSet to_set(const std::vector<Span>& spans) {
    std::vector<Interval> v;
    v.reserve(spans.size());
    for (const auto& [a, b] : spans) v.push_back({a, b});
    return IntervalSet(v);
}

std::vector<Span> from_set(const IntervalSet& s) {
    std::vector<Span> out;
    for (const auto& iv : s) out.emplace_back(iv.start, iv.end);
    return out;
}

py::dict action_dict(const Action& a) {
    py::dict d;
    d["think"] = a.think;
    if (a.is_answer()) {
        d["kind"] = "answer";
        d["choice_index"] = a.answer().choice_index;
        d["text"] = a.answer().text;
    } else {
        const ToolCall& c = a.tool();
        d["kind"] = to_string(c.kind);
        d["path"] = c.path.indices();
        d["query"] = c.query;
    }
    return d;
}

const GroundedVideo& video_of(const Corpus& corpus, std::size_t task, std::size_t* qa) {
    const auto tasks = enumerate_tasks(corpus);
    if (task >= tasks.size()) {
        throw py::index_error("task " + std::to_string(task) + " out of range (" +
                              std::to_string(tasks.size()) + " tasks)");
    }
    *qa = tasks[task].qa;
    return corpus.videos[tasks[task].video];
}

RunConfig run_config(const std::string& policy, int budget, const std::string& init) {
    RunConfig cfg;
    cfg.policy = policy;
    cfg.episode.budget = budget;
    cfg.episode.init = init_mode_from_string(init);
    return cfg;
}

py::dict episode_dict(const EpisodeResult& r, const GroundedVideo& video, const GroundedQA& qa) {
    const auto score = score_episode(r, video, qa);
    py::dict d;
    d["outcome"] = to_string(r.outcome);
    d["correct"] = r.correct;
    d["rounds"] = r.cost.c1_rounds;
    d["captions"] = r.cost.c2_captions;
    d["qa_calls"] = r.cost.c3_qa;
    d["modeled_time_s"] = modeled_cost(r.cost);
    d["r_loc"] = score.r_loc;
    d["reward"] = score.total;
    d["transcript"] = render_history(r.episode);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hierarchical long-video navigation: tree, protocol, rewards, training and evaluation.";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<PathError>(m, "PathError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    m.def("derive_width", &derive_width, py::arg("duration_s"), py::arg("depth") = kDefaultDepth,
          py::arg("leaf_target_s") = kDefaultLeafTargetS);
    m.def(
        "interval_of",
        [](const std::vector<int>& path, double duration_s, int depth) {
            const auto cfg = make_tree_config(duration_s, depth);
            const Interval iv = interval_of(NodePath(path), duration_s, cfg);
            return Span{iv.start, iv.end};
        },
        py::arg("path"), py::arg("duration_s"), py::arg("depth") = kDefaultDepth);
    m.def("frame_budget", &frame_budget, py::arg("level"));
    m.def("resolution", &resolution, py::arg("level"));
    m.def("caption_word_budget", &caption_word_budget, py::arg("level"));

    m.def(
        "location_reward",
        [](const std::vector<Span>& model, const std::vector<Span>& gt) {
            return location_reward(to_set(model), to_set(gt));
        },
        py::arg("model"), py::arg("gt"));
    m.def(
        "merge_intervals", [](const std::vector<Span>& spans) { return from_set(to_set(spans)); },
        py::arg("spans"));
    m.def(
        "modeled_cost",
        [](double c1, double c2, double c3, double t1, double t2, double t3) {
            return modeled_cost(c1, c2, c3, TimeModel{t1, t2, t3});
        },
        py::arg("c1"), py::arg("c2"), py::arg("c3"), py::arg("t1") = 2.5, py::arg("t2") = 7.0,
        py::arg("t3") = 2.7);
    m.def("expected_captions", &expected_captions, py::arg("width"), py::arg("rounds"),
          py::arg("qa_calls"));

    m.def("group_advantages", &group_advantages, py::arg("rewards"));
    m.def("clipped_surrogate", &clipped_surrogate, py::arg("logp_new"), py::arg("logp_old"),
          py::arg("advantage"), py::arg("epsilon") = 0.2);

    m.def(
        "parse_action",
        [](const std::string& text, int width, const std::vector<std::string>& choices,
           bool lenient) -> py::dict {
            ParseOptions opts;
            opts.width = width;
            opts.choices = choices;
            opts.lenient = lenient;
            const auto r = parse_action(text, opts);
            if (r.ok()) return action_dict(*r.action);
            py::dict d;
            d["kind"] = "error";
            d["code"] = to_string(r.error->code);
            d["message"] = r.error->message;
            d["offset"] = r.error->offset;
            return d;
        },
        py::arg("text"), py::arg("width") = 0, py::arg("choices") = std::vector<std::string>{},
        py::arg("lenient") = false);
    m.def(
        "render_tool_call",
        [](const std::string& tool, const std::vector<int>& path, std::optional<std::string> query) {
            if (tool == "get_caption") return render_tool_call(ToolCall::caption(NodePath(path)));
            if (tool == "video_qa" && query) {
                return render_tool_call(ToolCall::video_qa(NodePath(path), *query));
            }
            throw ConfigError("tool must be get_caption, or video_qa with a query");
        },
        py::arg("tool"), py::arg("path"), py::arg("query") = std::nullopt);

    py::class_<Corpus>(m, "Corpus")
        .def_static(
            "generate",
            [](std::uint64_t seed, int n_videos, double duration_min_s, double duration_max_s) {
                CorpusParams p;
                p.duration_min_s = duration_min_s;
                p.duration_max_s = duration_max_s;
                return generate_corpus(seed, n_videos, p);
            },
            py::arg("seed"), py::arg("n_videos"), py::arg("duration_min_s") = 600.0,
            py::arg("duration_max_s") = 7200.0)
        .def_static("loads", &parse_corpus, py::arg("text"))
        .def_static(
            "load", [](const std::string& path) { return load_corpus(path); }, py::arg("path"))
        .def("dumps", [](const Corpus& c) { return dump_corpus(c); })
        .def("save", [](const Corpus& c, const std::string& path) { save_corpus(c, path); },
             py::arg("path"))
        .def("__len__", [](const Corpus& c) { return c.videos.size(); })
        .def_property_readonly("qa_count", &Corpus::qa_count)
        .def_property_readonly("durations", [](const Corpus& c) {
            std::vector<double> out;
            for (const auto& v : c.videos) out.push_back(v.duration_s);
            return out;
        });

    m.def(
        "run_episode",
        [](const Corpus& corpus, std::size_t task, const std::string& policy, int budget,
           const std::string& init, std::uint64_t seed) {
            std::size_t qi = 0;
            const GroundedVideo& video = video_of(corpus, task, &qi);
            const GroundedQA& qa = video.qa[qi];
            const RunConfig cfg = run_config(policy, budget, init);
            auto p = policy_factory(cfg, seed)(task);
            MockBackend mock;
            py::gil_scoped_release release;
            const auto r = run_episode(video, qa, *p, mock, cfg.episode);
            py::gil_scoped_acquire acquire;
            return episode_dict(r, video, qa);
        },
        py::arg("corpus"), py::arg("task"), py::arg("policy") = "oracle",
        py::arg("budget") = kDefaultBudget, py::arg("init") = "first_level", py::arg("seed") = 0);

    m.def(
        "evaluate",
        [](const Corpus& corpus, const std::string& policy, const std::vector<int>& budgets,
           std::uint64_t seed, int jobs) {
            RunConfig cfg = run_config(policy, kDefaultBudget, "first_level");
            const auto make_policy = policy_factory(cfg, seed);
            const auto make_backend = backend_factory(cfg);
            std::vector<EvalRecord> all;
            py::gil_scoped_release release;
            for (int b : budgets) {
                EvalSetting s{"budget=" + std::to_string(b), cfg.episode};
                s.episode.budget = b;
                auto recs = batch_eval(corpus, s, make_policy, make_backend, {}, {}, jobs);
                all.insert(all.end(), recs.begin(), recs.end());
            }
            return report_csv(pareto_report(all));
        },
        py::arg("corpus"), py::arg("policy") = "oracle", py::arg("budgets") = std::vector<int>{30},
        py::arg("seed") = 0, py::arg("jobs") = 1);

    m.def(
        "train_toy",
        [](const Corpus& corpus, int steps, std::uint64_t seed, int jobs, double lr) {
            TrainConfig cfg;
            cfg.steps = steps;
            cfg.seed = seed;
            cfg.jobs = jobs;
            cfg.hyper.lr = lr;
            py::gil_scoped_release release;
            const auto result = train(corpus, ToyPolicyParams{}, cfg);
            py::gil_scoped_acquire acquire;
            return to_json(result.params).dump();
        },
        py::arg("corpus"), py::arg("steps") = 300, py::arg("seed") = 0, py::arg("jobs") = 1,
        py::arg("lr") = TrainHyper{}.lr,
        "Trains the toy policy from uniform weights and returns the checkpoint JSON.");
    m.def(
        "evaluate_toy",
        [](const Corpus& corpus, const std::string& checkpoint_json, std::uint64_t seed, int jobs) {
            const auto params = checkpoint_json.empty()
                                    ? ToyPolicyParams{}
                                    : toy_params_from_json(nlohmann::json::parse(checkpoint_json));
            py::gil_scoped_release release;
            const auto s = evaluate_toy(corpus, params, EpisodeConfig{}, seed, jobs);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["n"] = s.n;
            d["accuracy"] = s.accuracy;
            d["mean_rounds"] = s.mean_rounds;
            d["mean_reward"] = s.mean_reward;
            return d;
        },
        py::arg("corpus"), py::arg("checkpoint_json") = "", py::arg("seed") = 0, py::arg("jobs") = 1);
}
