#include "videonav/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "videonav/errors.hpp"
#include "videonav/llm_policy.hpp"

namespace videonav {

namespace {

using json = nlohmann::json;

template <class T>
T get(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
    }
}

void read_weights(const json& j, RewardWeights& w) {
    for (const auto& [k, v] : j.items()) {
        if (k == "w_ans") w.w_ans = get<double>(v, "weights.w_ans");
        else if (k == "w_loc") w.w_loc = get<double>(v, "weights.w_loc");
        else if (k == "w_repeat") w.w_repeat = get<double>(v, "weights.w_repeat");
        else throw ConfigError(fmt::format("unknown config key 'weights.{}'", k));
    }
}

void read_time_model(const json& j, TimeModel& tm) {
    for (const auto& [k, v] : j.items()) {
        if (k == "t1_s") tm.t1_s = get<double>(v, "time_model.t1_s");
        else if (k == "t2_s") tm.t2_s = get<double>(v, "time_model.t2_s");
        else if (k == "t3_s") tm.t3_s = get<double>(v, "time_model.t3_s");
        else throw ConfigError(fmt::format("unknown config key 'time_model.{}'", k));
    }
}

void read_servers(const json& j, RunConfig& cfg) {
    for (const auto& [k, v] : j.items()) {
        if (k == "navigator") cfg.navigator_server = server_config_from_json(v);
        else if (k == "caption") cfg.caption_server = server_config_from_json(v);
        else if (k == "qa") cfg.qa_server = server_config_from_json(v);
        else throw ConfigError(fmt::format("unknown config key 'servers.{}'", k));
    }
}

void read_gen(const json& j, RunConfig& cfg) {
    auto& p = cfg.corpus_params;
    for (const auto& [k, v] : j.items()) {
        const std::string key = "gen." + k;
        if (k == "videos") cfg.videos = get<int>(v, key);
        else if (k == "duration_min_s") p.duration_min_s = get<double>(v, key);
        else if (k == "duration_max_s") p.duration_max_s = get<double>(v, key);
        else if (k == "events_min") p.events_min = get<int>(v, key);
        else if (k == "events_max") p.events_max = get<int>(v, key);
        else if (k == "event_length_min_s") p.event_length_min_s = get<double>(v, key);
        else if (k == "event_length_max_s") p.event_length_max_s = get<double>(v, key);
        else if (k == "qa_per_video") p.qa_per_video = get<int>(v, key);
        else if (k == "choices") p.choices = get<int>(v, key);
        else if (k == "distractor_rate") p.distractor_rate = get<double>(v, key);
        else if (k == "hint_levels") p.hint_levels = get<int>(v, key);
        else throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
}

void read_train(const json& j, RunConfig& cfg) {
    for (const auto& [k, v] : j.items()) {
        const std::string key = "train." + k;
        if (k == "steps") cfg.train_steps = get<int>(v, key);
        else if (k == "group_size") cfg.group_size = get<int>(v, key);
        else if (k == "groups_per_step") cfg.groups_per_step = get<int>(v, key);
        else if (k == "epsilon") cfg.hyper.epsilon = get<double>(v, key);
        else if (k == "beta") cfg.hyper.beta = get<double>(v, key);
        else if (k == "lr") cfg.hyper.lr = get<double>(v, key);
        else if (k == "temperature") cfg.temperature = get<double>(v, key);
        else if (k == "log_every") cfg.log_every = get<int>(v, key);
        else throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
}

void read_datagen(const json& j, RunConfig& cfg) {
    for (const auto& [k, v] : j.items()) {
        const std::string key = "datagen." + k;
        if (k == "teacher") cfg.teacher = get<std::string>(v, key);
        else if (k == "max_hint_level") cfg.max_hint_level = get<int>(v, key);
        else throw ConfigError(fmt::format("unknown config key '{}'", key));
    }
}

void require_object(const json& j, const std::string& key) {
    if (!j.is_object()) throw ConfigError(fmt::format("config key '{}' must be an object", key));
}

}  // namespace

RunConfig config_from_json(const json& j) {
    require_object(j, "<root>");
    RunConfig cfg;
    for (const auto& [k, v] : j.items()) {
        if (k == "corpus") cfg.corpus = get<std::string>(v, k);
        else if (k == "policy") cfg.policy = get<std::string>(v, k);
        else if (k == "backend") cfg.backend = get<std::string>(v, k);
        else if (k == "budget") cfg.episode.budget = get<int>(v, k);
        else if (k == "init") cfg.episode.init = init_mode_from_string(get<std::string>(v, k));
        else if (k == "depth") cfg.episode.depth = get<int>(v, k);
        else if (k == "leaf_target_s") cfg.episode.leaf_target_s = get<double>(v, k);
        else if (k == "width") cfg.episode.width_override = get<int>(v, k);
        else if (k == "lenient_think") cfg.episode.lenient_think = get<bool>(v, k);
        else if (k == "seed") cfg.seed = get<std::uint64_t>(v, k);
        else if (k == "jobs") cfg.jobs = get<int>(v, k);
        else if (k == "out") cfg.out = get<std::string>(v, k);
        else if (k == "exclude_init") cfg.score.exclude_init = get<bool>(v, k);
        else if (k == "qa_min_coverage") cfg.qa_min_coverage = get<double>(v, k);
        else if (k == "budgets") cfg.budgets = get<std::vector<int>>(v, k);
        else if (k == "weights") { require_object(v, k); read_weights(v, cfg.score.weights); }
        else if (k == "time_model") { require_object(v, k); read_time_model(v, cfg.time_model); }
        else if (k == "servers") { require_object(v, k); read_servers(v, cfg); }
        else if (k == "gen") { require_object(v, k); read_gen(v, cfg); }
        else if (k == "train") { require_object(v, k); read_train(v, cfg); }
        else if (k == "datagen") { require_object(v, k); read_datagen(v, cfg); }
        else throw ConfigError(fmt::format("unknown config key '{}'", k));
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
    }
}

nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    if (c.corpus) j["corpus"] = *c.corpus;
    j["policy"] = c.policy;
    j["backend"] = c.backend;
    j["budget"] = c.episode.budget;
    j["init"] = to_string(c.episode.init);
    j["depth"] = c.episode.depth;
    j["leaf_target_s"] = c.episode.leaf_target_s;
    if (c.episode.width_override) j["width"] = *c.episode.width_override;
    if (c.seed) j["seed"] = *c.seed;
    j["exclude_init"] = c.score.exclude_init;
    j["weights"] = {{"w_ans", c.score.weights.w_ans},
                    {"w_loc", c.score.weights.w_loc},
                    {"w_repeat", c.score.weights.w_repeat}};
    j["time_model"] = {{"t1_s", c.time_model.t1_s},
                       {"t2_s", c.time_model.t2_s},
                       {"t3_s", c.time_model.t3_s}};
    j["qa_min_coverage"] = c.qa_min_coverage;
    if (!c.budgets.empty()) j["budgets"] = c.budgets;
    return j;
}

std::vector<int> parse_budgets(const std::string& text) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string item =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        int v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || v < 1) {
            throw ConfigError(fmt::format("--budgets: '{}' is not a positive integer", item));
        }
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("--budgets: empty list");
    return out;
}

PolicySpec parse_policy_spec(const std::string& text) {
    const auto colon = text.find(':');
    PolicySpec spec{text.substr(0, colon), colon == std::string::npos ? "" : text.substr(colon + 1)};
    if (spec.kind == "toy" && spec.arg.empty()) {
        throw ConfigError("--policy toy:<checkpoint> needs a checkpoint path");
    }
    if (spec.kind == "noisy") {
        try {
            const double p = std::stod(spec.arg);
            if (!(p >= 0.0 && p <= 1.0)) throw std::out_of_range("noise");
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("--policy noisy:<p> needs p in [0, 1], got '{}'", spec.arg));
        }
    }
    static const char* known[] = {"oracle", "noisy", "keyword", "random", "llm", "toy"};
    if (std::find(std::begin(known), std::end(known), spec.kind) == std::end(known)) {
        throw ConfigError(fmt::format(
            "--policy: unknown policy '{}' (oracle|noisy:<p>|keyword|random|llm|toy:<checkpoint>)",
            text));
    }
    return spec;
}

bool is_stochastic(const PolicySpec& spec) {
    return spec.kind == "noisy" || spec.kind == "random" || spec.kind == "toy";
}

std::function<std::unique_ptr<Policy>(std::size_t)> policy_factory(const RunConfig& cfg,
                                                                   std::uint64_t seed) {
    const PolicySpec spec = parse_policy_spec(cfg.policy);
    if (spec.kind == "oracle") {
        return [](std::size_t) { return std::make_unique<ScriptedOraclePolicy>(); };
    }
    if (spec.kind == "keyword") {
        return [](std::size_t) { return std::make_unique<KeywordTeacherPolicy>(); };
    }
    if (spec.kind == "noisy") {
        const double p = std::stod(spec.arg);
        return [p, seed](std::size_t task) {
            return std::make_unique<NoisyOraclePolicy>(p, mix_seed(seed, task));
        };
    }
    if (spec.kind == "llm") {
        if (!cfg.navigator_server) {
            throw ConfigError("--policy llm needs servers.navigator in the config file");
        }
        const ServerConfig server = *cfg.navigator_server;
        return [server](std::size_t) { return std::make_unique<LlmPolicy>(server); };
    }
    ToyPolicyParams params;
    params.temperature = cfg.temperature;
    if (spec.kind == "toy") params = load_checkpoint(spec.arg);
    return [params, seed](std::size_t task) {
        return std::make_unique<ToyPolicy>(params, mix_seed(seed, task));
    };
}

std::function<std::unique_ptr<ToolBackend>()> backend_factory(const RunConfig& cfg) {
    if (cfg.backend == "mock") {
        const double rho = cfg.qa_min_coverage;
        if (!(rho > 0.0 && rho <= 1.0)) {
            throw ConfigError(fmt::format("qa_min_coverage must lie in (0, 1], got {}", rho));
        }
        return [rho] { return std::make_unique<MockBackend>(rho); };
    }
    if (cfg.backend == "http") {
        if (!cfg.caption_server || !cfg.qa_server) {
            throw ConfigError("--backend http needs servers.caption and servers.qa in the config file");
        }
        const ServerConfig cap = *cfg.caption_server;
        const ServerConfig qa = *cfg.qa_server;
        return [cap, qa] { return std::make_unique<HttpBackend>(cap, qa); };
    }
    throw ConfigError(fmt::format("--backend: unknown backend '{}' (mock|http)", cfg.backend));
}

}  // namespace videonav
