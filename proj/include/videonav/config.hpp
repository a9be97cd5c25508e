#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videonav/corpus.hpp"
#include "videonav/datagen.hpp"
#include "videonav/evalcost.hpp"
#include "videonav/grpo.hpp"
#include "videonav/http_backend.hpp"
#include "videonav/orchestrator.hpp"
#include "videonav/reward.hpp"

namespace videonav {

/// Settings shared by every CLI command. Loaded from a JSON file; command-line
/// flags are applied on top.
struct RunConfig {
    std::optional<std::string> corpus;
    std::string policy = "oracle";
    std::string backend = "mock";
    EpisodeConfig episode;
    ScoreOptions score;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    std::optional<std::string> out;
    TimeModel time_model;
    double qa_min_coverage = 0.5;

    std::optional<ServerConfig> navigator_server;
    std::optional<ServerConfig> caption_server;
    std::optional<ServerConfig> qa_server;

    int videos = 67;
    CorpusParams corpus_params;

    int train_steps = 300;
    int group_size = 16;
    int groups_per_step = 4;
    TrainHyper hyper;
    double temperature = 1.0;
    int log_every = 10;

    std::string teacher = "oracle";
    int max_hint_level = kDefaultMaxHintLevel;

    std::vector<int> budgets;
};

/// Throws ConfigError naming the first unknown or mistyped key.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Parses "5,10,30". Throws ConfigError on an empty list or non-positive entry.
std::vector<int> parse_budgets(const std::string& text);

/// "oracle", "noisy:<p>", "keyword", "random", "llm" or "toy:<checkpoint>".
struct PolicySpec {
    std::string kind;
    std::string arg;
};
PolicySpec parse_policy_spec(const std::string& text);

/// True for policies whose behavior depends on the seed.
bool is_stochastic(const PolicySpec& spec);

/// Factory for the configured policy; task index and seed pick the rng stream.
std::function<std::unique_ptr<Policy>(std::size_t task)> policy_factory(const RunConfig& cfg,
                                                                         std::uint64_t seed);

std::function<std::unique_ptr<ToolBackend>()> backend_factory(const RunConfig& cfg);

}  // namespace videonav
