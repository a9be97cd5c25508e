#include "videonav/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "videonav/errors.hpp"
#include "videonav/prompts.hpp"

namespace videonav {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

ServerConfig server_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("server config must be an object");
    ServerConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "base_url") {
            cfg.base_url = value.get<std::string>();
        } else if (key == "model") {
            cfg.model = value.get<std::string>();
        } else if (key == "timeout_s") {
            cfg.timeout_s = value.get<double>();
        } else if (key == "max_retries") {
            cfg.max_retries = value.get<int>();
        } else {
            throw ConfigError(fmt::format("unknown server config key '{}'", key));
        }
    }
    if (cfg.base_url.empty()) throw ConfigError("server config: base_url is required");
    if (cfg.model.empty()) throw ConfigError("server config: model is required");
    if (!(cfg.timeout_s > 0.0)) throw ConfigError("server config: timeout_s must be positive");
    if (cfg.max_retries < 0) throw ConfigError("server config: max_retries must be >= 0");
    return cfg;
}

nlohmann::json to_json(const ServerConfig& cfg) {
    return {{"base_url", cfg.base_url},
            {"model", cfg.model},
            {"timeout_s", cfg.timeout_s},
            {"max_retries", cfg.max_retries}};
}

ChatClient::ChatClient(ServerConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError(fmt::format("base_url '{}' lacks a scheme", cfg_.base_url));
    }
    const auto path_at = cfg_.base_url.find('/', scheme_end + 3);
    scheme_host_ = cfg_.base_url.substr(0, path_at);
    path_prefix_ = path_at == std::string::npos ? "" : cfg_.base_url.substr(path_at);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string ChatClient::complete(const nlohmann::json& messages, const nlohmann::json& extra) const {
    nlohmann::json body = extra;
    body["model"] = cfg_.model;
    body["messages"] = messages;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(kApiKeyEnv); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const auto secs = static_cast<time_t>(cfg_.timeout_s);
    const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        httplib::Client cli(scheme_host_);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        auto res = cli.Post(path_prefix_ + "/chat/completions", headers, payload,
                            "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError(res->status, res->body.substr(0, 512));
        }
        try {
            const auto reply = nlohmann::json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(res->status, std::string("malformed completion: ") + e.what());
        }
    }
    throw TransportError(fmt::format("{} unreachable after {} attempt(s): {}", cfg_.base_url,
                                     cfg_.max_retries + 1, last_error));
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
    return complete(arr);
}

std::optional<std::string> extract_caption(std::string_view reply) {
    constexpr std::string_view open = "<caption>";
    constexpr std::string_view close = "</caption>";
    const auto a = reply.find(open);
    if (a == std::string_view::npos) return std::nullopt;
    const auto b = reply.find(close, a + open.size());
    if (b == std::string_view::npos) return std::nullopt;
    return std::string(reply.substr(a + open.size(), b - a - open.size()));
}

nlohmann::json clip_descriptor(const std::string& clip_ref, const Interval& clip, int num_frames,
                               double resolution_px) {
    return {{"clip_ref", clip_ref},
            {"start_s", clip.start},
            {"end_s", clip.end},
            {"num_frames", num_frames},
            {"resolution", resolution_px}};
}

namespace {

nlohmann::json clip_messages(const std::string& system, const std::string& clip_ref,
                             const Interval& clip, int frames, double res) {
    return nlohmann::json::array(
        {{{"role", "system"}, {"content", system}},
         {{"role", "user"},
          {"content",
           nlohmann::json::array(
               {{{"type", "video_url"}, {"video_url", {{"url", clip_ref}}}},
                {{"type", "text"},
                 {"text", fmt::format("Clip {:.1f}s-{:.1f}s, {} frames at {:.0f}px.", clip.start,
                                      clip.end, frames, res)}}})}}});
}

}  // namespace

ToolResult http_caption(const ChatClient& client, const std::string& clip_ref,
                        const NodePath& node, double duration_s, const TreeConfig& cfg) {
    const Interval clip = interval_of(node, duration_s, cfg);
    const int level = std::min(node.level(), kScheduledLevels - 1);
    const int frames = frame_budget(level);
    const double res = resolution(level);
    const auto t0 = std::chrono::steady_clock::now();
    const std::string reply = client.complete(
        clip_messages(prompts::caption_prompt(frames, caption_word_budget(level)), clip_ref, clip,
                      frames, res),
        {{"video_segment", clip_descriptor(clip_ref, clip, frames, res)}});
    ToolResult r{"", node, frames, seconds_since(t0), false, std::nullopt, std::nullopt};
    if (auto body = extract_caption(reply)) {
        r.text = *body;
    } else {
        r.text = reply;
        r.warning = "reply lacked <caption> tags; used verbatim";
    }
    return r;
}

ToolResult http_qa(const ChatClient& client, const std::string& clip_ref, const NodePath& node,
                   double duration_s, const TreeConfig& cfg, const GroundedQA& qa,
                   const std::string& query) {
    if (!is_leaf(node, cfg)) {
        throw LegalityError(fmt::format("video_qa on {}: not a leaf", node.to_string()));
    }
    const Interval clip = interval_of(node, duration_s, cfg);
    const int level = std::min(node.level(), kScheduledLevels - 1);
    const int frames = frame_budget(level);
    const double res = resolution(level);
    const auto t0 = std::chrono::steady_clock::now();
    const std::string reply =
        client.complete(clip_messages(prompts::qa_prompt(frames, qa.question, query), clip_ref,
                                      clip, frames, res),
                        {{"video_segment", clip_descriptor(clip_ref, clip, frames, res)}});
    ToolResult r{reply, node, frames, seconds_since(t0), false, std::nullopt, std::nullopt};
    const std::string low = lower(reply);
    if (low.find("don't know") != std::string::npos ||
        low.find("do not know") != std::string::npos) {
        r.is_idk = true;
        return r;
    }
    ParseOptions opts;
    opts.choices = qa.choices;
    const auto parsed = parse_action("<think>qa</think><answer>" + reply + "</answer>", opts);
    if (parsed.ok() && parsed.action->answer().choice_index) {
        r.answer_index = parsed.action->answer().choice_index;
    }
    return r;
}

HttpBackend::HttpBackend(ServerConfig caption_server, ServerConfig qa_server)
    : caption_client_(std::move(caption_server)), qa_client_(std::move(qa_server)) {}

ToolResult HttpBackend::caption(const GroundedVideo& video, const NodePath& node,
                                const TreeConfig& cfg) {
    return http_caption(caption_client_, video.id, node, video.duration_s, cfg);
}

ToolResult HttpBackend::video_qa(const GroundedVideo& video, const GroundedQA& qa,
                                 const NodePath& node, const std::string& query,
                                 const TreeConfig& cfg) {
    return http_qa(qa_client_, video.id, node, video.duration_s, cfg, qa, query);
}

}  // namespace videonav
