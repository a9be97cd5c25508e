#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "videonav/protocol.hpp"
#include "videonav/tools.hpp"

namespace videonav {

inline constexpr const char* kApiKeyEnv = "VIDEONAV_API_KEY";

/// Connection settings for an OpenAI-compatible chat-completions server.
/// The API key is never part of the config; it is read from VIDEONAV_API_KEY.
struct ServerConfig {
    std::string base_url;
    std::string model;
    double timeout_s = 60.0;
    int max_retries = 2;
};

/// Throws ConfigError on unknown keys or missing base_url / model.
ServerConfig server_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ServerConfig& cfg);

/// Minimal chat-completions client with retry on transport failure.
class ChatClient {
public:
    explicit ChatClient(ServerConfig cfg);

    const ServerConfig& config() const noexcept { return cfg_; }

    /// Sends one request and returns choices[0].message.content.
    /// Throws TransportError after exhausting retries, BackendError on non-2xx.
    std::string complete(const nlohmann::json& messages,
                         const nlohmann::json& extra = nlohmann::json::object()) const;

    std::string complete(const std::vector<ChatMessage>& messages) const;

private:
    ServerConfig cfg_;
    std::string scheme_host_;
    std::string path_prefix_;
};

/// Body between <caption> and </caption>, if both tags are present.
std::optional<std::string> extract_caption(std::string_view reply);

/// Request body fields that describe the clip the server should decode.
nlohmann::json clip_descriptor(const std::string& clip_ref, const Interval& clip, int num_frames,
                               double resolution_px);

ToolResult http_caption(const ChatClient& client, const std::string& clip_ref,
                        const NodePath& node, double duration_s, const TreeConfig& cfg);

ToolResult http_qa(const ChatClient& client, const std::string& clip_ref, const NodePath& node,
                   double duration_s, const TreeConfig& cfg, const GroundedQA& qa,
                   const std::string& query);

/// Backend that forwards both tools to model servers. The clip reference sent
/// to the server is the video id.
class HttpBackend final : public ToolBackend {
public:
    HttpBackend(ServerConfig caption_server, ServerConfig qa_server);

    ToolResult caption(const GroundedVideo& video, const NodePath& node,
                       const TreeConfig& cfg) override;
    ToolResult video_qa(const GroundedVideo& video, const GroundedQA& qa, const NodePath& node,
                        const std::string& query, const TreeConfig& cfg) override;

private:
    ChatClient caption_client_;
    ChatClient qa_client_;
};

}  // namespace videonav
