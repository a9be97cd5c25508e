#pragma once

#include "videonav/http_backend.hpp"
#include "videonav/orchestrator.hpp"

namespace videonav {

/// Navigator backed by a chat-completions server. The full history is resent
/// each round; a hint, when present, is appended to the private context only.
class LlmPolicy final : public Policy {
public:
    explicit LlmPolicy(ServerConfig server);
    PolicyTurn act(const NavigatorState& state) override;

    /// Messages sent for the next turn.
    std::vector<ChatMessage> prompt(const NavigatorState& state) const;

private:
    ChatClient client_;
};

}  // namespace videonav
