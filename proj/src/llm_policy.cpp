#include "videonav/llm_policy.hpp"

#include "videonav/prompts.hpp"

namespace videonav {

LlmPolicy::LlmPolicy(ServerConfig server) : client_(std::move(server)) {}

std::vector<ChatMessage> LlmPolicy::prompt(const NavigatorState& state) const {
    auto messages = render_messages(state.history, prompts::system_prompt(state.tree.width));
    if (state.hint) messages[1].content += "\n\n" + state.hint->text;
    return messages;
}

PolicyTurn LlmPolicy::act(const NavigatorState& state) {
    return {client_.complete(prompt(state)), std::nullopt};
}

}  // namespace videonav
