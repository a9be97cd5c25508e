#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "videonav/tree.hpp"

namespace videonav {

enum class ToolKind { GetCaption, VideoQA };

const char* to_string(ToolKind kind) noexcept;

/// One tool invocation. `path` is zero-based; the wire form is one-based.
struct ToolCall {
    ToolKind kind = ToolKind::GetCaption;
    NodePath path;
    /// Present (and non-empty) only for VideoQA.
    std::optional<std::string> query;

    static ToolCall caption(NodePath path) { return {ToolKind::GetCaption, std::move(path), {}}; }
    static ToolCall video_qa(NodePath path, std::string query) {
        return {ToolKind::VideoQA, std::move(path), std::move(query)};
    }

    friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

/// Final answer as the model wrote it. `choice_index` is zero-based when the
/// body named a choice (letter, one-based number, or option text).
struct FinalAnswer {
    std::optional<int> choice_index;
    std::string text;

    static FinalAnswer choice(int index);

    friend bool operator==(const FinalAnswer&, const FinalAnswer&) = default;
};

/// Parsed policy turn: a reasoning block and exactly one terminal.
struct Action {
    std::string think;
    std::variant<ToolCall, FinalAnswer> terminal;

    bool is_answer() const noexcept { return std::holds_alternative<FinalAnswer>(terminal); }
    const ToolCall& tool() const { return std::get<ToolCall>(terminal); }
    const FinalAnswer& answer() const { return std::get<FinalAnswer>(terminal); }

    friend bool operator==(const Action&, const Action&) = default;
};

enum class DiagnosticKind { Nested, Unbalanced, OutsideText };

struct Diagnostic {
    DiagnosticKind kind;
    std::size_t offset = 0;
    std::string message;
};

enum class ProtocolErrorCode {
    NoTerminal,         // "no tool/answer"
    AmbiguousTerminal,  // "ambiguous terminal"
    UnclosedTag,
    MissingThink,
    MalformedCall,
    IndexRange,
    UnknownTool,
    BadAnswer,
};

const char* to_string(ProtocolErrorCode code) noexcept;

struct ProtocolError {
    ProtocolErrorCode code;
    std::string message;
    std::size_t offset = 0;
};

struct ParseOptions {
    /// Tree width K for wire-id range checks; 0 disables the upper bound.
    int width = 0;
    int depth = kDefaultDepth;
    /// Options used to map answer letters and verbatim text to an index.
    std::vector<std::string> choices;
    /// Accept a missing or empty think block.
    bool lenient = false;
};

/// Either an Action or a diagnosed error; never throws on malformed input.
struct ParseResult {
    std::optional<Action> action;
    std::optional<ProtocolError> error;
    std::vector<Diagnostic> warnings;

    bool ok() const noexcept { return action.has_value(); }
};

ParseResult parse_action(std::string_view model_output, const ParseOptions& opts = {});

/// Wire form of a call, e.g. "get_caption((2,3))" or "video_qa((1,2,3), what color?)".
std::string render_tool_call(const ToolCall& call);
std::string render_action(const Action& action);

/// Unbalanced and nested think/tool/answer tags with byte offsets.
/// An empty result means the text is well-formed.
std::vector<Diagnostic> validate_tags(std::string_view text);

/// "A", "B", ... for a zero-based choice index.
std::string choice_letter(int index);

enum class ObservationKind { Tool, Violation, Answer };

/// One round: the raw tagged model turn and what came back.
struct Step {
    std::string reasoning;
    ObservationKind kind = ObservationKind::Tool;
    std::string observation;
};

struct Episode {
    std::string video_id;
    std::string question;
    std::vector<std::string> choices;
    std::vector<std::pair<NodePath, std::string>> init_captions;
    std::vector<Step> steps;

    bool answered() const noexcept {
        return !steps.empty() && steps.back().kind == ObservationKind::Answer;
    }
};

/// Throws DomainError unless at most one step carries an answer and it is last.
void check_episode(const Episode& episode);

/// Question and choices followed by the initial captions in path order.
std::string render_context(const Episode& episode);

/// Deterministic transcript: context, then each step's turn and one
/// <observation> block per step.
std::string render_history(const Episode& episode);

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Chat form of an episode: system, context as user, then alternating
/// assistant turns and user observations. Answer steps add no observation.
std::vector<ChatMessage> render_messages(const Episode& episode, const std::string& system_prompt);

}  // namespace videonav
