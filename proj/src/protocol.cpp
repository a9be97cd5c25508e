#include "videonav/protocol.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <fmt/format.h>

#include "videonav/errors.hpp"

namespace videonav {

namespace {

constexpr std::array<std::string_view, 3> kTagNames{"think", "tool", "answer"};

struct TagHit {
    std::string_view name;
    bool closing = false;
    std::size_t offset = 0;
    std::size_t length = 0;

    std::size_t end() const noexcept { return offset + length; }
};

std::vector<TagHit> scan_tags(std::string_view text) {
    std::vector<TagHit> hits;
    for (std::size_t pos = text.find('<'); pos != std::string_view::npos;
         pos = text.find('<', pos + 1)) {
        const bool closing = pos + 1 < text.size() && text[pos + 1] == '/';
        const std::size_t name_at = pos + (closing ? 2 : 1);
        for (auto name : kTagNames) {
            if (text.compare(name_at, name.size(), name) == 0 &&
                name_at + name.size() < text.size() && text[name_at + name.size()] == '>') {
                hits.push_back({name, closing, pos, name_at + name.size() + 1 - pos});
                break;
            }
        }
    }
    return hits;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

/// Offset of `inner` (a subview) inside `outer`.
std::size_t offset_in(std::string_view outer, std::string_view inner) {
    return static_cast<std::size_t>(inner.data() - outer.data());
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

ProtocolError make_error(ProtocolErrorCode code, std::string message, std::size_t offset) {
    return {code, std::move(message), offset};
}

struct CallParse {
    std::optional<ToolCall> call;
    std::optional<ProtocolError> error;
};

CallParse parse_tool_body(std::string_view full, std::string_view body, const ParseOptions& opts) {
    auto fail = [&](ProtocolErrorCode code, std::string msg, std::string_view at) {
        return CallParse{std::nullopt, make_error(code, std::move(msg), offset_in(full, at))};
    };
    const std::string_view b = trim(body);
    const auto open = b.find('(');
    if (open == std::string_view::npos) {
        return fail(ProtocolErrorCode::MalformedCall, "expected '(' after tool name", b);
    }
    const std::string_view name = trim(b.substr(0, open));
    ToolKind kind;
    if (name == "get_caption") {
        kind = ToolKind::GetCaption;
    } else if (name == "video_qa") {
        kind = ToolKind::VideoQA;
    } else {
        return fail(ProtocolErrorCode::UnknownTool, fmt::format("unknown tool '{}'", name), b);
    }
    if (b.back() != ')') {
        return fail(ProtocolErrorCode::MalformedCall, "tool call must end with ')'",
                    b.substr(b.size() - 1));
    }
    std::string_view args = b.substr(open + 1, b.size() - open - 2);
    std::string_view tuple;
    std::string_view rest;
    const std::string_view lead = trim(args);
    if (!lead.empty() && lead.front() == '(') {
        const auto close = lead.find(')');
        if (close == std::string_view::npos) {
            return fail(ProtocolErrorCode::MalformedCall, "unterminated segment tuple", lead);
        }
        tuple = lead.substr(1, close - 1);
        rest = lead.substr(close + 1);
    } else if (kind == ToolKind::GetCaption) {
        tuple = lead;
    } else {
        return fail(ProtocolErrorCode::MalformedCall, "video_qa needs a parenthesized segment tuple",
                    lead.empty() ? args : lead);
    }

    std::vector<int> ids;
    std::size_t start = 0;
    while (true) {
        const auto comma = tuple.find(',', start);
        const std::string_view raw = tuple.substr(start, comma == std::string_view::npos
                                                             ? std::string_view::npos
                                                             : comma - start);
        const std::string_view tok = trim(raw);
        if (tok.empty()) {
            return fail(ProtocolErrorCode::MalformedCall, "empty segment id", raw);
        }
        const bool negative = tok.front() == '-';
        const std::string_view digits = negative ? tok.substr(1) : tok;
        if (digits.empty() || digits.size() > 9 ||
            !std::all_of(digits.begin(), digits.end(),
                         [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            return fail(ProtocolErrorCode::MalformedCall,
                        fmt::format("segment id '{}' is not an integer", tok), tok);
        }
        const int wire = (negative ? -1 : 1) * std::stoi(std::string(digits));
        if (wire < 1 || (opts.width > 0 && wire > opts.width)) {
            return fail(ProtocolErrorCode::IndexRange,
                        opts.width > 0
                            ? fmt::format("segment id {} outside [1, {}]", wire, opts.width)
                            : fmt::format("segment id {} must be >= 1", wire),
                        tok);
        }
        ids.push_back(wire - 1);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (opts.depth > 0 && static_cast<int>(ids.size()) > opts.depth) {
        return fail(ProtocolErrorCode::IndexRange,
                    fmt::format("{} segment ids exceed tree depth {}", ids.size(), opts.depth),
                    tuple);
    }

    ToolCall call{kind, NodePath(std::move(ids)), std::nullopt};
    const std::string_view tail = trim(rest);
    if (kind == ToolKind::GetCaption) {
        if (!tail.empty()) {
            return fail(ProtocolErrorCode::MalformedCall, "unexpected text after segment tuple",
                        tail);
        }
        return {call, std::nullopt};
    }
    if (tail.empty() || tail.front() != ',') {
        return fail(ProtocolErrorCode::MalformedCall, "video_qa needs a query after the tuple",
                    tail.empty() ? rest : tail);
    }
    std::string_view query = trim(tail.substr(1));
    if (query.size() >= 2 && (query.front() == '"' || query.front() == '\'') &&
        query.back() == query.front()) {
        query = trim(query.substr(1, query.size() - 2));
    }
    if (query.empty()) {
        return fail(ProtocolErrorCode::MalformedCall, "empty video_qa query", tail);
    }
    call.query = std::string(query);
    return {call, std::nullopt};
}

std::variant<FinalAnswer, ProtocolError> parse_answer(std::string_view full, std::string_view body,
                                                      const ParseOptions& opts) {
    const std::string_view b = trim(body);
    if (b.empty()) {
        return make_error(ProtocolErrorCode::BadAnswer, "empty answer", offset_in(full, body));
    }
    const int n_choices = static_cast<int>(opts.choices.size());
    auto checked = [&](int index) -> std::variant<FinalAnswer, ProtocolError> {
        if (n_choices > 0 && index >= n_choices) {
            return make_error(ProtocolErrorCode::BadAnswer,
                              fmt::format("choice {} outside the {} options", choice_letter(index),
                                          n_choices),
                              offset_in(full, b));
        }
        return FinalAnswer{index, std::string(b)};
    };

    // Letter forms: "B", "(B)", "B.", "B) text", "B: text".
    std::string_view s = b;
    const bool paren = s.front() == '(';
    if (paren) s.remove_prefix(1);
    if (!s.empty() && s.front() >= 'A' && s.front() <= 'Z') {
        const std::string_view after = s.substr(1);
        const bool bare = paren ? (!after.empty() && after.front() == ')') : after.empty();
        const bool punct = !paren && !after.empty() &&
                           (after.front() == '.' || after.front() == ')' || after.front() == ':');
        if (bare || punct) return checked(s.front() - 'A');
    }
    // One-based choice number.
    if (std::all_of(b.begin(), b.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
        b.size() <= 3) {
        const int n = std::stoi(std::string(b));
        if (n < 1) {
            return make_error(ProtocolErrorCode::BadAnswer, "choice numbers start at 1",
                              offset_in(full, b));
        }
        return checked(n - 1);
    }
    const std::string needle = lower(b);
    for (int i = 0; i < n_choices; ++i) {
        if (lower(trim(opts.choices[i])) == needle) return FinalAnswer{i, std::string(b)};
    }
    return FinalAnswer{std::nullopt, std::string(b)};
}

}  // namespace

const char* to_string(ToolKind kind) noexcept {
    return kind == ToolKind::GetCaption ? "get_caption" : "video_qa";
}

const char* to_string(ProtocolErrorCode code) noexcept {
    switch (code) {
        case ProtocolErrorCode::NoTerminal: return "no_terminal";
        case ProtocolErrorCode::AmbiguousTerminal: return "ambiguous_terminal";
        case ProtocolErrorCode::UnclosedTag: return "unclosed_tag";
        case ProtocolErrorCode::MissingThink: return "missing_think";
        case ProtocolErrorCode::MalformedCall: return "malformed_call";
        case ProtocolErrorCode::IndexRange: return "index_range";
        case ProtocolErrorCode::UnknownTool: return "unknown_tool";
        case ProtocolErrorCode::BadAnswer: return "bad_answer";
    }
    return "unknown";
}

std::string choice_letter(int index) {
    if (index >= 0 && index < 26) return std::string(1, static_cast<char>('A' + index));
    return std::to_string(index + 1);
}

FinalAnswer FinalAnswer::choice(int index) { return {index, choice_letter(index)}; }

ParseResult parse_action(std::string_view text, const ParseOptions& opts) {
    ParseResult result;
    const auto hits = scan_tags(text);

    auto first_close = [&](std::string_view name, std::size_t after) -> const TagHit* {
        for (const auto& h : hits) {
            if (h.closing && h.name == name && h.offset >= after) return &h;
        }
        return nullptr;
    };

    std::vector<const TagHit*> terminals;
    for (const auto& h : hits) {
        if (!h.closing && (h.name == "tool" || h.name == "answer")) terminals.push_back(&h);
    }
    if (terminals.empty()) {
        result.error = make_error(ProtocolErrorCode::NoTerminal, "no tool/answer", text.size());
        return result;
    }
    if (terminals.size() > 1) {
        result.error = make_error(ProtocolErrorCode::AmbiguousTerminal, "ambiguous terminal",
                                  terminals[1]->offset);
        return result;
    }
    const TagHit& term = *terminals.front();
    const TagHit* term_close = first_close(term.name, term.end());
    if (!term_close) {
        result.error = make_error(ProtocolErrorCode::UnclosedTag,
                                  fmt::format("unclosed <{}>", term.name), term.offset);
        return result;
    }

    const TagHit* think_open = nullptr;
    for (const auto& h : hits) {
        if (!h.closing && h.name == "think") {
            think_open = &h;
            break;
        }
    }
    const TagHit* think_close = think_open ? first_close("think", think_open->end()) : nullptr;
    std::string think;
    if (think_open && think_close) {
        think = std::string(trim(
            text.substr(think_open->end(), think_close->offset - think_open->end())));
    }
    if (think.empty() && !opts.lenient) {
        result.error = make_error(ProtocolErrorCode::MissingThink,
                                  think_open && think_close ? "empty <think> block"
                                                            : "missing <think> block",
                                  think_open ? think_open->offset : 0);
        return result;
    }

    // Anything outside the two recognized blocks is tolerated with a warning.
    std::vector<std::pair<std::size_t, std::size_t>> covered{{term.offset, term_close->end()}};
    if (think_open && think_close) covered.emplace_back(think_open->offset, think_close->end());
    std::sort(covered.begin(), covered.end());
    std::size_t cursor = 0;
    auto warn_gap = [&](std::size_t from, std::size_t to) {
        for (std::size_t i = from; i < to; ++i) {
            if (!is_space(text[i])) {
                result.warnings.push_back({DiagnosticKind::OutsideText, i,
                                           "text outside recognized tags ignored"});
                return;
            }
        }
    };
    for (const auto& [lo, hi] : covered) {
        if (lo > cursor) warn_gap(cursor, lo);
        cursor = std::max(cursor, hi);
    }
    warn_gap(cursor, text.size());

    const std::string_view body = text.substr(term.end(), term_close->offset - term.end());
    if (term.name == "tool") {
        auto parsed = parse_tool_body(text, body, opts);
        if (parsed.error) {
            result.error = std::move(parsed.error);
            return result;
        }
        result.action = Action{std::move(think), std::move(*parsed.call)};
    } else {
        auto parsed = parse_answer(text, body, opts);
        if (auto* err = std::get_if<ProtocolError>(&parsed)) {
            result.error = std::move(*err);
            return result;
        }
        result.action = Action{std::move(think), std::get<FinalAnswer>(std::move(parsed))};
    }
    return result;
}

std::string render_tool_call(const ToolCall& call) {
    if (call.kind == ToolKind::GetCaption) {
        return fmt::format("get_caption({})", call.path.wire_string());
    }
    return fmt::format("video_qa({}, {})", call.path.wire_string(), call.query.value_or(""));
}

std::string render_action(const Action& action) {
    if (action.is_answer()) {
        const auto& a = action.answer();
        return fmt::format("<think>{}</think>\n<answer>{}</answer>", action.think,
                           a.choice_index ? choice_letter(*a.choice_index) : a.text);
    }
    return fmt::format("<think>{}</think>\n<tool>{}</tool>", action.think,
                       render_tool_call(action.tool()));
}

std::vector<Diagnostic> validate_tags(std::string_view text) {
    std::vector<Diagnostic> out;
    std::vector<TagHit> open;
    for (const auto& h : scan_tags(text)) {
        if (!h.closing) {
            if (!open.empty()) {
                out.push_back({DiagnosticKind::Nested, h.offset,
                               fmt::format("<{}> nested inside <{}> opened at {}", h.name,
                                           open.back().name, open.back().offset)});
            }
            open.push_back(h);
        } else if (open.empty() || open.back().name != h.name) {
            out.push_back({DiagnosticKind::Unbalanced, h.offset,
                           fmt::format("</{}> without matching <{}>", h.name, h.name)});
        } else {
            open.pop_back();
        }
    }
    for (const auto& h : open) {
        out.push_back({DiagnosticKind::Unbalanced, h.offset, fmt::format("unclosed <{}>", h.name)});
    }
    std::sort(out.begin(), out.end(),
              [](const Diagnostic& a, const Diagnostic& b) { return a.offset < b.offset; });
    return out;
}

void check_episode(const Episode& episode) {
    for (std::size_t i = 0; i < episode.steps.size(); ++i) {
        if (episode.steps[i].kind == ObservationKind::Answer && i + 1 != episode.steps.size()) {
            throw DomainError(fmt::format("answer at step {} is not the last step", i));
        }
    }
}

std::string render_context(const Episode& episode) {
    std::string out = fmt::format("Question: {}\n", episode.question);
    if (!episode.choices.empty()) {
        out += "Choices:\n";
        for (std::size_t i = 0; i < episode.choices.size(); ++i) {
            out += fmt::format("{}. {}\n", choice_letter(static_cast<int>(i)), episode.choices[i]);
        }
    }
    auto captions = episode.init_captions;
    std::stable_sort(captions.begin(), captions.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    out += "Initial captions:\n";
    for (const auto& [path, text] : captions) {
        if (path.is_root()) {
            out += fmt::format("Whole video: {}\n", text);
        } else {
            out += fmt::format("Segment {}: {}\n", path.wire_string(), text);
        }
    }
    return out;
}

std::string render_history(const Episode& episode) {
    std::string out = render_context(episode);
    for (const auto& step : episode.steps) {
        out += '\n';
        out += step.reasoning;
        out += fmt::format("\n<observation>{}</observation>\n", step.observation);
    }
    return out;
}

std::vector<ChatMessage> render_messages(const Episode& episode, const std::string& system_prompt) {
    std::vector<ChatMessage> out;
    out.push_back({"system", system_prompt});
    out.push_back({"user", render_context(episode)});
    for (const auto& step : episode.steps) {
        out.push_back({"assistant", step.reasoning});
        if (step.kind != ObservationKind::Answer) {
            out.push_back({"user", fmt::format("<observation>{}</observation>", step.observation)});
        }
    }
    return out;
}

}  // namespace videonav
