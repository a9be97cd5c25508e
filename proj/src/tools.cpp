#include "videonav/tools.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "videonav/errors.hpp"
#include "videonav/protocol.hpp"

namespace videonav {

CostMeter& CostMeter::operator=(const CostMeter& other) {
    if (this != &other) {
        const auto c = other.snapshot();
        std::lock_guard lock(mu_);
        counters_ = c;
    }
    return *this;
}

void CostMeter::record(CostCategory category, double wall_time_s) {
    if (!(wall_time_s >= 0.0) || !std::isfinite(wall_time_s)) {
        throw DomainError(fmt::format("wall time must be finite and >= 0, got {}", wall_time_s));
    }
    std::lock_guard lock(mu_);
    switch (category) {
        case CostCategory::Round:
            ++counters_.c1_rounds;
            counters_.round_time_s += wall_time_s;
            break;
        case CostCategory::Caption:
            ++counters_.c2_captions;
            counters_.caption_time_s += wall_time_s;
            break;
        case CostCategory::QA:
            ++counters_.c3_qa;
            counters_.qa_time_s += wall_time_s;
            break;
    }
}

CostCounters CostMeter::snapshot() const {
    std::lock_guard lock(mu_);
    return counters_;
}

void record_cost(CostMeter& meter, CostCategory category, double wall_time_s) {
    meter.record(category, wall_time_s);
}

double clue_coverage(const Interval& clip, const IntervalSet& clue) {
    const double total = clue.total_length();
    if (!(total > 0.0)) throw DomainError("clue must be non-empty");
    return intersection_length(clue, clip) / total;
}

ToolResult mock_caption(const GroundedVideo& video, const NodePath& node, const TreeConfig& cfg) {
    const Interval clip = interval_of(node, video.duration_s, cfg);
    const int level = std::min(node.level(), kScheduledLevels - 1);
    const int budget = caption_word_budget(level);

    std::string text = fmt::format("Clip {:.1f}s-{:.1f}s:", clip.start, clip.end);
    int words = 1;
    int listed = 0;
    for (const auto& e : video.events) {
        if (overlap_length(e.interval, clip) <= 0.0) continue;
        std::string kw;
        for (std::size_t i = 0; i < e.keywords.size(); ++i) {
            kw += (i ? ", " : "") + e.keywords[i];
        }
        const std::string sentence =
            fmt::format(" At {:.1f}s-{:.1f}s, {} (keywords: {}).", e.interval.start,
                        e.interval.end, e.description, kw);
        const int n = static_cast<int>(std::count(sentence.begin(), sentence.end(), ' '));
        if (words + n > budget) break;
        text += sentence;
        words += n;
        ++listed;
    }
    if (listed == 0) text += " No notable events.";
    return {text, node, frame_budget(level), 0.0, false, std::nullopt, std::nullopt};
}

ToolResult mock_qa(const GroundedVideo& video, const GroundedQA& qa, const NodePath& node,
                   const TreeConfig& cfg, double min_coverage) {
    if (!is_leaf(node, cfg)) {
        throw LegalityError(fmt::format("video_qa on {}: not a leaf", node.to_string()));
    }
    const Interval clip = interval_of(node, video.duration_s, cfg);
    const int level = std::min(node.level(), kScheduledLevels - 1);
    ToolResult r{"", node, frame_budget(level), 0.0, false, std::nullopt, std::nullopt};
    if (clue_coverage(clip, qa.clue) + 1e-12 >= min_coverage) {
        r.answer_index = qa.answer_index;
        r.text = fmt::format("{}. {}", choice_letter(qa.answer_index),
                             qa.choices.at(static_cast<std::size_t>(qa.answer_index)));
    } else {
        r.is_idk = true;
        r.text = "I don't know.";
    }
    return r;
}

ToolResult MockBackend::caption(const GroundedVideo& video, const NodePath& node,
                                const TreeConfig& cfg) {
    return mock_caption(video, node, cfg);
}

ToolResult MockBackend::video_qa(const GroundedVideo& video, const GroundedQA& qa,
                                 const NodePath& node, const std::string&, const TreeConfig& cfg) {
    return mock_qa(video, qa, node, cfg, min_coverage_);
}

std::vector<CaptionMention> caption_mentions(const std::string& caption) {
    static const std::regex stamp(R"((\d+(?:\.\d+)?)s(?:-(\d+(?:\.\d+)?)s)?\b)");
    std::vector<CaptionMention> out;
    auto it = std::sregex_iterator(caption.begin(), caption.end(), stamp);
    const auto end = std::sregex_iterator();
    for (; it != end; ++it) {
        const auto& m = *it;
        const auto from = static_cast<std::size_t>(m.position(0) + m.length(0));
        auto next = std::next(it);
        const std::size_t to =
            next == end ? caption.size() : static_cast<std::size_t>(next->position(0));
        const double start = std::stod(m.str(1));
        const double end = m[2].matched ? std::stod(m.str(2)) : start;
        out.push_back({start, end, caption.substr(from, to - from)});
    }
    return out;
}

std::vector<std::string> content_tokens(const std::string& text) {
    static const std::set<std::string> stop{
        "a",     "an",   "the",  "is",    "are",  "was",  "were", "of",   "in",   "on",
        "at",    "to",   "and",  "or",    "that", "this", "what", "which", "who", "whom",
        "how",   "many", "near", "with",  "for",  "by",   "from", "it",   "its",  "be",
        "color", "clip", "video", "keywords", "does", "do", "did", "there", "no", "notable",
        "events"};
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !stop.count(cur)) out.push_back(cur);
        cur.clear();
    };
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

}  // namespace videonav
