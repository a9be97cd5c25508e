#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "videonav/corpus.hpp"
#include "videonav/tree.hpp"

namespace videonav {

/// Output of one video_cap / video_qa invocation.
struct ToolResult {
    std::string text;
    NodePath node;
    int frames_used = 0;
    double wall_time_s = 0.0;
    /// QA only: the tool could not answer from this clip.
    bool is_idk = false;
    /// QA only: zero-based choice the tool settled on, when it named one.
    std::optional<int> answer_index;
    /// Set when the reply lacked the expected wrapper and was used verbatim.
    std::optional<std::string> warning;
};

enum class CostCategory { Round, Caption, QA };

/// Call counts (C1 rounds, C2 captions, C3 QA) and measured wall time per category.
struct CostCounters {
    long c1_rounds = 0;
    long c2_captions = 0;
    long c3_qa = 0;
    double round_time_s = 0.0;
    double caption_time_s = 0.0;
    double qa_time_s = 0.0;

    friend bool operator==(const CostCounters&, const CostCounters&) = default;
};

/// Thread-safe accumulator of CostCounters. Counters never decrease.
class CostMeter {
public:
    CostMeter() = default;
    CostMeter(const CostMeter& other) : counters_(other.snapshot()) {}
    CostMeter& operator=(const CostMeter& other);

    /// Throws DomainError for negative or non-finite wall time.
    void record(CostCategory category, double wall_time_s);
    CostCounters snapshot() const;

private:
    mutable std::mutex mu_;
    CostCounters counters_;
};

void record_cost(CostMeter& meter, CostCategory category, double wall_time_s);

/// Fraction of the clue's total length that lies inside `clip`.
double clue_coverage(const Interval& clip, const IntervalSet& clue);

/// Deterministic caption: every event intersecting the node, with its absolute
/// time range and keywords, truncated to the level's word budget.
ToolResult mock_caption(const GroundedVideo& video, const NodePath& node, const TreeConfig& cfg);

/// Ground-truth choice when the leaf covers at least `min_coverage` of the
/// clue, "I don't know" otherwise. Throws LegalityError for non-leaf nodes.
ToolResult mock_qa(const GroundedVideo& video, const GroundedQA& qa, const NodePath& node,
                   const TreeConfig& cfg, double min_coverage = 0.5);

/// Common interface of the mock and HTTP tool backends. Implementations must
/// be safe to call from several threads at once.
class ToolBackend {
public:
    virtual ~ToolBackend() = default;

    virtual ToolResult caption(const GroundedVideo& video, const NodePath& node,
                               const TreeConfig& cfg) = 0;
    virtual ToolResult video_qa(const GroundedVideo& video, const GroundedQA& qa,
                                const NodePath& node, const std::string& query,
                                const TreeConfig& cfg) = 0;
};

class MockBackend final : public ToolBackend {
public:
    explicit MockBackend(double min_coverage = 0.5) : min_coverage_(min_coverage) {}

    ToolResult caption(const GroundedVideo& video, const NodePath& node,
                       const TreeConfig& cfg) override;
    ToolResult video_qa(const GroundedVideo& video, const GroundedQA& qa, const NodePath& node,
                        const std::string& query, const TreeConfig& cfg) override;

private:
    double min_coverage_;
};

/// A timestamp ("12.0s") or time range ("12.0s-20.0s") found in caption text
/// and the words that follow it. Point mentions have end_s == time_s.
struct CaptionMention {
    double time_s = 0.0;
    double end_s = 0.0;
    std::string text;
};

/// Splits caption text at timestamps and time ranges.
std::vector<CaptionMention> caption_mentions(const std::string& caption);

/// Lowercase alphabetic tokens minus common stopwords.
std::vector<std::string> content_tokens(const std::string& text);

}  // namespace videonav
