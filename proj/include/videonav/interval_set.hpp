#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace videonav {

/// Half-open time interval [start, end) in seconds.
struct Interval {
    double start = 0.0;
    double end = 0.0;

    double length() const noexcept { return end - start; }
    bool empty() const noexcept { return !(end > start); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Length of the overlap of two half-open intervals (0 when disjoint).
double overlap_length(const Interval& a, const Interval& b) noexcept;

std::string to_string(const Interval& iv);

/// Sorted, disjoint, non-empty half-open intervals.
///
/// Every constructor normalizes: overlapping or touching intervals are merged
/// and zero-length intervals are dropped. An input interval with start > end
/// is rejected with DomainError.
class IntervalSet {
public:
    IntervalSet() = default;
    IntervalSet(std::initializer_list<Interval> intervals);
    explicit IntervalSet(std::span<const Interval> intervals);

    static IntervalSet normalize(std::span<const Interval> intervals);

    const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    bool empty() const noexcept { return intervals_.empty(); }
    std::size_t size() const noexcept { return intervals_.size(); }
    auto begin() const noexcept { return intervals_.begin(); }
    auto end() const noexcept { return intervals_.end(); }

    /// Smallest start and largest end. Precondition: non-empty.
    double lower() const { return intervals_.front().start; }
    double upper() const { return intervals_.back().end; }

    double total_length() const noexcept;

    void insert(const Interval& iv);

    friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

private:
    std::vector<Interval> intervals_;
};

IntervalSet set_union(const IntervalSet& a, const IntervalSet& b);
IntervalSet set_intersection(const IntervalSet& a, const IntervalSet& b);
double intersection_length(const IntervalSet& a, const IntervalSet& b) noexcept;
double intersection_length(const IntervalSet& a, const Interval& b) noexcept;
double total_length(const IntervalSet& a) noexcept;

/// True when every interval of `inner` lies inside [lo, hi).
bool within(const IntervalSet& inner, double lo, double hi) noexcept;

std::string to_string(const IntervalSet& s);

}  // namespace videonav
