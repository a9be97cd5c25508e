#include "videonav/interval_set.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "videonav/errors.hpp"

namespace videonav {

double overlap_length(const Interval& a, const Interval& b) noexcept {
    const double lo = std::max(a.start, b.start);
    const double hi = std::min(a.end, b.end);
    return hi > lo ? hi - lo : 0.0;
}

std::string to_string(const Interval& iv) {
    return fmt::format("[{}, {})", iv.start, iv.end);
}

IntervalSet::IntervalSet(std::initializer_list<Interval> intervals)
    : IntervalSet(std::span<const Interval>(intervals.begin(), intervals.size())) {}

IntervalSet::IntervalSet(std::span<const Interval> intervals) {
    std::vector<Interval> sorted;
    sorted.reserve(intervals.size());
    for (const auto& iv : intervals) {
        if (!std::isfinite(iv.start) || !std::isfinite(iv.end)) {
            throw DomainError("interval endpoints must be finite");
        }
        if (iv.start > iv.end) {
            throw DomainError(fmt::format("interval start > end in {}", to_string(iv)));
        }
        if (iv.end > iv.start) sorted.push_back(iv);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    for (const auto& iv : sorted) {
        if (!intervals_.empty() && iv.start <= intervals_.back().end) {
            intervals_.back().end = std::max(intervals_.back().end, iv.end);
        } else {
            intervals_.push_back(iv);
        }
    }
}

IntervalSet IntervalSet::normalize(std::span<const Interval> intervals) {
    return IntervalSet(intervals);
}

double IntervalSet::total_length() const noexcept {
    double sum = 0.0;
    for (const auto& iv : intervals_) sum += iv.length();
    return sum;
}

void IntervalSet::insert(const Interval& iv) {
    std::vector<Interval> all = intervals_;
    all.push_back(iv);
    *this = IntervalSet(all);
}

IntervalSet set_union(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Interval> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    return IntervalSet(all);
}

IntervalSet set_intersection(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Interval> out;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        const double lo = std::max(i->start, j->start);
        const double hi = std::min(i->end, j->end);
        if (hi > lo) out.push_back({lo, hi});
        if (i->end < j->end) {
            ++i;
        } else {
            ++j;
        }
    }
    return IntervalSet(out);
}

double intersection_length(const IntervalSet& a, const IntervalSet& b) noexcept {
    // Two-pointer sweep over sorted disjoint lists.
    double sum = 0.0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        sum += overlap_length(*i, *j);
        if (i->end < j->end) {
            ++i;
        } else {
            ++j;
        }
    }
    return sum;
}

double intersection_length(const IntervalSet& a, const Interval& b) noexcept {
    double sum = 0.0;
    for (const auto& iv : a) sum += overlap_length(iv, b);
    return sum;
}

double total_length(const IntervalSet& a) noexcept { return a.total_length(); }

bool within(const IntervalSet& inner, double lo, double hi) noexcept {
    return std::all_of(inner.begin(), inner.end(),
                       [&](const Interval& iv) { return iv.start >= lo && iv.end <= hi; });
}

std::string to_string(const IntervalSet& s) {
    std::string out = "{";
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (k) out += ", ";
        out += to_string(s.intervals()[k]);
    }
    return out + "}";
}

}  // namespace videonav
