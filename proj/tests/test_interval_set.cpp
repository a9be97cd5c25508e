#include <doctest.h>

#include <random>

#include "videonav/errors.hpp"
#include "videonav/interval_set.hpp"

using namespace videonav;

namespace {

IntervalSet random_set(std::mt19937_64& rng, int max_n, int horizon) {
    std::uniform_int_distribution<int> count(0, max_n);
    std::uniform_int_distribution<int> at(0, horizon);
    std::vector<Interval> v;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        int a = at(rng), b = at(rng);
        if (a > b) std::swap(a, b);
        v.push_back({static_cast<double>(a), static_cast<double>(b)});
    }
    return IntervalSet(v);
}

/// Unit cells [t, t+1) covered by the set, for integer endpoints.
std::vector<char> cells(const IntervalSet& s, int horizon) {
    std::vector<char> c(static_cast<std::size_t>(horizon), 0);
    for (const auto& iv : s) {
        for (int t = static_cast<int>(iv.start); t < static_cast<int>(iv.end); ++t) c[t] = 1;
    }
    return c;
}

}  // namespace

TEST_CASE("normalize merges overlapping and touching intervals") {
    CHECK(IntervalSet{{0, 10}, {5, 15}}.intervals() == std::vector<Interval>{{0, 15}});
    CHECK(IntervalSet{{0, 10}, {10, 20}}.intervals() == std::vector<Interval>{{0, 20}});
    CHECK(IntervalSet{{30, 40}, {0, 10}}.intervals() == std::vector<Interval>{{0, 10}, {30, 40}});
    CHECK(IntervalSet{{5, 5}, {7, 7}}.empty());
}

TEST_CASE("invalid endpoints are rejected") {
    CHECK_THROWS_AS(IntervalSet({{10, 5}}), DomainError);
    CHECK_THROWS_AS(IntervalSet({{0, std::nan("")}}), DomainError);
    CHECK_THROWS_AS(IntervalSet({{-INFINITY, 3}}), DomainError);
}

TEST_CASE("intersection respects half-open boundaries") {
    CHECK(intersection_length(IntervalSet{{0, 10}}, IntervalSet{{10, 20}}) == 0.0);
    CHECK(intersection_length(IntervalSet{{100, 116}}, IntervalSet{{96, 112}}) == doctest::Approx(12.0));
    CHECK(intersection_length(IntervalSet{{100, 116}}, Interval{96, 112}) == doctest::Approx(12.0));
    CHECK(total_length(IntervalSet{{0, 3}, {5, 9}}) == 7.0);
}

TEST_CASE("union and intersection sets") {
    const IntervalSet a{{0, 10}, {20, 30}};
    const IntervalSet b{{5, 25}};
    CHECK(set_union(a, b).intervals() == std::vector<Interval>{{0, 30}});
    CHECK(set_intersection(a, b).intervals() == std::vector<Interval>{{5, 10}, {20, 25}});
    CHECK(set_intersection(a, IntervalSet{}).empty());
}

TEST_CASE("within checks bounds") {
    CHECK(within(IntervalSet{{1, 2}}, 0, 3));
    CHECK_FALSE(within(IntervalSet{{1, 4}}, 0, 3));
    CHECK(within(IntervalSet{}, 0, 0));
}

TEST_CASE("set operations agree with a unit-grid count") {
    std::mt19937_64 rng(20240601);
    const int horizon = 200;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = random_set(rng, 6, horizon);
        const auto b = random_set(rng, 6, horizon);
        const auto ca = cells(a, horizon), cb = cells(b, horizon);
        int na = 0, inter = 0, uni = 0;
        for (int t = 0; t < horizon; ++t) {
            na += ca[t];
            inter += ca[t] && cb[t];
            uni += ca[t] || cb[t];
        }
        REQUIRE(a.total_length() == na);
        REQUIRE(intersection_length(a, b) == inter);
        REQUIRE(set_union(a, b).total_length() == uni);
        REQUIRE(set_intersection(a, b).total_length() == inter);
        const auto& iv = a.intervals();
        for (std::size_t i = 0; i < iv.size(); ++i) {
            REQUIRE(iv[i].start < iv[i].end);
            if (i > 0) REQUIRE(iv[i - 1].end < iv[i].start);
        }
    }
}
