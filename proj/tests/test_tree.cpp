#include <doctest.h>

#include <cmath>
#include <random>

#include "videonav/errors.hpp"
#include "videonav/tree.hpp"

using namespace videonav;

TEST_CASE("width follows duration") {
    CHECK(derive_width(4096, 3) == 6);
    CHECK(derive_width(4038, 3) == 6);
    CHECK(derive_width(250, 3) == 3);  // 2.5 rounds away from zero
    CHECK(derive_width(10, 3) == 2);
    CHECK(derive_width(1e9, 3) == 16);
    CHECK(derive_width(256, 2) == 4);
    CHECK_THROWS_AS(derive_width(0, 3), DomainError);
    CHECK_THROWS_AS(derive_width(100, 0), DomainError);
}

TEST_CASE("intervals of a 4096 s video") {
    const auto cfg = make_tree_config(4096);
    REQUIRE(cfg.width == 6);
    const Interval first = interval_of({0}, 4096, cfg);
    CHECK(first.start == 0.0);
    CHECK(first.end == doctest::Approx(4096.0 / 6));
    CHECK(interval_of({5}, 4096, cfg).end == 4096.0);
    CHECK(interval_of({5, 5, 5}, 4096, cfg).end == 4096.0);
    CHECK(interval_of(NodePath::root(), 4096, cfg).end == 4096.0);
    CHECK(interval_of({0, 0, 5}, 4096, cfg).start == doctest::Approx(5 * 4096.0 / 216));
}

TEST_CASE("paths and navigation") {
    const TreeConfig cfg = make_tree_config(4096);
    const NodePath p{1, 2};
    CHECK(p.to_string() == "(1,2)");
    CHECK(p.wire_string() == "(2,3)");
    CHECK(NodePath::root().to_string() == "()");
    CHECK(p.child(4) == NodePath{1, 2, 4});
    CHECK(parent(p) == NodePath{1});
    CHECK_FALSE(parent(NodePath::root()).has_value());
    CHECK(children(p, cfg).size() == 6);
    CHECK(siblings(p, cfg).size() == 5);
    CHECK(is_leaf({1, 2, 3}, cfg));
    CHECK_THROWS_AS(children({1, 2, 3}, cfg), StructureError);
    CHECK_THROWS_AS(check_path({6}, cfg), PathError);
    CHECK_THROWS_AS(check_path({0, 0, 0, 0}, cfg), PathError);
    CHECK_THROWS_AS(check_path({-1}, cfg), PathError);
    CHECK(nodes_at_level(2, cfg).size() == 36);
    CHECK(nodes_at_level(0, cfg) == std::vector<NodePath>{NodePath::root()});
}

TEST_CASE("children partition their parent") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dur(64.0, 100000.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double T = dur(rng);
        const auto cfg = make_tree_config(T);
        for (int level = 0; level < cfg.depth; ++level) {
            for (const auto& node : nodes_at_level(level, cfg)) {
                const Interval iv = interval_of(node, T, cfg);
                double cursor = iv.start;
                for (const auto& c : children(node, cfg)) {
                    const Interval ci = interval_of(c, T, cfg);
                    REQUIRE(std::abs(ci.start - cursor) < 1e-9);
                    REQUIRE(ci.end > ci.start);
                    cursor = ci.end;
                }
                REQUIRE(cursor == iv.end);
            }
            if (cfg.width > 8) break;
        }
    }
}

TEST_CASE("frame and resolution schedule") {
    CHECK(frame_budget(0) == 256);
    CHECK(frame_budget(1) == 128);
    CHECK(frame_budget(2) == 64);
    CHECK(frame_budget(3) == 32);
    CHECK(caption_word_budget(0) == 400);
    CHECK(caption_word_budget(3) == 200);
    CHECK(resolution(1) == 256.0);
    CHECK(resolution(3) == 512.0);
    const double pixels0 = frame_budget(0) * resolution(0) * resolution(0);
    for (int l = 1; l < 4; ++l) {
        CHECK(frame_budget(l) * resolution(l) * resolution(l) == doctest::Approx(pixels0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(frame_budget(4), DomainError);
    CHECK_THROWS_AS(resolution(-1), DomainError);
}

TEST_CASE("best overlap path descends greedily") {
    const auto cfg = make_tree_config(4096);
    const IntervalSet clue{{100, 116}};
    CHECK(best_overlap_path(clue, 4096, cfg, 1) == NodePath{0});
    const NodePath leaf = best_overlap_path(clue, 4096, cfg, 3);
    REQUIRE(leaf.level() == 3);
    const Interval iv = interval_of(leaf, 4096, cfg);
    CHECK(intersection_length(clue, iv) >= 8.0);
}
