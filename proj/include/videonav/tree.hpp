#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "videonav/interval_set.hpp"

namespace videonav {

inline constexpr int kDefaultDepth = 3;
inline constexpr double kDefaultLeafTargetS = 16.0;
inline constexpr int kMinWidth = 2;
inline constexpr int kMaxWidth = 16;
/// Levels covered by the frame / resolution / word-budget schedules.
inline constexpr int kScheduledLevels = 4;

/// Shape of the uniform K-ary partition of a video timeline.
struct TreeConfig {
    int depth = kDefaultDepth;
    double leaf_target_s = kDefaultLeafTargetS;
    int width = kMinWidth;

    friend bool operator==(const TreeConfig&, const TreeConfig&) = default;
};

/// Position in the video tree: zero-based child indices from the root down.
/// The empty path is the root (whole video); a path of length `depth` is a leaf.
class NodePath {
public:
    NodePath() = default;
    NodePath(std::initializer_list<int> indices) : indices_(indices) {}
    explicit NodePath(std::vector<int> indices) : indices_(std::move(indices)) {}

    static NodePath root() { return {}; }

    const std::vector<int>& indices() const noexcept { return indices_; }
    int level() const noexcept { return static_cast<int>(indices_.size()); }
    bool is_root() const noexcept { return indices_.empty(); }
    int operator[](std::size_t i) const { return indices_.at(i); }
    int back() const { return indices_.back(); }

    NodePath child(int index) const;
    /// Prefix of the path of the given length.
    NodePath prefix(int length) const;

    /// Internal zero-based form, e.g. "(1,2)"; the root renders as "()".
    std::string to_string() const;
    /// One-based wire form used in tool calls, e.g. "(2,3)".
    std::string wire_string() const;

    friend auto operator<=>(const NodePath&, const NodePath&) = default;
    friend bool operator==(const NodePath&, const NodePath&) = default;

private:
    std::vector<int> indices_;
};

struct NodePathHash {
    std::size_t operator()(const NodePath& p) const noexcept;
};

/// round((duration / leaf_target)^(1/depth)) with half-away-from-zero rounding,
/// clamped to [2, 16]. Throws DomainError for non-positive duration or depth < 1.
int derive_width(double duration_s, int depth = kDefaultDepth,
                 double leaf_target_s = kDefaultLeafTargetS);

/// Config with the width derived from the duration unless overridden.
TreeConfig make_tree_config(double duration_s, int depth = kDefaultDepth,
                            double leaf_target_s = kDefaultLeafTargetS,
                            std::optional<int> width_override = std::nullopt);

/// Throws PathError if `path` does not address a node of `cfg`.
void check_path(const NodePath& path, const TreeConfig& cfg);
bool is_valid_path(const NodePath& path, const TreeConfig& cfg) noexcept;

/// Half-open interval covered by `path`. Child i of [a, b) is
/// [a + i(b-a)/K, a + (i+1)(b-a)/K); the last child ends exactly at b.
Interval interval_of(const NodePath& path, double duration_s, const TreeConfig& cfg);

std::vector<NodePath> children(const NodePath& path, const TreeConfig& cfg);
std::optional<NodePath> parent(const NodePath& path);
std::vector<NodePath> siblings(const NodePath& path, const TreeConfig& cfg);
bool is_leaf(const NodePath& path, const TreeConfig& cfg);

/// All nodes of a given level in index order.
std::vector<NodePath> nodes_at_level(int level, const TreeConfig& cfg);

/// Frames sampled by the caption model: 256, 128, 64, 32 for levels 0..3.
int frame_budget(int level);
/// Square frame side in pixels: 512/(2*sqrt 2), 512/2, 512/sqrt 2, 512.
double resolution(int level);
/// Suggested caption length in words: 400, 400, 400, 200.
int caption_word_budget(int level);

/// Level-1 ... leaf path whose interval overlaps `target` most, descending
/// greedily; ties go to the smaller child index. Stops at `max_level`.
NodePath best_overlap_path(const IntervalSet& target, double duration_s, const TreeConfig& cfg,
                           int max_level);

}  // namespace videonav

template <>
struct std::hash<videonav::NodePath> : videonav::NodePathHash {};
