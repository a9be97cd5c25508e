#include "videonav/tree.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "videonav/errors.hpp"

namespace videonav {

namespace {

constexpr std::array<int, kScheduledLevels> kFrames{256, 128, 64, 32};
constexpr std::array<int, kScheduledLevels> kWords{400, 400, 400, 200};

void check_level(int level) {
    if (level < 0 || level >= kScheduledLevels) {
        throw DomainError(fmt::format("level {} outside the schedule [0, {}]", level,
                                      kScheduledLevels - 1));
    }
}

std::string join_indices(const std::vector<int>& indices, int offset) {
    std::string out = "(";
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(indices[i] + offset);
    }
    return out + ")";
}

}  // namespace

NodePath NodePath::child(int index) const {
    auto next = indices_;
    next.push_back(index);
    return NodePath(std::move(next));
}

NodePath NodePath::prefix(int length) const {
    if (length < 0 || length > level()) {
        throw PathError(fmt::format("prefix length {} of path {}", length, to_string()));
    }
    return NodePath(std::vector<int>(indices_.begin(), indices_.begin() + length));
}

std::string NodePath::to_string() const { return join_indices(indices_, 0); }

std::string NodePath::wire_string() const { return join_indices(indices_, 1); }

std::size_t NodePathHash::operator()(const NodePath& p) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (int i : p.indices()) {
        h ^= static_cast<std::size_t>(i) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h ^ static_cast<std::size_t>(p.level());
}

int derive_width(double duration_s, int depth, double leaf_target_s) {
    if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
        throw DomainError(fmt::format("duration must be positive, got {}", duration_s));
    }
    if (depth < 1) throw DomainError(fmt::format("depth must be >= 1, got {}", depth));
    if (!(leaf_target_s > 0.0)) {
        throw DomainError(fmt::format("leaf target must be positive, got {}", leaf_target_s));
    }
    // std::round rounds halfway cases away from zero.
    const double raw = std::pow(duration_s / leaf_target_s, 1.0 / depth);
    const double k = std::round(raw);
    return static_cast<int>(std::clamp(k, double{kMinWidth}, double{kMaxWidth}));
}

TreeConfig make_tree_config(double duration_s, int depth, double leaf_target_s,
                            std::optional<int> width_override) {
    TreeConfig cfg;
    cfg.depth = depth;
    cfg.leaf_target_s = leaf_target_s;
    if (width_override) {
        if (*width_override < kMinWidth || *width_override > kMaxWidth) {
            throw ConfigError(fmt::format("width override {} outside [{}, {}]", *width_override,
                                          kMinWidth, kMaxWidth));
        }
        if (depth < 1) throw DomainError(fmt::format("depth must be >= 1, got {}", depth));
        cfg.width = *width_override;
    } else {
        cfg.width = derive_width(duration_s, depth, leaf_target_s);
    }
    return cfg;
}

bool is_valid_path(const NodePath& path, const TreeConfig& cfg) noexcept {
    if (path.level() > cfg.depth) return false;
    return std::all_of(path.indices().begin(), path.indices().end(),
                       [&](int i) { return i >= 0 && i < cfg.width; });
}

void check_path(const NodePath& path, const TreeConfig& cfg) {
    if (path.level() > cfg.depth) {
        throw PathError(fmt::format("path {} deeper than tree depth {}", path.to_string(),
                                    cfg.depth));
    }
    for (int i : path.indices()) {
        if (i < 0 || i >= cfg.width) {
            throw PathError(fmt::format("index {} of path {} outside [0, {}]", i,
                                        path.to_string(), cfg.width - 1));
        }
    }
}

Interval interval_of(const NodePath& path, double duration_s, const TreeConfig& cfg) {
    check_path(path, cfg);
    double a = 0.0;
    double b = duration_s;
    const double k = cfg.width;
    for (int i : path.indices()) {
        const double span = b - a;
        const double lo = a + i * span / k;
        const double hi = (i + 1 == cfg.width) ? b : a + (i + 1) * span / k;
        a = lo;
        b = hi;
    }
    return {a, b};
}

std::vector<NodePath> children(const NodePath& path, const TreeConfig& cfg) {
    check_path(path, cfg);
    if (path.level() == cfg.depth) {
        throw StructureError(fmt::format("leaf {} has no children", path.to_string()));
    }
    std::vector<NodePath> out;
    out.reserve(cfg.width);
    for (int i = 0; i < cfg.width; ++i) out.push_back(path.child(i));
    return out;
}

std::optional<NodePath> parent(const NodePath& path) {
    if (path.is_root()) return std::nullopt;
    return path.prefix(path.level() - 1);
}

std::vector<NodePath> siblings(const NodePath& path, const TreeConfig& cfg) {
    check_path(path, cfg);
    const auto up = parent(path);
    if (!up) return {};
    std::vector<NodePath> out;
    for (int i = 0; i < cfg.width; ++i) {
        if (i != path.back()) out.push_back(up->child(i));
    }
    return out;
}

bool is_leaf(const NodePath& path, const TreeConfig& cfg) {
    check_path(path, cfg);
    return path.level() == cfg.depth;
}

std::vector<NodePath> nodes_at_level(int level, const TreeConfig& cfg) {
    if (level < 0 || level > cfg.depth) {
        throw PathError(fmt::format("level {} outside [0, {}]", level, cfg.depth));
    }
    std::vector<NodePath> frontier{NodePath::root()};
    for (int d = 0; d < level; ++d) {
        std::vector<NodePath> next;
        next.reserve(frontier.size() * cfg.width);
        for (const auto& p : frontier) {
            for (int i = 0; i < cfg.width; ++i) next.push_back(p.child(i));
        }
        frontier = std::move(next);
    }
    return frontier;
}

int frame_budget(int level) {
    check_level(level);
    return kFrames[level];
}

double resolution(int level) {
    check_level(level);
    switch (level) {
        case 0: return 512.0 / (2.0 * std::sqrt(2.0));
        case 1: return 512.0 / 2.0;
        case 2: return 512.0 / std::sqrt(2.0);
        default: return 512.0;
    }
}

int caption_word_budget(int level) {
    check_level(level);
    return kWords[level];
}

NodePath best_overlap_path(const IntervalSet& target, double duration_s, const TreeConfig& cfg,
                           int max_level) {
    if (max_level < 0 || max_level > cfg.depth) {
        throw PathError(fmt::format("level {} outside [0, {}]", max_level, cfg.depth));
    }
    NodePath at = NodePath::root();
    while (at.level() < max_level) {
        NodePath best = at.child(0);
        double best_overlap = -1.0;
        for (int i = 0; i < cfg.width; ++i) {
            const auto c = at.child(i);
            const double ov = intersection_length(target, interval_of(c, duration_s, cfg));
            if (ov > best_overlap + 1e-9) {
                best_overlap = ov;
                best = c;
            }
        }
        at = best;
    }
    return at;
}

}  // namespace videonav
