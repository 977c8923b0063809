#pragma once

#include <compare>
#include <cstdint>
#include <iterator>
#include <optional>
#include <vector>

#include "cachesim/rng.hpp"

namespace cachesim {

struct NodeId {
    std::uint32_t value = 0;

    friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

enum class Wrap { grid, torus };

/// Square w x w lattice with L1 shortest-path distance, optionally wrapped
/// into a torus. Node ids are row-major: id = row * w + col.
class Topology {
public:
    Topology(std::uint32_t width, Wrap wrap);

    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t size() const noexcept { return width_ * width_; }
    bool is_torus() const noexcept { return wrap_ == Wrap::torus; }
    Wrap wrap() const noexcept { return wrap_; }

    bool contains(NodeId u) const noexcept { return u.value < size(); }
    std::uint32_t row(NodeId u) const noexcept { return u.value / width_; }
    std::uint32_t col(NodeId u) const noexcept { return u.value % width_; }
    NodeId at(std::uint32_t row, std::uint32_t col) const noexcept { return NodeId{row * width_ + col}; }

    std::uint32_t distance(NodeId u, NodeId v) const noexcept;

    // Largest distance from u to any node.
    std::uint32_t eccentricity(NodeId u) const noexcept;

    /// All nodes within distance r of u, in nondecreasing distance order.
    std::vector<NodeId> ball(NodeId u, std::uint32_t r) const;

    // Row/column offset window such that every node has exactly one
    // representation origin + (dr, dc) with dr in [lo, hi], and its distance
    // from the origin is |dr| + |dc|.
    struct OffsetRange {
        std::int32_t lo = 0;
        std::int32_t hi = 0;
    };
    OffsetRange row_offsets(NodeId origin) const noexcept;
    OffsetRange col_offsets(NodeId origin) const noexcept;

    // Appends the nodes at exactly distance d from the origin.
    void append_shell(NodeId origin, std::uint32_t d, std::vector<NodeId>& out) const;

private:
    OffsetRange axis_offsets(std::uint32_t coord) const noexcept;

    std::uint32_t width_;
    Wrap wrap_;
};

struct NodeAtDistance {
    NodeId node;
    std::uint32_t distance = 0;
};

/// Lazy enumeration of every node in nondecreasing distance from an origin.
/// Each distance shell is emitted in a uniformly random order drawn from a
/// private generator seeded by the caller, which is how ties between
/// equidistant nodes get broken. Single consumer; not thread-safe.
class ShellWalker {
public:
    ShellWalker(const Topology& topology, NodeId origin, std::uint64_t seed);

    std::optional<NodeAtDistance> next();

    // Restarts the walk, keeping the shell buffer's capacity.
    void reset(NodeId origin, std::uint64_t seed);

    // Distance of the shell currently being emitted.
    std::uint32_t current_distance() const noexcept { return distance_; }

    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = NodeAtDistance;
        using difference_type = std::ptrdiff_t;

        iterator() = default;
        explicit iterator(ShellWalker* walker) : walker_(walker) { ++*this; }

        const NodeAtDistance& operator*() const { return *current_; }
        const NodeAtDistance* operator->() const { return &*current_; }
        iterator& operator++() {
            current_ = walker_->next();
            return *this;
        }
        void operator++(int) { ++*this; }
        bool operator==(std::default_sentinel_t) const { return !current_.has_value(); }

    private:
        ShellWalker* walker_ = nullptr;
        std::optional<NodeAtDistance> current_;
    };

    iterator begin() { return iterator(this); }
    std::default_sentinel_t end() const { return {}; }

private:
    void load_next_shell();

    const Topology* topology_;
    NodeId origin_;
    SplitMix64 rng_;
    std::uint32_t max_distance_;
    std::uint32_t distance_ = 0;
    std::size_t cursor_ = 0;
    bool started_ = false;
    bool exhausted_ = false;
    std::vector<NodeId> shell_;
};

inline ShellWalker nodes_by_distance(const Topology& topology, NodeId origin, std::uint64_t seed) {
    return ShellWalker(topology, origin, seed);
}

// Closed-form ball size on the torus below the wrap horizon.
constexpr std::uint64_t torus_ball_size(std::uint64_t r) noexcept { return 2 * r * (r + 1) + 1; }

} // namespace cachesim
