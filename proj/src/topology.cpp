#include "cachesim/topology.hpp"

#include <algorithm>
#include <cstdlib>
#include <utility>

#include "cachesim/error.hpp"

namespace cachesim {

Topology::Topology(std::uint32_t width, Wrap wrap) : width_(width), wrap_(wrap) {
    if (width == 0) {
        throw ConfigError("topology width must be at least 1");
    }
    if (width > 65535) {
        throw ConfigError("topology width must be below 65536");
    }
}

std::uint32_t Topology::distance(NodeId u, NodeId v) const noexcept {
    const auto axis = [this](std::uint32_t a, std::uint32_t b) {
        const std::uint32_t diff = a > b ? a - b : b - a;
        return is_torus() ? std::min(diff, width_ - diff) : diff;
    };
    return axis(row(u), row(v)) + axis(col(u), col(v));
}

Topology::OffsetRange Topology::axis_offsets(std::uint32_t coord) const noexcept {
    const auto w = static_cast<std::int32_t>(width_);
    if (!is_torus()) {
        return {-static_cast<std::int32_t>(coord), w - 1 - static_cast<std::int32_t>(coord)};
    }
    // Odd w: symmetric window. Even w: the antipodal offset w/2 is kept once.
    if (w % 2 == 1) {
        return {-(w - 1) / 2, (w - 1) / 2};
    }
    return {-(w / 2 - 1), w / 2};
}

Topology::OffsetRange Topology::row_offsets(NodeId origin) const noexcept {
    return axis_offsets(row(origin));
}

Topology::OffsetRange Topology::col_offsets(NodeId origin) const noexcept {
    return axis_offsets(col(origin));
}

std::uint32_t Topology::eccentricity(NodeId u) const noexcept {
    const auto extent = [](OffsetRange r) {
        return static_cast<std::uint32_t>(std::max(-r.lo, r.hi));
    };
    return extent(row_offsets(u)) + extent(col_offsets(u));
}

void Topology::append_shell(NodeId origin, std::uint32_t d, std::vector<NodeId>& out) const {
    const OffsetRange rows = row_offsets(origin);
    const OffsetRange cols = col_offsets(origin);
    const auto w = static_cast<std::int32_t>(width_);
    const auto r0 = static_cast<std::int32_t>(row(origin));
    const auto c0 = static_cast<std::int32_t>(col(origin));
    const auto dist = static_cast<std::int32_t>(d);

    const auto wrap_coord = [w](std::int32_t x) {
        x %= w;
        return static_cast<std::uint32_t>(x < 0 ? x + w : x);
    };
    const auto emit = [&](std::int32_t dr, std::int32_t dc) {
        if (dc < cols.lo || dc > cols.hi) {
            return;
        }
        out.push_back(at(wrap_coord(r0 + dr), wrap_coord(c0 + dc)));
    };

    const std::int32_t first = std::max(rows.lo, -dist);
    const std::int32_t last = std::min(rows.hi, dist);
    for (std::int32_t dr = first; dr <= last; ++dr) {
        const std::int32_t rem = dist - std::abs(dr);
        emit(dr, rem);
        if (rem != 0) {
            emit(dr, -rem);
        }
    }
}

std::vector<NodeId> Topology::ball(NodeId u, std::uint32_t r) const {
    std::vector<NodeId> out;
    if (r >= eccentricity(u)) {
        // Whole graph: a plain scan, sorted by distance.
        out.reserve(size());
        for (std::uint32_t id = 0; id < size(); ++id) {
            out.push_back(NodeId{id});
        }
        std::stable_sort(out.begin(), out.end(), [&](NodeId a, NodeId b) {
            return distance(u, a) < distance(u, b);
        });
        return out;
    }
    for (std::uint32_t d = 0; d <= r; ++d) {
        append_shell(u, d, out);
    }
    return out;
}

ShellWalker::ShellWalker(const Topology& topology, NodeId origin, std::uint64_t seed)
    : topology_(&topology), origin_(origin), rng_(seed), max_distance_(topology.eccentricity(origin)) {
    shell_.reserve(4 * static_cast<std::size_t>(topology.width()));
}

void ShellWalker::reset(NodeId origin, std::uint64_t seed) {
    origin_ = origin;
    rng_ = SplitMix64(seed);
    max_distance_ = topology_->eccentricity(origin);
    distance_ = 0;
    cursor_ = 0;
    started_ = false;
    exhausted_ = false;
    shell_.clear();
}

void ShellWalker::load_next_shell() {
    shell_.clear();
    cursor_ = 0;
    while (shell_.empty()) {
        if (started_) {
            if (distance_ >= max_distance_) {
                exhausted_ = true;
                return;
            }
            ++distance_;
        }
        started_ = true;
        topology_->append_shell(origin_, distance_, shell_);
    }
    // Fisher-Yates with our own bounded draw for cross-platform streams.
    for (std::size_t i = shell_.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng_, i));
        std::swap(shell_[i - 1], shell_[j]);
    }
}

std::optional<NodeAtDistance> ShellWalker::next() {
    if (exhausted_) {
        return std::nullopt;
    }
    if (cursor_ == shell_.size()) {
        load_next_shell();
        if (exhausted_) {
            return std::nullopt;
        }
    }
    return NodeAtDistance{shell_[cursor_++], distance_};
}

} // namespace cachesim
