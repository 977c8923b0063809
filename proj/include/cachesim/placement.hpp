#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cachesim/fieldcode.hpp"
#include "cachesim/popularity.hpp"
#include "cachesim/rng.hpp"
#include "cachesim/topology.hpp"

namespace cachesim {

enum class Scheme { uncoded, coded, uncoded_chunks };

std::string_view to_string(Scheme scheme) noexcept;

// One cache slot. `index` is the 1-based chunk index for uncoded chunks and 0
// otherwise; coded chunks keep their coefficients in CacheState.
struct CacheEntry {
    std::uint32_t file = 1;
    std::uint32_t index = 0;

    friend constexpr bool operator==(CacheEntry, CacheEntry) = default;
};

struct Holding {
    NodeId node;
    std::uint32_t slot = 0;

    friend constexpr bool operator==(Holding, Holding) = default;
};

/// Contents of every cache in the network under one placement scheme.
///
/// Each node owns a fixed number of slots: M for whole files, M * ell for
/// chunk schemes. Two lookup structures are derived from the slot table and
/// must be refreshed with rebuild_index() after set_entry() calls:
///   - per node, the slots sorted by file (cached order kept within a file);
///   - per file, the list of (node, slot) holdings in node order.
class CacheState {
public:
    CacheState(Scheme scheme, std::uint32_t nodes, std::uint32_t library_size, std::uint32_t cache_size,
               std::uint32_t ell, std::optional<PrimeField> field = std::nullopt);

    Scheme scheme() const noexcept { return scheme_; }
    std::uint32_t nodes() const noexcept { return nodes_; }
    std::uint32_t library_size() const noexcept { return library_size_; }
    std::uint32_t cache_size() const noexcept { return cache_size_; }
    std::uint32_t ell() const noexcept { return ell_; }
    std::uint32_t slots_per_node() const noexcept { return slots_; }
    const std::optional<PrimeField>& field() const noexcept { return field_; }

    std::span<const CacheEntry> entries(NodeId node) const noexcept {
        return {entries_.data() + static_cast<std::size_t>(node.value) * slots_, slots_};
    }
    const CacheEntry& entry(NodeId node, std::uint32_t slot) const noexcept {
        return entries_[static_cast<std::size_t>(node.value) * slots_ + slot];
    }

    // Coefficient vector of a coded slot (empty for other schemes).
    std::span<const Element> coeffs(NodeId node, std::uint32_t slot) const noexcept;
    std::span<Element> mutable_coeffs(NodeId node, std::uint32_t slot) noexcept;

    void set_entry(NodeId node, std::uint32_t slot, CacheEntry entry) noexcept {
        entries_[static_cast<std::size_t>(node.value) * slots_ + slot] = entry;
    }

    void rebuild_index();

    // Slots of `node` holding `file`, ascending.
    std::span<const std::uint32_t> slots_of(NodeId node, FileId file) const noexcept;
    bool holds(NodeId node, FileId file) const noexcept { return !slots_of(node, file).empty(); }

    std::span<const Holding> holders(FileId file) const noexcept;
    std::size_t copies(FileId file) const noexcept { return holders(file).size(); }

private:
    Scheme scheme_;
    std::uint32_t nodes_;
    std::uint32_t library_size_;
    std::uint32_t cache_size_;
    std::uint32_t ell_;
    std::uint32_t slots_;
    std::optional<PrimeField> field_;
    std::vector<CacheEntry> entries_;
    std::vector<Element> coeffs_;

    std::vector<std::uint32_t> sorted_files_;
    std::vector<std::uint32_t> sorted_slots_;
    std::vector<std::uint32_t> holder_offsets_;
    std::vector<Holding> holdings_;
};

// Each node draws M files iid from the popularity profile. Duplicates allowed.
CacheState place_uncoded(const Topology& topology, const PopularityProfile& profile, std::uint32_t cache_size,
                         Rng& rng);

// Each node draws M * ell coded chunks: file from the profile, coefficients
// iid uniform over the field.
CacheState place_coded(const Topology& topology, const PopularityProfile& profile, std::uint32_t cache_size,
                       std::uint32_t ell, const PrimeField& field, Rng& rng);

// Each node draws M * ell uncoded chunks: file from the profile, chunk index
// uniform on [1, ell].
CacheState place_uncoded_chunks(const Topology& topology, const PopularityProfile& profile,
                                std::uint32_t cache_size, std::uint32_t ell, Rng& rng);

/// Rewrites as few slots as possible so that the whole library is recoverable
/// from the network: every file has a replica (uncoded), at least ell coded
/// chunks (coded), or every (file, index) pair has a copy (uncoded chunks).
/// Each rewritten slot is chosen uniformly among the slots of the currently
/// most-replicated files. Returns the number of rewritten slots. Throws
/// InfeasibleError when total capacity cannot cover the library.
std::size_t ensure_coverage(CacheState& cache, Rng& rng);

} // namespace cachesim
