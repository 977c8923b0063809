#include "cachesim/placement.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "cachesim/error.hpp"

namespace cachesim {

std::string_view to_string(Scheme scheme) noexcept {
    switch (scheme) {
    case Scheme::uncoded: return "uncoded";
    case Scheme::coded: return "coded";
    case Scheme::uncoded_chunks: return "uncoded-chunks";
    }
    return "unknown";
}

CacheState::CacheState(Scheme scheme, std::uint32_t nodes, std::uint32_t library_size, std::uint32_t cache_size,
                       std::uint32_t ell, std::optional<PrimeField> field)
    : scheme_(scheme),
      nodes_(nodes),
      library_size_(library_size),
      cache_size_(cache_size),
      ell_(scheme == Scheme::uncoded ? 1 : ell),
      slots_(0),
      field_(std::move(field)) {
    if (nodes == 0 || library_size == 0) {
        throw ConfigError("cache state needs at least one node and one file");
    }
    if (cache_size == 0) {
        throw ConfigError("cache size M must be at least 1");
    }
    if (ell_ == 0) {
        throw ConfigError("ell must be at least 1");
    }
    if (scheme == Scheme::coded && !field_) {
        throw ConfigError("coded cache state needs a field");
    }
    const std::uint64_t slots = std::uint64_t{cache_size} * ell_;
    if (slots > 0xFFFFFFFFULL || slots * nodes > (std::uint64_t{1} << 34)) {
        throw ConfigError("cache state too large");
    }
    slots_ = static_cast<std::uint32_t>(slots);
    entries_.resize(static_cast<std::size_t>(nodes) * slots_);
    if (scheme == Scheme::coded) {
        coeffs_.resize(entries_.size() * ell_);
    }
    rebuild_index();
}

std::span<const Element> CacheState::coeffs(NodeId node, std::uint32_t slot) const noexcept {
    if (coeffs_.empty()) {
        return {};
    }
    const std::size_t at = (static_cast<std::size_t>(node.value) * slots_ + slot) * ell_;
    return {coeffs_.data() + at, ell_};
}

std::span<Element> CacheState::mutable_coeffs(NodeId node, std::uint32_t slot) noexcept {
    if (coeffs_.empty()) {
        return {};
    }
    const std::size_t at = (static_cast<std::size_t>(node.value) * slots_ + slot) * ell_;
    return {coeffs_.data() + at, ell_};
}

void CacheState::rebuild_index() {
    const std::size_t total = entries_.size();
    sorted_files_.resize(total);
    sorted_slots_.resize(total);
    for (std::uint32_t node = 0; node < nodes_; ++node) {
        const std::size_t base = static_cast<std::size_t>(node) * slots_;
        auto slot_begin = sorted_slots_.begin() + static_cast<std::ptrdiff_t>(base);
        std::iota(slot_begin, slot_begin + slots_, 0U);
        std::sort(slot_begin, slot_begin + slots_, [&](std::uint32_t a, std::uint32_t b) {
            const std::uint32_t fa = entries_[base + a].file;
            const std::uint32_t fb = entries_[base + b].file;
            return fa != fb ? fa < fb : a < b;
        });
        for (std::uint32_t i = 0; i < slots_; ++i) {
            sorted_files_[base + i] = entries_[base + sorted_slots_[base + i]].file;
        }
    }

    // Counting sort by file keeps holdings in (node, slot) order.
    holder_offsets_.assign(static_cast<std::size_t>(library_size_) + 2, 0);
    for (const CacheEntry& e : entries_) {
        ++holder_offsets_[e.file + 1];
    }
    std::partial_sum(holder_offsets_.begin(), holder_offsets_.end(), holder_offsets_.begin());
    holdings_.resize(total);
    std::vector<std::uint32_t> cursor(holder_offsets_.begin(), holder_offsets_.end() - 1);
    for (std::uint32_t node = 0; node < nodes_; ++node) {
        for (std::uint32_t slot = 0; slot < slots_; ++slot) {
            const std::uint32_t file = entries_[static_cast<std::size_t>(node) * slots_ + slot].file;
            holdings_[cursor[file]++] = Holding{NodeId{node}, slot};
        }
    }
}

std::span<const std::uint32_t> CacheState::slots_of(NodeId node, FileId file) const noexcept {
    const std::size_t base = static_cast<std::size_t>(node.value) * slots_;
    const auto first = sorted_files_.begin() + static_cast<std::ptrdiff_t>(base);
    const auto last = first + slots_;
    const auto [lo, hi] = std::equal_range(first, last, file.value);
    const auto offset = static_cast<std::size_t>(lo - sorted_files_.begin());
    return {sorted_slots_.data() + offset, static_cast<std::size_t>(hi - lo)};
}

std::span<const Holding> CacheState::holders(FileId file) const noexcept {
    if (file.value == 0 || file.value > library_size_) {
        return {};
    }
    const std::uint32_t lo = holder_offsets_[file.value];
    const std::uint32_t hi = holder_offsets_[file.value + 1];
    return {holdings_.data() + lo, hi - lo};
}

CacheState place_uncoded(const Topology& topology, const PopularityProfile& profile, std::uint32_t cache_size,
                         Rng& rng) {
    CacheState cache(Scheme::uncoded, topology.size(), profile.library_size(), cache_size, 1);
    for (std::uint32_t node = 0; node < topology.size(); ++node) {
        for (std::uint32_t slot = 0; slot < cache.slots_per_node(); ++slot) {
            cache.set_entry(NodeId{node}, slot, CacheEntry{profile.sample(rng).value, 0});
        }
    }
    cache.rebuild_index();
    return cache;
}

CacheState place_coded(const Topology& topology, const PopularityProfile& profile, std::uint32_t cache_size,
                       std::uint32_t ell, const PrimeField& field, Rng& rng) {
    CacheState cache(Scheme::coded, topology.size(), profile.library_size(), cache_size, ell, field);
    for (std::uint32_t node = 0; node < topology.size(); ++node) {
        for (std::uint32_t slot = 0; slot < cache.slots_per_node(); ++slot) {
            cache.set_entry(NodeId{node}, slot, CacheEntry{profile.sample(rng).value, 0});
            for (Element& c : cache.mutable_coeffs(NodeId{node}, slot)) {
                c = field.random(rng);
            }
        }
    }
    cache.rebuild_index();
    return cache;
}

CacheState place_uncoded_chunks(const Topology& topology, const PopularityProfile& profile,
                                std::uint32_t cache_size, std::uint32_t ell, Rng& rng) {
    CacheState cache(Scheme::uncoded_chunks, topology.size(), profile.library_size(), cache_size, ell);
    for (std::uint32_t node = 0; node < topology.size(); ++node) {
        for (std::uint32_t slot = 0; slot < cache.slots_per_node(); ++slot) {
            const std::uint32_t file = profile.sample(rng).value;
            const auto index = static_cast<std::uint32_t>(uniform_below(rng, ell)) + 1;
            cache.set_entry(NodeId{node}, slot, CacheEntry{file, index});
        }
    }
    cache.rebuild_index();
    return cache;
}

std::size_t ensure_coverage(CacheState& cache, Rng& rng) {
    const std::uint64_t capacity = std::uint64_t{cache.nodes()} * cache.slots_per_node();
    const std::uint32_t ell = cache.ell();
    const std::uint32_t K = cache.library_size();

    // A coverage unit is a file (whole files, coded chunks) or a (file, index)
    // pair (uncoded chunks); each needs `need` copies.
    const bool per_index = cache.scheme() == Scheme::uncoded_chunks;
    const std::uint64_t units = per_index ? std::uint64_t{K} * ell : K;
    const std::uint64_t need = cache.scheme() == Scheme::coded ? ell : 1;
    if (capacity < units * need) {
        throw InfeasibleError("cannot cover the library: " + std::to_string(capacity) + " slots for " +
                              std::to_string(units * need) + " required copies");
    }

    const auto unit_of = [&](const CacheEntry& e) -> std::size_t {
        return per_index ? static_cast<std::size_t>(e.file - 1) * ell + (e.index - 1) : e.file - 1;
    };
    std::vector<std::vector<Holding>> slots_by_unit(units);
    for (std::uint32_t node = 0; node < cache.nodes(); ++node) {
        for (std::uint32_t slot = 0; slot < cache.slots_per_node(); ++slot) {
            slots_by_unit[unit_of(cache.entry(NodeId{node}, slot))].push_back(Holding{NodeId{node}, slot});
        }
    }

    std::size_t rewritten = 0;
    std::vector<std::size_t> tied;
    for (std::size_t unit = 0; unit < units; ++unit) {
        while (slots_by_unit[unit].size() < need) {
            std::size_t best = 0;
            tied.clear();
            for (std::size_t u = 0; u < units; ++u) {
                const std::size_t c = slots_by_unit[u].size();
                if (c > best) {
                    best = c;
                    tied.clear();
                }
                if (c == best) {
                    tied.push_back(u);
                }
            }
            // Equal counts, so a uniform unit then a uniform slot is uniform
            // over all slots of the most-replicated units.
            const std::size_t donor = tied[uniform_below(rng, tied.size())];
            auto& donor_slots = slots_by_unit[donor];
            const std::size_t pick = uniform_below(rng, donor_slots.size());
            const Holding victim = donor_slots[pick];
            donor_slots[pick] = donor_slots.back();
            donor_slots.pop_back();

            CacheEntry replacement{};
            if (per_index) {
                replacement = CacheEntry{static_cast<std::uint32_t>(unit / ell) + 1,
                                         static_cast<std::uint32_t>(unit % ell) + 1};
            } else {
                replacement = CacheEntry{static_cast<std::uint32_t>(unit) + 1, 0};
            }
            cache.set_entry(victim.node, victim.slot, replacement);
            if (cache.scheme() == Scheme::coded) {
                for (Element& c : cache.mutable_coeffs(victim.node, victim.slot)) {
                    c = cache.field()->random(rng);
                }
            }
            slots_by_unit[unit].push_back(victim);
            ++rewritten;
        }
    }
    if (rewritten != 0) {
        cache.rebuild_index();
    }
    return rewritten;
}

} // namespace cachesim
