#include "cachesim/delivery.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "cachesim/error.hpp"

namespace cachesim {

std::string_view to_string(FailureReason reason) noexcept {
    switch (reason) {
    case FailureReason::unservable: return "unservable";
    case FailureReason::undecodable: return "undecodable";
    }
    return "unknown";
}

RequestTrace generate_trace(std::uint32_t nodes, std::uint64_t count, const PopularityProfile& profile, Rng& rng) {
    if (nodes == 0 || count == 0) {
        throw ConfigError("trace needs at least one node and one request");
    }
    RequestTrace trace;
    trace.requests.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto origin = static_cast<std::uint32_t>(uniform_below(rng, nodes));
        trace.requests.push_back(Request{NodeId{origin}, profile.sample(rng)});
    }
    return trace;
}

namespace {

void check_scheme(const CacheState& cache, Scheme expected, std::string_view strategy) {
    if (cache.scheme() != expected) {
        throw ConfigError(std::string(strategy) + " needs a " + std::string(to_string(expected)) +
                          " cache, got " + std::string(to_string(cache.scheme())));
    }
}

void check_trace(const Topology& topology, const CacheState& cache, const RequestTrace& trace) {
    if (cache.nodes() != topology.size()) {
        throw ConfigError("cache state and topology disagree on node count");
    }
    for (const Request& r : trace.requests) {
        if (!topology.contains(r.origin) || r.file.value == 0 || r.file.value > cache.library_size()) {
            throw ConfigError("request out of range");
        }
    }
}

// Visits requests in the configured order with a per-request walk seed that
// depends only on the request index.
template <class Serve>
void for_each_request(const RequestTrace& trace, Rng& rng, const DeliveryOptions& options, Serve&& serve) {
    const std::uint64_t key = rng();
    const auto visit = [&](std::uint32_t i) { serve(i, trace.requests[i], derive_key(key, i)); };
    if (options.order.empty()) {
        for (std::uint32_t i = 0; i < trace.requests.size(); ++i) {
            visit(i);
        }
        return;
    }
    if (options.order.size() != trace.requests.size()) {
        throw ConfigError("processing order must be a permutation of the trace");
    }
    for (const std::uint32_t i : options.order) {
        if (i >= trace.requests.size()) {
            throw ConfigError("processing order index out of range");
        }
        visit(i);
    }
}

} // namespace

DeliveryLedger deliver_nearest_replica(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                                       Rng& rng, const DeliveryOptions& options) {
    check_scheme(cache, Scheme::uncoded, "nearest replica");
    check_trace(topology, cache, trace);

    DeliveryLedger ledger;
    ledger.units_per_file = 1;
    ledger.requests = trace.size();
    ledger.records.reserve(trace.size());
    ShellWalker walker(topology, NodeId{0}, 0);

    for_each_request(trace, rng, options, [&](std::uint32_t index, const Request& req, std::uint64_t seed) {
        if (cache.copies(req.file) == 0) {
            ledger.failures.push_back(Failure{index, FailureReason::unservable});
            return;
        }
        walker.reset(req.origin, seed);
        while (const auto step = walker.next()) {
            if (cache.holds(step->node, req.file)) {
                ledger.records.push_back(MessageRecord{step->node, req.origin, index, step->distance, 1.0, false});
                return;
            }
        }
        ledger.failures.push_back(Failure{index, FailureReason::unservable});
    });
    return ledger;
}

DeliveryLedger deliver_coded(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                             const PrimeField& field, Rng& rng, const DeliveryOptions& options) {
    check_scheme(cache, Scheme::coded, "coded delivery");
    check_trace(topology, cache, trace);
    if (!cache.field() || cache.field()->order() != field.order()) {
        throw ConfigError("coded delivery field differs from the placement field");
    }

    const std::uint32_t ell = cache.ell();
    const double share = 1.0 / ell;
    DeliveryLedger ledger;
    ledger.units_per_file = ell;
    ledger.requests = trace.size();
    ledger.records.reserve(trace.size() * ell);
    ShellWalker walker(topology, NodeId{0}, 0);
    RankAccumulator basis(field, ell);

    for_each_request(trace, rng, options, [&](std::uint32_t index, const Request& req, std::uint64_t seed) {
        walker.reset(req.origin, seed);
        basis.reset(ell);
        std::uint32_t collected = 0;
        while (const auto step = walker.next()) {
            for (const std::uint32_t slot : cache.slots_of(step->node, req.file)) {
                const bool repair = collected >= ell;
                ledger.records.push_back(MessageRecord{step->node, req.origin, index, step->distance, share, repair});
                basis.insert(cache.coeffs(step->node, slot));
                ++collected;
                if (repair) {
                    ++ledger.extra_chunks;
                }
                if (collected >= ell && basis.full()) {
                    return;
                }
            }
        }
        ledger.failures.push_back(Failure{index, FailureReason::undecodable});
    });
    return ledger;
}

DeliveryLedger deliver_uncoded_chunks(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                                      Rng& rng, const DeliveryOptions& options) {
    check_scheme(cache, Scheme::uncoded_chunks, "uncoded chunk delivery");
    check_trace(topology, cache, trace);

    const std::uint32_t ell = cache.ell();
    const double share = 1.0 / ell;
    DeliveryLedger ledger;
    ledger.units_per_file = ell;
    ledger.requests = trace.size();
    ledger.records.reserve(trace.size() * ell);
    ShellWalker walker(topology, NodeId{0}, 0);
    std::vector<bool> have(ell + 1);

    for_each_request(trace, rng, options, [&](std::uint32_t index, const Request& req, std::uint64_t seed) {
        walker.reset(req.origin, seed);
        std::fill(have.begin(), have.end(), false);
        std::uint32_t distinct = 0;
        while (const auto step = walker.next()) {
            for (const std::uint32_t slot : cache.slots_of(step->node, req.file)) {
                ++ledger.scanned_chunks;
                const std::uint32_t chunk = cache.entry(step->node, slot).index;
                if (have[chunk]) {
                    continue;
                }
                have[chunk] = true;
                ledger.records.push_back(MessageRecord{step->node, req.origin, index, step->distance, share, false});
                if (++distinct == ell) {
                    return;
                }
            }
        }
        ledger.failures.push_back(Failure{index, FailureReason::unservable});
    });
    return ledger;
}

DeliveryLedger deliver_two_choice(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                                  RadiusPolicy policy, Rng& rng, const DeliveryOptions& options) {
    check_scheme(cache, Scheme::uncoded, "two-choice delivery");
    check_trace(topology, cache, trace);
    if (policy != RadiusPolicy::expanding_ring) {
        throw ConfigError("unsupported radius policy");
    }

    DeliveryLedger ledger;
    ledger.units_per_file = 1;
    ledger.requests = trace.size();
    ledger.records.reserve(trace.size());
    ShellWalker walker(topology, NodeId{0}, 0);
    std::vector<std::uint64_t> load(topology.size(), 0);
    std::vector<NodeAtDistance> candidates;

    for_each_request(trace, rng, options, [&](std::uint32_t index, const Request& req, std::uint64_t seed) {
        walker.reset(req.origin, derive_key(seed, 0));
        SplitMix64 pick(derive_key(seed, 1));
        candidates.clear();
        while (const auto step = walker.next()) {
            // Stop at the first shell boundary once two holders are in hand.
            if (candidates.size() >= 2 && step->distance > candidates.back().distance) {
                break;
            }
            if (cache.holds(step->node, req.file)) {
                candidates.push_back(*step);
            }
        }
        if (candidates.empty()) {
            ledger.failures.push_back(Failure{index, FailureReason::unservable});
            return;
        }
        NodeAtDistance chosen = candidates.front();
        if (candidates.size() >= 2) {
            const auto a = static_cast<std::size_t>(uniform_below(pick, candidates.size()));
            auto b = static_cast<std::size_t>(uniform_below(pick, candidates.size() - 1));
            if (b >= a) {
                ++b;
            }
            const std::uint64_t la = load[candidates[a].node.value];
            const std::uint64_t lb = load[candidates[b].node.value];
            if (la != lb) {
                chosen = la < lb ? candidates[a] : candidates[b];
            } else {
                chosen = uniform_below(pick, 2) == 0 ? candidates[a] : candidates[b];
            }
        }
        ++load[chosen.node.value];
        ledger.records.push_back(MessageRecord{chosen.node, req.origin, index, chosen.distance, 1.0, false});
    });
    return ledger;
}

} // namespace cachesim
