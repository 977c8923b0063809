#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cachesim/fieldcode.hpp"
#include "cachesim/placement.hpp"
#include "cachesim/popularity.hpp"
#include "cachesim/rng.hpp"
#include "cachesim/topology.hpp"

namespace cachesim {

struct Request {
    NodeId origin;
    FileId file;
};

struct RequestTrace {
    std::vector<Request> requests;

    std::size_t size() const noexcept { return requests.size(); }
};

// m iid requests: origin uniform over the n nodes, file drawn from the profile.
RequestTrace generate_trace(std::uint32_t nodes, std::uint64_t count, const PopularityProfile& profile, Rng& rng);

/// One message from a server to a request origin. Every message carries one
/// unit of the ledger's granularity: a whole file (bits_fraction 1) or one
/// chunk (bits_fraction 1/ell).
struct MessageRecord {
    NodeId server;
    NodeId origin;
    std::uint32_t request_index = 0;
    std::uint32_t distance = 0;
    double bits_fraction = 1.0;
    // Coded only: fetched after the first ell chunks to restore full rank.
    bool rank_repair = false;
};

enum class FailureReason { unservable, undecodable };

std::string_view to_string(FailureReason reason) noexcept;

struct Failure {
    std::uint32_t request_index = 0;
    FailureReason reason = FailureReason::unservable;
};

struct DeliveryLedger {
    // Messages per file: 1 for whole-file strategies, ell for chunk ones.
    std::uint32_t units_per_file = 1;
    std::uint64_t requests = 0;
    std::vector<MessageRecord> records;
    std::vector<Failure> failures;
    std::uint64_t extra_chunks = 0;
    // Chunk copies examined, including skipped duplicates (uncoded chunks).
    std::uint64_t scanned_chunks = 0;
};

// Order in which requests are served; empty means trace order. Results for a
// given request depend only on its index and the seed, except for two-choice,
// which tracks loads online.
struct DeliveryOptions {
    std::span<const std::uint32_t> order;
};

enum class RadiusPolicy { expanding_ring };

// Whole file from the nearest replica, ties uniform.
DeliveryLedger deliver_nearest_replica(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                                       Rng& rng, const DeliveryOptions& options = {});

// The ell nearest coded chunks, then next-nearest chunks until the collected
// coefficients have full rank.
DeliveryLedger deliver_coded(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                             const PrimeField& field, Rng& rng, const DeliveryOptions& options = {});

// Nearest copies of each of the ell distinct chunk indices; duplicate
// indices are skipped without a message.
DeliveryLedger deliver_uncoded_chunks(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                                      Rng& rng, const DeliveryOptions& options = {});

// Power of two choices among replica holders within the smallest radius that
// contains at least two of them; the less loaded one serves, ties uniform.
DeliveryLedger deliver_two_choice(const Topology& topology, const CacheState& cache, const RequestTrace& trace,
                                  RadiusPolicy policy, Rng& rng, const DeliveryOptions& options = {});

} // namespace cachesim
