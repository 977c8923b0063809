#pragma once

// Brute-force reference implementations. None of these share code with the
// simulator's fast paths; they exist to be compared against them.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cachesim/fieldcode.hpp"
#include "cachesim/placement.hpp"
#include "cachesim/topology.hpp"

namespace cachesim::oracle {

// Hop counts from `source` by breadth-first search over an explicit
// 4-neighbour adjacency list.
std::vector<std::uint32_t> bfs_distances(std::uint32_t width, Wrap wrap, std::uint32_t source);

// All nodes v with bfs distance <= r, ascending id.
std::vector<std::uint32_t> ball(std::uint32_t width, Wrap wrap, std::uint32_t source, std::uint32_t r);

// Minimum BFS distance from origin to any node whose slots contain `file`.
std::optional<std::uint32_t> nearest_replica_distance(std::uint32_t width, Wrap wrap, const CacheState& cache,
                                                      std::uint32_t origin, std::uint32_t file);

// Distances of every cached chunk of `file`, fully sorted; the ell smallest
// are what a rank-agnostic nearest-chunk fetch must pay.
std::vector<std::uint32_t> sorted_chunk_distances(std::uint32_t width, Wrap wrap, const CacheState& cache,
                                                  std::uint32_t origin, std::uint32_t file);

// prod_{i=1}^{ell} (1 - q^{-i}).
double full_rank_probability(std::uint64_t q, std::uint32_t ell);

// Number of full-rank ell x ell matrices over F_2, by enumeration (ell <= 4).
std::uint64_t count_full_rank_binary(std::uint32_t ell);

// Rank over F_q by plain Gaussian elimination on a dense copy.
std::size_t dense_rank(std::vector<std::vector<std::uint64_t>> rows, std::uint64_t q);

struct Bracket {
    double lower = 0.0;
    double upper = 0.0;
};

// Integral bounds on sum_{j=1}^{K} j^{-gamma}.
Bracket zipf_normalizer_bounds(double gamma, std::uint64_t library_size);

// Expected draws to see all ell values of a uniform index: ell * H_ell.
double coupon_collector_mean(std::uint32_t ell);

// Runs the quick oracle and invariant checks, one line per check.
// Returns true when every check passes.
bool run_validation_suite(std::ostream& out, std::uint64_t seed = 1);

} // namespace cachesim::oracle
