#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "cachesim/rng.hpp"

namespace cachesim {

// 1-based file rank; file 1 is the most popular.
struct FileId {
    std::uint32_t value = 1;

    friend constexpr auto operator<=>(FileId, FileId) = default;
};

/// Zipf(gamma) popularity over a library of K files.
class PopularityProfile {
public:
    PopularityProfile(std::uint32_t library_size, double gamma);

    std::uint32_t library_size() const noexcept { return static_cast<std::uint32_t>(probs_.size()); }
    double gamma() const noexcept { return gamma_; }

    // Sum_{j=1}^{K} j^{-gamma}.
    double normalizer() const noexcept { return normalizer_; }

    double prob(FileId file) const { return probs_.at(file.value - 1); }
    std::span<const double> probs() const noexcept { return probs_; }

    // Inverse-CDF draw, O(log K).
    FileId sample(Rng& rng) const;

private:
    double gamma_;
    double normalizer_;
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

inline PopularityProfile make_profile(std::uint32_t library_size, double gamma) {
    return PopularityProfile(library_size, gamma);
}

inline FileId sample_file(const PopularityProfile& profile, Rng& rng) {
    return profile.sample(rng);
}

// Sum_{i=j}^{K} i^{-gamma}, inclusive lower index. Throws ConfigError unless
// 1 <= j <= K.
double lambda_sum(double gamma, std::uint64_t j, std::uint64_t library_size);

// Probability that a node caching M*ell iid chunks holds at least one chunk of
// a file with popularity p: 1 - (1 - p)^(M*ell).
double effective_chunk_prob(double p, std::uint32_t cache_size, std::uint32_t ell);

} // namespace cachesim
