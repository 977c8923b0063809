#include "cachesim/popularity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cachesim/error.hpp"

namespace cachesim {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

double zipf_weight(std::uint64_t rank, double gamma) {
    return gamma == 0.0 ? 1.0 : std::pow(static_cast<double>(rank), -gamma);
}

} // namespace

PopularityProfile::PopularityProfile(std::uint32_t library_size, double gamma) : gamma_(gamma) {
    if (library_size == 0) {
        throw ConfigError("library size K must be at least 1");
    }
    if (!std::isfinite(gamma) || gamma < 0.0) {
        throw ConfigError("Zipf exponent gamma must be finite and nonnegative, got " + std::to_string(gamma));
    }

    probs_.resize(library_size);
    CompensatedSum total;
    for (std::uint32_t i = 0; i < library_size; ++i) {
        probs_[i] = zipf_weight(i + 1, gamma);
        total.add(probs_[i]);
    }
    normalizer_ = total.value();
    for (double& p : probs_) {
        p /= normalizer_;
    }

    cdf_.resize(library_size);
    CompensatedSum running;
    for (std::uint32_t i = 0; i < library_size; ++i) {
        running.add(probs_[i]);
        cdf_[i] = running.value();
    }
    cdf_.back() = 1.0;
}

FileId PopularityProfile::sample(Rng& rng) const {
    const double u = uniform_unit(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto index = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
    return FileId{index + 1};
}

double lambda_sum(double gamma, std::uint64_t j, std::uint64_t library_size) {
    if (j < 1 || j > library_size) {
        throw ConfigError("lambda_sum requires 1 <= j <= K");
    }
    if (!std::isfinite(gamma) || gamma < 0.0) {
        throw ConfigError("lambda_sum requires finite gamma >= 0");
    }
    // Smallest terms first.
    CompensatedSum sum;
    for (std::uint64_t i = library_size; i >= j; --i) {
        sum.add(zipf_weight(i, gamma));
        if (i == 1) {
            break;
        }
    }
    return sum.value();
}

double effective_chunk_prob(double p, std::uint32_t cache_size, std::uint32_t ell) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError("effective_chunk_prob requires 0 <= p <= 1");
    }
    const double draws = static_cast<double>(cache_size) * static_cast<double>(ell);
    if (draws == 0.0) {
        return 0.0;
    }
    // log1p keeps precision for small p.
    return -std::expm1(draws * std::log1p(-p));
}

} // namespace cachesim
