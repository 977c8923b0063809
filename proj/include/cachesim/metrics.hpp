#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cachesim/delivery.hpp"

namespace cachesim {

/// Communication cost and maximum load of one delivery, with the file size
/// normalized to one unit. Loads are exact multiples of 1/ell.
struct MetricsReport {
    double comm_cost = 0.0;
    double max_load = 0.0;
    std::vector<double> load_vector;
    std::uint64_t failures = 0;
    std::uint64_t extra_chunks = 0;
    std::uint64_t served_requests = 0;
};

// comm_cost = (1/n) * sum of distance * bits over records;
// load_vector[l] = sum of bits served by l; max_load = max of load_vector.
// Records of failed requests count towards both metrics.
MetricsReport compute_metrics(const DeliveryLedger& ledger, std::uint32_t nodes);

struct Estimate {
    double mean = 0.0;
    double stddev = 0.0;
    // Half-width of the normal-approximation 95% interval.
    double ci95 = 0.0;
};

struct MetricsSummary {
    std::size_t trials = 0;
    Estimate comm_cost;
    Estimate max_load;
    // failed requests / all requests, pooled over trials.
    double failure_rate = 0.0;
    // True when only one report was aggregated (stddev reported as 0).
    bool single_trial = false;
};

// Plain per-trial numbers so both reports and CSV rows can be aggregated.
struct TrialMetrics {
    double comm_cost = 0.0;
    double max_load = 0.0;
    std::uint64_t failures = 0;
    std::uint64_t served = 0;
};

Estimate estimate(std::span<const double> samples);

MetricsSummary aggregate(std::span<const TrialMetrics> trials);
MetricsSummary aggregate(std::span<const MetricsReport> reports);

} // namespace cachesim
