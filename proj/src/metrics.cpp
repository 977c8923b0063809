#include "cachesim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cachesim/error.hpp"

namespace cachesim {

MetricsReport compute_metrics(const DeliveryLedger& ledger, std::uint32_t nodes) {
    if (nodes == 0) {
        throw ConfigError("compute_metrics: node count must be positive");
    }
    if (ledger.units_per_file == 0) {
        throw ConfigError("compute_metrics: ledger granularity must be positive");
    }
    // Accumulate in integer message units, divide once.
    std::vector<std::uint64_t> units(nodes, 0);
    std::uint64_t weighted_distance = 0;
    for (const MessageRecord& r : ledger.records) {
        if (r.server.value >= nodes) {
            throw ConfigError("compute_metrics: record references an unknown server");
        }
        ++units[r.server.value];
        weighted_distance += r.distance;
    }

    const double per_file = ledger.units_per_file;
    MetricsReport report;
    report.comm_cost = static_cast<double>(weighted_distance) / (per_file * nodes);
    report.load_vector.resize(nodes);
    std::uint64_t peak = 0;
    for (std::uint32_t l = 0; l < nodes; ++l) {
        report.load_vector[l] = static_cast<double>(units[l]) / per_file;
        peak = std::max(peak, units[l]);
    }
    report.max_load = static_cast<double>(peak) / per_file;
    report.failures = ledger.failures.size();
    report.extra_chunks = ledger.extra_chunks;
    report.served_requests = ledger.requests - ledger.failures.size();
    return report;
}

Estimate estimate(std::span<const double> samples) {
    if (samples.empty()) {
        throw ConfigError("estimate: no samples");
    }
    const auto count = static_cast<double>(samples.size());
    double mean = 0.0;
    for (const double x : samples) {
        mean += x;
    }
    mean /= count;
    Estimate e;
    e.mean = mean;
    if (samples.size() > 1) {
        double ss = 0.0;
        for (const double x : samples) {
            ss += (x - mean) * (x - mean);
        }
        e.stddev = std::sqrt(ss / (count - 1.0));
        e.ci95 = 1.959963984540054 * e.stddev / std::sqrt(count);
    }
    return e;
}

MetricsSummary aggregate(std::span<const TrialMetrics> trials) {
    if (trials.empty()) {
        throw ConfigError("aggregate: no reports");
    }
    std::vector<double> cost;
    std::vector<double> load;
    cost.reserve(trials.size());
    load.reserve(trials.size());
    std::uint64_t failed = 0;
    std::uint64_t total = 0;
    for (const TrialMetrics& t : trials) {
        cost.push_back(t.comm_cost);
        load.push_back(t.max_load);
        failed += t.failures;
        total += t.failures + t.served;
    }
    MetricsSummary s;
    s.trials = trials.size();
    s.comm_cost = estimate(cost);
    s.max_load = estimate(load);
    s.failure_rate = total == 0 ? 0.0 : static_cast<double>(failed) / static_cast<double>(total);
    s.single_trial = trials.size() == 1;
    return s;
}

MetricsSummary aggregate(std::span<const MetricsReport> reports) {
    std::vector<TrialMetrics> trials;
    trials.reserve(reports.size());
    for (const MetricsReport& r : reports) {
        trials.push_back(TrialMetrics{r.comm_cost, r.max_load, r.failures, r.served_requests});
    }
    return aggregate(trials);
}

} // namespace cachesim
