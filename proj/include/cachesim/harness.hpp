#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cachesim/fieldcode.hpp"
#include "cachesim/metrics.hpp"
#include "cachesim/popularity.hpp"
#include "cachesim/topology.hpp"

namespace cachesim {

enum class Strategy { nearest, coded, uncoded_chunks, two_choice };

std::string_view to_string(Strategy strategy) noexcept;
Strategy parse_strategy(std::string_view text);
std::string_view to_string(Wrap wrap) noexcept;
Wrap parse_wrap(std::string_view text);

/// A single point of an experiment: every parameter has one value.
struct PointConfig {
    Wrap topology = Wrap::torus;
    std::uint32_t n = 2025;
    std::uint32_t k = 100;
    std::uint32_t m = 1;
    // Forced to 1 for whole-file strategies.
    std::uint32_t ell = 1;
    double gamma = 0.0;
    Strategy strategy = Strategy::nearest;
    std::uint64_t q = 65537;
    bool ensure_coverage = false;
    // Requests per trial; 0 means n.
    std::uint64_t requests = 0;
    std::uint64_t master_seed = 0;

    std::uint64_t request_count() const noexcept { return requests == 0 ? n : requests; }

    friend bool operator==(const PointConfig&, const PointConfig&) = default;
};

// Throws ConfigError on an invalid point (n not a perfect square, zero counts,
// non-prime q, ...).
void validate(const PointConfig& point);

std::uint32_t grid_width(std::uint32_t n);

/// Declarative sweep. Each list holds the values of one parameter; at most
/// one list may hold more than one value.
struct ExperimentConfig {
    std::string label;
    Wrap topology = Wrap::torus;
    std::vector<std::uint32_t> n{2025};
    std::vector<std::uint32_t> k{100};
    std::vector<std::uint32_t> m{1};
    std::vector<std::uint32_t> ell{1};
    std::vector<double> gamma{0.0};
    Strategy strategy = Strategy::nearest;
    std::uint64_t trials = 1;
    std::uint64_t master_seed = 0;
    std::uint64_t q = 65537;
    bool ensure_coverage = false;
    std::uint64_t requests = 0;
    // Written by run_experiment when nonempty.
    std::string csv_path;
    std::string json_path;

    // Expands the sweep into points, validating each.
    std::vector<PointConfig> points() const;
};

struct TrialResult {
    PointConfig point;
    std::uint64_t trial = 0;
    double comm_cost = 0.0;
    double max_load = 0.0;
    std::uint64_t failures = 0;
    std::uint64_t extra_chunks = 0;
    std::uint64_t served = 0;

    friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Per-point state shared read-only by all trials of that point.
class PointRunner {
public:
    explicit PointRunner(PointConfig point);

    const PointConfig& point() const noexcept { return point_; }
    const Topology& topology() const noexcept { return topology_; }
    const PopularityProfile& profile() const noexcept { return profile_; }

    // Trial i: placement, trace, delivery and metrics driven by RNG streams
    // derived from (master_seed, i) only.
    TrialResult run(std::uint64_t trial) const;
    MetricsReport run_report(std::uint64_t trial) const;

private:
    PointConfig point_;
    Topology topology_;
    PopularityProfile profile_;
    PrimeField field_;
};

TrialResult run_trial(const PointConfig& point, std::uint64_t trial);

// Worker count from CACHESIM_WORKERS, else the hardware concurrency.
unsigned default_workers();

// Runs trials [0, count) on `workers` threads; results are in trial order and
// independent of the worker count.
std::vector<TrialResult> run_point(const PointConfig& point, std::uint64_t count, unsigned workers);

struct PointSummary {
    std::string label;
    PointConfig point;
    MetricsSummary summary;
};

struct ExperimentOutput {
    std::vector<TrialResult> rows;
    std::vector<PointSummary> points;
};

ExperimentOutput run_experiment(const ExperimentConfig& config, unsigned workers);

// Runs several experiments into one output (used by presets).
ExperimentOutput run_experiments(std::span<const ExperimentConfig> configs, unsigned workers);

/// Named sweeps. `scale` multiplies each series' trial count
/// (at least one trial per point).
std::vector<ExperimentConfig> preset(std::string_view name, double scale, std::uint64_t master_seed = 0);
std::vector<std::string> preset_names();

// ---- serialization -------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "trial,topology,n,k,m,ell,gamma,strategy,q,comm_cost,max_load,failures,extra_chunks,served";

std::string format_double(double value);
std::string csv_row(const TrialResult& row);
std::string to_csv(std::span<const TrialResult> rows);

// Parses a results CSV produced by to_csv. Throws ConfigError on a header
// mismatch or malformed row.
std::vector<TrialResult> parse_csv(std::string_view text);

// JSON array, one object per sweep point.
std::string summaries_to_json(std::span<const PointSummary> points);

// Groups rows by point parameters (first-appearance order) and aggregates.
std::vector<PointSummary> summarize_rows(std::span<const TrialResult> rows);

// Writes to a sibling temporary file, then renames over the target.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

// Flat `key = value` file; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(std::string_view text);

// Applies key/value settings to a config; unknown keys throw ConfigError.
// Sweep values are comma-separated lists.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

} // namespace cachesim
