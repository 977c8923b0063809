#include "cachesim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "cachesim/delivery.hpp"
#include "cachesim/error.hpp"
#include "cachesim/placement.hpp"

namespace cachesim {

std::string_view to_string(Strategy strategy) noexcept {
    switch (strategy) {
    case Strategy::nearest: return "nearest";
    case Strategy::coded: return "coded";
    case Strategy::uncoded_chunks: return "uncoded-chunks";
    case Strategy::two_choice: return "two-choice";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view text) {
    for (const Strategy s : {Strategy::nearest, Strategy::coded, Strategy::uncoded_chunks, Strategy::two_choice}) {
        if (text == to_string(s)) {
            return s;
        }
    }
    throw ConfigError("unknown strategy '" + std::string(text) +
                      "' (expected nearest, coded, uncoded-chunks or two-choice)");
}

std::string_view to_string(Wrap wrap) noexcept { return wrap == Wrap::torus ? "torus" : "grid"; }

Wrap parse_wrap(std::string_view text) {
    if (text == "torus") {
        return Wrap::torus;
    }
    if (text == "grid") {
        return Wrap::grid;
    }
    throw ConfigError("unknown topology '" + std::string(text) + "' (expected grid or torus)");
}

std::uint32_t grid_width(std::uint32_t n) {
    auto w = static_cast<std::uint32_t>(std::llround(std::sqrt(static_cast<double>(n))));
    while (std::uint64_t{w} * w > n) {
        --w;
    }
    while (std::uint64_t{w + 1} * (w + 1) <= n) {
        ++w;
    }
    if (n == 0 || std::uint64_t{w} * w != n) {
        throw ConfigError("n = " + std::to_string(n) + " is not a positive perfect square");
    }
    return w;
}

namespace {

bool whole_file(Strategy s) noexcept { return s == Strategy::nearest || s == Strategy::two_choice; }

} // namespace

void validate(const PointConfig& point) {
    grid_width(point.n);
    if (point.k == 0 || point.m == 0 || point.ell == 0) {
        throw ConfigError("k, m and ell must all be at least 1");
    }
    if (!std::isfinite(point.gamma) || point.gamma < 0.0) {
        throw ConfigError("gamma must be finite and nonnegative");
    }
    if (whole_file(point.strategy) && point.ell != 1) {
        throw ConfigError("whole-file strategies use ell = 1");
    }
    PrimeField check(point.q);
}

std::vector<PointConfig> ExperimentConfig::points() const {
    if (trials == 0) {
        throw ConfigError("trials must be at least 1");
    }
    if (n.empty() || k.empty() || m.empty() || ell.empty() || gamma.empty()) {
        throw ConfigError("every parameter needs at least one value");
    }
    const int swept = (n.size() > 1) + (k.size() > 1) + (m.size() > 1) + (ell.size() > 1) + (gamma.size() > 1);
    if (swept > 1) {
        throw ConfigError("at most one parameter may be swept per experiment");
    }
    std::vector<PointConfig> out;
    PointConfig base;
    base.topology = topology;
    base.strategy = strategy;
    base.q = q;
    base.ensure_coverage = ensure_coverage;
    base.requests = requests;
    base.master_seed = master_seed;
    for (const auto nv : n) {
        for (const auto kv : k) {
            for (const auto mv : m) {
                for (const auto lv : ell) {
                    for (const auto gv : gamma) {
                        PointConfig p = base;
                        p.n = nv;
                        p.k = kv;
                        p.m = mv;
                        p.ell = whole_file(strategy) ? 1 : lv;
                        p.gamma = gv;
                        validate(p);
                        out.push_back(p);
                    }
                }
            }
        }
    }
    return out;
}

PointRunner::PointRunner(PointConfig point)
    : point_((validate(point), point)),
      topology_(grid_width(point.n), point.topology),
      profile_(point.k, point.gamma),
      field_(point.q) {}

namespace {

enum Stream : std::uint64_t { placement_stream = 1, coverage_stream = 2, trace_stream = 3, delivery_stream = 4 };

} // namespace

MetricsReport PointRunner::run_report(std::uint64_t trial) const {
    const std::uint64_t key = derive_key(point_.master_seed, trial);
    Rng placement_rng(derive_key(key, placement_stream));
    Rng coverage_rng(derive_key(key, coverage_stream));
    Rng trace_rng(derive_key(key, trace_stream));
    Rng delivery_rng(derive_key(key, delivery_stream));

    const auto place = [&]() {
        switch (point_.strategy) {
        case Strategy::coded:
            return place_coded(topology_, profile_, point_.m, point_.ell, field_, placement_rng);
        case Strategy::uncoded_chunks:
            return place_uncoded_chunks(topology_, profile_, point_.m, point_.ell, placement_rng);
        case Strategy::nearest:
        case Strategy::two_choice:
            break;
        }
        return place_uncoded(topology_, profile_, point_.m, placement_rng);
    };
    CacheState cache = place();
    if (point_.ensure_coverage) {
        ensure_coverage(cache, coverage_rng);
    }
    const RequestTrace trace = generate_trace(topology_.size(), point_.request_count(), profile_, trace_rng);

    DeliveryLedger ledger;
    switch (point_.strategy) {
    case Strategy::nearest:
        ledger = deliver_nearest_replica(topology_, cache, trace, delivery_rng);
        break;
    case Strategy::coded:
        ledger = deliver_coded(topology_, cache, trace, field_, delivery_rng);
        break;
    case Strategy::uncoded_chunks:
        ledger = deliver_uncoded_chunks(topology_, cache, trace, delivery_rng);
        break;
    case Strategy::two_choice:
        ledger = deliver_two_choice(topology_, cache, trace, RadiusPolicy::expanding_ring, delivery_rng);
        break;
    }
    return compute_metrics(ledger, topology_.size());
}

TrialResult PointRunner::run(std::uint64_t trial) const {
    const MetricsReport report = run_report(trial);
    TrialResult r;
    r.point = point_;
    r.trial = trial;
    r.comm_cost = report.comm_cost;
    r.max_load = report.max_load;
    r.failures = report.failures;
    r.extra_chunks = report.extra_chunks;
    r.served = report.served_requests;
    return r;
}

TrialResult run_trial(const PointConfig& point, std::uint64_t trial) { return PointRunner(point).run(trial); }

unsigned default_workers() {
    if (const char* env = std::getenv("CACHESIM_WORKERS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v <= 1024) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

// Dynamic scheduling over [0, count); fn(i) must only touch slot i.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::size_t>(count, 1024))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        const std::lock_guard lock(error_mutex);
                        if (!error) {
                            error = std::current_exception();
                        }
                        next = count;
                    }
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace

std::vector<TrialResult> run_point(const PointConfig& point, std::uint64_t count, unsigned workers) {
    const PointRunner runner(point);
    std::vector<TrialResult> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = runner.run(i); });
    return out;
}

ExperimentOutput run_experiments(std::span<const ExperimentConfig> configs, unsigned workers) {
    struct Job {
        std::size_t runner;
        std::uint64_t trial;
    };
    std::vector<PointRunner> runners;
    std::vector<std::string> labels;
    std::vector<Job> jobs;
    for (const ExperimentConfig& config : configs) {
        for (const PointConfig& p : config.points()) {
            runners.emplace_back(p);
            labels.push_back(config.label);
            for (std::uint64_t t = 0; t < config.trials; ++t) {
                jobs.push_back(Job{runners.size() - 1, t});
            }
        }
    }

    ExperimentOutput out;
    out.rows.resize(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) { out.rows[i] = runners[jobs[i].runner].run(jobs[i].trial); });

    std::size_t begin = 0;
    for (std::size_t r = 0; r < runners.size(); ++r) {
        std::size_t end = begin;
        while (end < jobs.size() && jobs[end].runner == r) {
            ++end;
        }
        std::vector<TrialMetrics> metrics;
        metrics.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            const TrialResult& r = out.rows[i];
            metrics.push_back(TrialMetrics{r.comm_cost, r.max_load, r.failures, r.served});
        }
        out.points.push_back(PointSummary{labels[r], runners[r].point(), aggregate(metrics)});
        begin = end;
    }
    return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& config, unsigned workers) {
    ExperimentOutput out = run_experiments(std::span(&config, 1), workers);
    if (!config.csv_path.empty()) {
        write_file_atomically(config.csv_path, to_csv(out.rows));
    }
    if (!config.json_path.empty()) {
        write_file_atomically(config.json_path, summaries_to_json(out.points));
    }
    return out;
}

std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3", "fig4"}; }

std::vector<ExperimentConfig> preset(std::string_view name, double scale, std::uint64_t master_seed) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ConfigError("scale must be a positive number");
    }
    const auto scaled = [scale](std::uint64_t trials) {
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(trials) * scale)));
    };
    ExperimentConfig base;
    base.topology = Wrap::torus;
    base.master_seed = master_seed;
    base.k = {100};
    base.gamma = {0.0};

    std::vector<ExperimentConfig> out;
    const auto add = [&](std::string label, Strategy strategy, auto&& tweak) {
        ExperimentConfig c = base;
        c.label = std::move(label);
        c.strategy = strategy;
        tweak(c);
        out.push_back(std::move(c));
    };

    if (name == "fig1") {
        // Max load versus n; odd widths 15..45.
        const std::vector<std::uint32_t> ns{225, 625, 1225, 2025};
        const std::uint64_t trials = scaled(5000);
        add("nearest-M1", Strategy::nearest, [&](ExperimentConfig& c) { c.n = ns; c.m = {1}; c.trials = trials; });
        add("nearest-M5", Strategy::nearest, [&](ExperimentConfig& c) { c.n = ns; c.m = {5}; c.trials = trials; });
        add("coded-M1-l5", Strategy::coded,
            [&](ExperimentConfig& c) { c.n = ns; c.m = {1}; c.ell = {5}; c.trials = trials; });
        add("coded-M1-l10", Strategy::coded,
            [&](ExperimentConfig& c) { c.n = ns; c.m = {1}; c.ell = {10}; c.trials = trials; });
    } else if (name == "fig2") {
        const std::vector<std::uint32_t> ms{1, 2, 5, 10, 20, 50, 100};
        const std::uint64_t trials = scaled(5000);
        add("nearest", Strategy::nearest, [&](ExperimentConfig& c) { c.n = {2025}; c.m = ms; c.trials = trials; });
        add("coded-l10", Strategy::coded,
            [&](ExperimentConfig& c) { c.n = {2025}; c.m = ms; c.ell = {10}; c.trials = trials; });
    } else if (name == "fig3") {
        add("coded", Strategy::coded, [&](ExperimentConfig& c) {
            c.n = {2025};
            c.m = {1};
            c.ell = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
            c.trials = scaled(2000);
        });
    } else if (name == "fig4") {
        add("coded", Strategy::coded, [&](ExperimentConfig& c) {
            c.n = {2025};
            c.m = {10};
            c.ell = {10};
            c.gamma = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
            c.ensure_coverage = true;
            c.trials = scaled(4000);
        });
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig1, fig2, fig3 or fig4)");
    }
    return out;
}

} // namespace cachesim
