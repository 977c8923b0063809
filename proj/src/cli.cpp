#include "cachesim/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

#include "cachesim/error.hpp"
#include "cachesim/harness.hpp"
#include "cachesim/validation.hpp"

namespace cachesim {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

unsigned resolve_workers(unsigned requested) { return requested == 0 ? default_workers() : requested; }

// Flags of `simulate`, in the order they are applied over a config file.
constexpr std::pair<const char*, const char*> kSimulateFlags[] = {
    {"topology", "torus or grid"},
    {"n", "node count(s), perfect squares"},
    {"k", "library size(s)"},
    {"m", "cache size(s) in files"},
    {"ell", "chunks per file"},
    {"gamma", "Zipf exponent(s)"},
    {"strategy", "nearest, coded, uncoded-chunks or two-choice"},
    {"trials", "Monte Carlo trials per point"},
    {"seed", "master seed"},
    {"q", "prime field order"},
    {"ensure-coverage", "repair placement so every file is recoverable (true/false)"},
    {"requests", "requests per trial (default n)"},
    {"label", "series label"},
    {"out", "CSV path for per-trial rows"},
    {"summary", "JSON path for per-point summaries"},
};

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monte Carlo simulator for cache networks on square lattices"};
    app.require_subcommand(1);
    app.fallthrough();

    unsigned workers = 0;
    app.add_option("--workers", workers, "worker threads (default: CACHESIM_WORKERS or all cores)");

    auto* simulate = app.add_subcommand("simulate", "run one experiment sweep");
    std::string config_path;
    simulate->add_option("--config", config_path, "key = value file; flags override it");
    std::vector<std::pair<std::string, std::string>> flag_values;
    flag_values.reserve(std::size(kSimulateFlags));
    std::vector<CLI::Option*> flag_options;
    for (const auto& [name, help] : kSimulateFlags) {
        flag_values.emplace_back(name, std::string{});
        flag_options.push_back(simulate->add_option(std::string("--") + name, flag_values.back().second, help));
    }

    auto* preset_cmd = app.add_subcommand("preset", "run a named preset sweep");
    std::string preset_name;
    double scale = 1.0;
    std::uint64_t preset_seed = 0;
    std::string out_dir;
    preset_cmd->add_option("name", preset_name, "fig1, fig2, fig3 or fig4")->required();
    preset_cmd->add_option("--scale", scale, "multiplier on trial counts");
    preset_cmd->add_option("--seed", preset_seed, "master seed");
    preset_cmd->add_option("--out-dir", out_dir, "write <name>.csv and <name>.json here");

    auto* validate_cmd = app.add_subcommand("validate", "run the oracle and invariant checks");
    std::uint64_t validate_seed = 1;
    validate_cmd->add_option("--seed", validate_seed, "seed for random instances");

    auto* summarize = app.add_subcommand("summarize", "aggregate a results CSV into JSON");
    std::string csv_in;
    std::string json_out;
    summarize->add_option("csv", csv_in, "results CSV")->required();
    summarize->add_option("--out", json_out, "JSON output path (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            ExperimentConfig config;
            if (!config_path.empty()) {
                for (const auto& [key, value] : parse_key_values(read_file(config_path))) {
                    apply_setting(config, key, value);
                }
            }
            for (std::size_t i = 0; i < flag_values.size(); ++i) {
                if (flag_options[i]->count() > 0) {
                    apply_setting(config, flag_values[i].first, flag_values[i].second);
                }
            }
            const ExperimentOutput result = run_experiment(config, resolve_workers(workers));
            if (config.json_path.empty()) {
                out << summaries_to_json(result.points);
            }
            return kExitOk;
        }
        if (preset_cmd->parsed()) {
            const auto configs = preset(preset_name, scale, preset_seed);
            const ExperimentOutput result = run_experiments(configs, resolve_workers(workers));
            const std::string json = summaries_to_json(result.points);
            if (out_dir.empty()) {
                out << json;
            } else {
                const std::filesystem::path dir(out_dir);
                std::filesystem::create_directories(dir);
                write_file_atomically(dir / (preset_name + ".csv"), to_csv(result.rows));
                write_file_atomically(dir / (preset_name + ".json"), json);
                out << "wrote " << (dir / (preset_name + ".csv")).string() << " and "
                    << (dir / (preset_name + ".json")).string() << '\n';
            }
            return kExitOk;
        }
        if (validate_cmd->parsed()) {
            return oracle::run_validation_suite(out, validate_seed) ? kExitOk : kExitFailure;
        }
        if (summarize->parsed()) {
            const auto rows = parse_csv(read_file(csv_in));
            if (rows.empty()) {
                throw ConfigError("'" + csv_in + "' has no data rows");
            }
            const std::string json = summaries_to_json(summarize_rows(rows));
            if (json_out.empty()) {
                out << json;
            } else {
                write_file_atomically(json_out, json);
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace cachesim
