#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <tuple>

#include <json.hpp>

#include "cachesim/error.hpp"
#include "cachesim/harness.hpp"

namespace cachesim {

std::string format_double(double value) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf, end);
}

std::string csv_row(const TrialResult& r) {
    const PointConfig& p = r.point;
    std::string out;
    out.reserve(128);
    out += std::to_string(r.trial);
    out += ',';
    out += to_string(p.topology);
    out += ',';
    out += std::to_string(p.n);
    out += ',';
    out += std::to_string(p.k);
    out += ',';
    out += std::to_string(p.m);
    out += ',';
    out += std::to_string(p.ell);
    out += ',';
    out += format_double(p.gamma);
    out += ',';
    out += to_string(p.strategy);
    out += ',';
    out += std::to_string(p.q);
    out += ',';
    out += format_double(r.comm_cost);
    out += ',';
    out += format_double(r.max_load);
    out += ',';
    out += std::to_string(r.failures);
    out += ',';
    out += std::to_string(r.extra_chunks);
    out += ',';
    out += std::to_string(r.served);
    return out;
}

std::string to_csv(std::span<const TrialResult> rows) {
    std::string out(kCsvHeader);
    out += "\r\n";
    for (const TrialResult& r : rows) {
        out += csv_row(r);
        out += "\r\n";
    }
    return out;
}

namespace {

// One RFC 4180 record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) {
        throw ConfigError("csv: unterminated quoted field");
    }
    return fields;
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    }
    return value;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <class T>
std::vector<T> parse_list(std::string_view value, std::string_view key) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        const std::string_view item = trim(value.substr(start, comma == std::string_view::npos ? value.npos : comma - start));
        if (item.empty()) {
            throw ConfigError("empty value in list for '" + std::string(key) + "'");
        }
        out.push_back(parse_number<T>(item, key));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

bool parse_bool(std::string_view value, std::string_view key) {
    if (value == "1" || value == "true" || value == "on" || value == "yes") {
        return true;
    }
    if (value == "0" || value == "false" || value == "off" || value == "no") {
        return false;
    }
    throw ConfigError("expected a boolean for '" + std::string(key) + "', got '" + std::string(value) + "'");
}

} // namespace

std::vector<TrialResult> parse_csv(std::string_view text) {
    std::vector<TrialResult> rows;
    std::size_t pos = 0;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line != kCsvHeader) {
                throw ConfigError("csv: unexpected header '" + std::string(line) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto f = split_record(line);
        if (f.size() != 14) {
            throw ConfigError("csv line " + std::to_string(line_no) + ": expected 14 fields, got " +
                              std::to_string(f.size()));
        }
        TrialResult r;
        r.trial = parse_number<std::uint64_t>(f[0], "trial");
        r.point.topology = parse_wrap(f[1]);
        r.point.n = parse_number<std::uint32_t>(f[2], "n");
        r.point.k = parse_number<std::uint32_t>(f[3], "k");
        r.point.m = parse_number<std::uint32_t>(f[4], "m");
        r.point.ell = parse_number<std::uint32_t>(f[5], "ell");
        r.point.gamma = parse_number<double>(f[6], "gamma");
        r.point.strategy = parse_strategy(f[7]);
        r.point.q = parse_number<std::uint64_t>(f[8], "q");
        r.comm_cost = parse_number<double>(f[9], "comm_cost");
        r.max_load = parse_number<double>(f[10], "max_load");
        r.failures = parse_number<std::uint64_t>(f[11], "failures");
        r.extra_chunks = parse_number<std::uint64_t>(f[12], "extra_chunks");
        r.served = parse_number<std::uint64_t>(f[13], "served");
        rows.push_back(r);
    }
    if (!header_seen) {
        throw ConfigError("csv: missing header");
    }
    return rows;
}

std::vector<PointSummary> summarize_rows(std::span<const TrialResult> rows) {
    using Key = std::tuple<int, std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t, double, int, std::uint64_t>;
    std::map<Key, std::size_t> index;
    std::vector<PointConfig> points;
    std::vector<std::vector<TrialMetrics>> groups;
    for (const TrialResult& r : rows) {
        const PointConfig& p = r.point;
        const Key key{static_cast<int>(p.topology), p.n, p.k, p.m, p.ell, p.gamma, static_cast<int>(p.strategy), p.q};
        auto [it, inserted] = index.try_emplace(key, points.size());
        if (inserted) {
            points.push_back(p);
            groups.emplace_back();
        }
        groups[it->second].push_back(TrialMetrics{r.comm_cost, r.max_load, r.failures, r.served});
    }
    std::vector<PointSummary> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.push_back(PointSummary{{}, points[i], aggregate(groups[i])});
    }
    return out;
}

std::string summaries_to_json(std::span<const PointSummary> points) {
    using nlohmann::ordered_json;
    ordered_json arr = ordered_json::array();
    const auto est = [](const Estimate& e) {
        return ordered_json{{"mean", e.mean}, {"stddev", e.stddev}, {"ci95", e.ci95}};
    };
    for (const PointSummary& s : points) {
        const PointConfig& p = s.point;
        ordered_json obj;
        if (!s.label.empty()) {
            obj["label"] = s.label;
        }
        obj["topology"] = std::string(to_string(p.topology));
        obj["n"] = p.n;
        obj["k"] = p.k;
        obj["m"] = p.m;
        obj["ell"] = p.ell;
        obj["gamma"] = p.gamma;
        obj["strategy"] = std::string(to_string(p.strategy));
        obj["q"] = p.q;
        obj["ensure_coverage"] = p.ensure_coverage;
        obj["requests"] = p.request_count();
        obj["master_seed"] = p.master_seed;
        obj["trials"] = s.summary.trials;
        obj["comm_cost"] = est(s.summary.comm_cost);
        obj["max_load"] = est(s.summary.max_load);
        obj["failure_rate"] = s.summary.failure_rate;
        if (s.summary.single_trial) {
            obj["note"] = "single trial: stddev and ci95 reported as 0";
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

void write_file_atomically(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string_view key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view raw) {
    const std::string_view value = trim(raw);
    if (key == "topology") {
        config.topology = parse_wrap(value);
    } else if (key == "n") {
        config.n = parse_list<std::uint32_t>(value, key);
    } else if (key == "k") {
        config.k = parse_list<std::uint32_t>(value, key);
    } else if (key == "m") {
        config.m = parse_list<std::uint32_t>(value, key);
    } else if (key == "ell") {
        config.ell = parse_list<std::uint32_t>(value, key);
    } else if (key == "gamma") {
        config.gamma = parse_list<double>(value, key);
    } else if (key == "strategy") {
        config.strategy = parse_strategy(value);
    } else if (key == "trials") {
        config.trials = parse_number<std::uint64_t>(value, key);
    } else if (key == "seed") {
        config.master_seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "q") {
        config.q = parse_number<std::uint64_t>(value, key);
    } else if (key == "ensure-coverage" || key == "ensure_coverage") {
        config.ensure_coverage = parse_bool(value, key);
    } else if (key == "requests") {
        config.requests = parse_number<std::uint64_t>(value, key);
    } else if (key == "label") {
        config.label = std::string(value);
    } else if (key == "out") {
        config.csv_path = std::string(value);
    } else if (key == "summary") {
        config.json_path = std::string(value);
    } else {
        throw ConfigError("unknown setting '" + std::string(key) + "'");
    }
}

} // namespace cachesim
