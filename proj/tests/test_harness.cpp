#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cachesim/error.hpp"
#include "cachesim/harness.hpp"

using namespace cachesim;

TEST_CASE("strategy and topology names round-trip") {
    for (const Strategy s : {Strategy::nearest, Strategy::coded, Strategy::uncoded_chunks, Strategy::two_choice}) {
        CHECK(parse_strategy(to_string(s)) == s);
    }
    CHECK(parse_wrap("torus") == Wrap::torus);
    CHECK(parse_wrap("grid") == Wrap::grid);
    CHECK_THROWS_AS(parse_strategy("fastest"), ConfigError);
    CHECK_THROWS_AS(parse_wrap("ring"), ConfigError);
}

TEST_CASE("point validation") {
    CHECK(grid_width(2025) == 45);
    CHECK(grid_width(1) == 1);
    CHECK_THROWS_AS(grid_width(2024), ConfigError);
    CHECK_THROWS_AS(grid_width(0), ConfigError);
    PointConfig p;
    CHECK_NOTHROW(validate(p));
    p.q = 65536;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = PointConfig{};
    p.ell = 3;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = PointConfig{};
    p.gamma = -1.0;
    CHECK_THROWS_AS(validate(p), ConfigError);
}

TEST_CASE("run_trial examples") {
    PointConfig single;
    single.n = 1;
    single.k = 1;
    single.m = 1;
    const auto r = run_trial(single, 0);
    CHECK(r.comm_cost == 0.0);
    CHECK(r.max_load == 1.0);
    CHECK(r.failures == 0);

    PointConfig saturated;
    saturated.n = 9;
    saturated.k = 1;
    saturated.m = 1;
    saturated.ell = 1;
    saturated.strategy = Strategy::coded;
    for (std::uint64_t t = 0; t < 20; ++t) {
        CHECK(run_trial(saturated, t).comm_cost == 0.0);
    }
}

TEST_CASE("run_trial is a pure function of (config, index)") {
    for (const Strategy s : {Strategy::nearest, Strategy::coded, Strategy::uncoded_chunks, Strategy::two_choice}) {
        PointConfig p;
        p.n = 225;
        p.k = 20;
        p.m = 2;
        p.ell = s == Strategy::coded || s == Strategy::uncoded_chunks ? 4 : 1;
        p.gamma = 0.7;
        p.strategy = s;
        p.master_seed = 99;
        const PointRunner runner(p);
        const auto a = runner.run(3);
        const auto b = run_trial(p, 3);
        CHECK(a == b);
        CHECK_FALSE(runner.run(4) == a);
    }
}

TEST_CASE("results do not depend on the worker count") {
    PointConfig p;
    p.n = 400;
    p.k = 50;
    p.m = 1;
    p.ell = 5;
    p.strategy = Strategy::coded;
    p.master_seed = 7;
    const auto one = run_point(p, 24, 1);
    const auto four = run_point(p, 24, 4);
    REQUIRE(one.size() == 24);
    CHECK(one == four);
    for (std::uint64_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].trial == i);
    }
}

TEST_CASE("worker count comes from the environment") {
    ::setenv("CACHESIM_WORKERS", "3", 1);
    CHECK(default_workers() == 3);
    ::setenv("CACHESIM_WORKERS", "zero", 1);
    CHECK(default_workers() >= 1);
    ::unsetenv("CACHESIM_WORKERS");
    CHECK(default_workers() >= 1);
}

TEST_CASE("experiment sweeps") {
    ExperimentConfig c;
    c.n = {25, 49};
    c.k = {5};
    c.m = {1};
    c.ell = {3};
    c.strategy = Strategy::nearest;
    c.trials = 4;
    const auto points = c.points();
    REQUIRE(points.size() == 2);
    CHECK(points[0].ell == 1);
    CHECK(points[1].n == 49);

    ExperimentConfig two = c;
    two.k = {5, 6};
    CHECK_THROWS_AS(two.points(), ConfigError);
    ExperimentConfig none = c;
    none.trials = 0;
    CHECK_THROWS_AS(none.points(), ConfigError);

    const auto out = run_experiment(c, 2);
    CHECK(out.rows.size() == 8);
    REQUIRE(out.points.size() == 2);
    CHECK(out.points[0].summary.trials == 4);
}

TEST_CASE("presets") {
    const auto fig3 = preset("fig3", 0.05);
    REQUIRE(fig3.size() == 1);
    CHECK(fig3[0].trials == 100);
    CHECK(fig3[0].ell.size() == 10);
    const auto fig1 = preset("fig1", 1.0);
    CHECK(fig1.size() == 4);
    CHECK(fig1[0].trials == 5000);
    CHECK(preset("fig2", 1e-9)[0].trials == 1);
    const auto fig4 = preset("fig4", 1.0);
    CHECK(fig4[0].ensure_coverage);
    CHECK(fig4[0].trials == 4000);
    CHECK(fig4[0].gamma.front() == 0.0);
    CHECK(fig4[0].gamma.back() == 2.0);
    for (const auto& name : preset_names()) {
        for (const auto& cfg : preset(name, 0.01)) {
            CHECK_NOTHROW(cfg.points());
        }
    }
    CHECK_THROWS_AS(preset("fig9", 1.0), ConfigError);
    CHECK_THROWS_AS(preset("fig1", 0.0), ConfigError);
}

TEST_CASE("CSV header is exact and rows round-trip") {
    CHECK(kCsvHeader == "trial,topology,n,k,m,ell,gamma,strategy,q,comm_cost,max_load,failures,extra_chunks,served");
    PointConfig p;
    p.n = 49;
    p.k = 7;
    p.m = 2;
    p.ell = 3;
    p.gamma = 0.3;
    p.strategy = Strategy::coded;
    const auto rows = run_point(p, 5, 1);
    const std::string csv = to_csv(rows);
    CHECK(csv.rfind(std::string(kCsvHeader) + "\r\n", 0) == 0);
    const auto back = parse_csv(csv);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].trial == rows[i].trial);
        CHECK(back[i].comm_cost == rows[i].comm_cost);
        CHECK(back[i].max_load == rows[i].max_load);
        CHECK(back[i].point.gamma == rows[i].point.gamma);
        CHECK(back[i].point.strategy == Strategy::coded);
        CHECK(back[i].served == rows[i].served);
    }
}

TEST_CASE("CSV parsing tolerates quoting and rejects malformed input") {
    const std::string header(kCsvHeader);
    const auto quoted = parse_csv(header + "\n\"0\",torus,\"9\",1,1,1,0,nearest,65537,0,1,0,0,9\n");
    REQUIRE(quoted.size() == 1);
    CHECK(quoted[0].point.n == 9);
    CHECK_THROWS_AS(parse_csv("trial,n\n0,9\n"), ConfigError);
    CHECK_THROWS_AS(parse_csv(header + "\n0,torus,9\n"), ConfigError);
    CHECK_THROWS_AS(parse_csv(header + "\n0,torus,x,1,1,1,0,nearest,65537,0,1,0,0,9\n"), ConfigError);
    CHECK_THROWS_AS(parse_csv(""), ConfigError);
}

TEST_CASE("format_double round-trips") {
    for (const double x : {0.0, 1.0, 0.1, 1.0 / 3.0, 2.5e-300, 123456.789}) {
        CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
    }
}

TEST_CASE("summaries: grouping and JSON shape") {
    PointConfig a;
    a.n = 25;
    a.k = 3;
    PointConfig b = a;
    b.m = 2;
    std::vector<TrialResult> rows;
    rows.push_back(TrialResult{a, 0, 1.0, 2.0, 0, 0, 25});
    rows.push_back(TrialResult{b, 0, 5.0, 1.0, 1, 0, 24});
    rows.push_back(TrialResult{a, 1, 3.0, 4.0, 0, 0, 25});
    const auto groups = summarize_rows(rows);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].point.m == 1);
    CHECK(groups[0].summary.trials == 2);
    CHECK(groups[0].summary.comm_cost.mean == doctest::Approx(2.0));
    CHECK(groups[1].summary.single_trial);

    const auto json = nlohmann::json::parse(summaries_to_json(groups));
    REQUIRE(json.is_array());
    REQUIRE(json.size() == 2);
    CHECK(json[0]["trials"] == 2);
    CHECK(json[0]["comm_cost"]["mean"].get<double>() == doctest::Approx(2.0));
    CHECK(json[0]["comm_cost"]["stddev"].get<double>() == doctest::Approx(std::sqrt(2.0)));
    CHECK(json[0].contains("failure_rate"));
    CHECK(json[0]["max_load"].contains("ci95"));
    CHECK(json[1]["failure_rate"].get<double>() == doctest::Approx(1.0 / 25.0));
}

TEST_CASE("key/value configs") {
    const auto kv = parse_key_values("# sweep\nn = 25, 49\nstrategy=coded  # trailing\n\nell = 4\n");
    CHECK(kv.at("n") == "25, 49");
    CHECK(kv.at("strategy") == "coded");
    ExperimentConfig c;
    for (const auto& [k, v] : kv) {
        apply_setting(c, k, v);
    }
    CHECK(c.n == std::vector<std::uint32_t>{25, 49});
    CHECK(c.strategy == Strategy::coded);
    CHECK(c.ell == std::vector<std::uint32_t>{4});
    apply_setting(c, "ensure-coverage", "true");
    CHECK(c.ensure_coverage);
    apply_setting(c, "gamma", "0.5");
    CHECK(c.gamma == std::vector<double>{0.5});
    CHECK_THROWS_AS(apply_setting(c, "colour", "blue"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "n", "25,,49"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "trials", "-1"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "ensure-coverage", "maybe"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("no equals sign"), ConfigError);
}

TEST_CASE("run_experiment writes CSV and JSON files") {
    const auto dir = std::filesystem::temp_directory_path() / "cachesim_harness_test";
    std::filesystem::create_directories(dir);
    ExperimentConfig c;
    c.n = {25};
    c.k = {4};
    c.trials = 3;
    c.csv_path = (dir / "r.csv").string();
    c.json_path = (dir / "r.json").string();
    run_experiment(c, 1);
    std::ifstream csv(c.csv_path);
    std::stringstream ss;
    ss << csv.rdbuf();
    CHECK(parse_csv(ss.str()).size() == 3);
    std::ifstream js(c.json_path);
    const auto parsed = nlohmann::json::parse(js);
    CHECK(parsed.size() == 1);
    std::filesystem::remove_all(dir);
}
