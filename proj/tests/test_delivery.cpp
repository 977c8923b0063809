#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cachesim/delivery.hpp"
#include "cachesim/error.hpp"
#include "cachesim/metrics.hpp"
#include "cachesim/validation.hpp"

using namespace cachesim;

namespace {

RequestTrace one_request(NodeId origin, std::uint32_t file) { return RequestTrace{{Request{origin, FileId{file}}}}; }

// Uncoded cache with file 2 everywhere except where `holders` get file 1.
CacheState sparse_cache(std::uint32_t nodes, std::initializer_list<std::uint32_t> holders) {
    CacheState c(Scheme::uncoded, nodes, 2, 1, 1);
    for (std::uint32_t v = 0; v < nodes; ++v) {
        c.set_entry(NodeId{v}, 0, CacheEntry{2, 0});
    }
    for (const std::uint32_t h : holders) {
        c.set_entry(NodeId{h}, 0, CacheEntry{1, 0});
    }
    c.rebuild_index();
    return c;
}

bool same_ledger(const DeliveryLedger& a, const DeliveryLedger& b) {
    if (a.records.size() != b.records.size() || a.failures.size() != b.failures.size() ||
        a.extra_chunks != b.extra_chunks || a.units_per_file != b.units_per_file) {
        return false;
    }
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        if (x.server != y.server || x.origin != y.origin || x.request_index != y.request_index ||
            x.distance != y.distance || x.bits_fraction != y.bits_fraction || x.rank_repair != y.rank_repair) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("generate_trace examples") {
    Rng rng(1);
    const auto t1 = generate_trace(1, 50, make_profile(5, 1.0), rng);
    for (const Request& r : t1.requests) {
        REQUIRE(r.origin == NodeId{0});
    }
    const auto t2 = generate_trace(10, 50, make_profile(1, 0.0), rng);
    for (const Request& r : t2.requests) {
        REQUIRE(r.file == FileId{1});
    }
    CHECK_THROWS_AS(generate_trace(0, 5, make_profile(1, 0.0), rng), ConfigError);
}

TEST_CASE("per-node request counts have unit variance when m = n") {
    Rng rng(2);
    constexpr std::uint32_t n = 10000;
    const auto trace = generate_trace(n, n, make_profile(1, 0.0), rng);
    std::vector<double> d(n, 0.0);
    for (const Request& r : trace.requests) {
        d[r.origin.value] += 1.0;
    }
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double var = 0.0;
    for (const double x : d) {
        var += (x - mean) * (x - mean);
    }
    var /= n - 1;
    CHECK(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("nearest replica examples") {
    const Topology t(7, Wrap::torus);
    Rng rng(3);
    const auto c = sparse_cache(t.size(), {t.at(2, 2).value});
    const auto self = deliver_nearest_replica(t, c, one_request(t.at(2, 2), 1), rng);
    REQUIRE(self.records.size() == 1);
    CHECK(self.records[0].distance == 0);
    CHECK(self.records[0].server == t.at(2, 2));

    const auto far = deliver_nearest_replica(t, c, one_request(t.at(6, 5), 1), rng);
    REQUIRE(far.records.size() == 1);
    CHECK(far.records[0].server == t.at(2, 2));
    CHECK(far.records[0].distance == t.distance(t.at(6, 5), t.at(2, 2)));

    const auto none = sparse_cache(t.size(), {});
    const auto failed = deliver_nearest_replica(t, none, one_request(NodeId{0}, 1), rng);
    CHECK(failed.records.empty());
    REQUIRE(failed.failures.size() == 1);
    CHECK(failed.failures[0].reason == FailureReason::unservable);
}

TEST_CASE("nearest replica agrees with the BFS oracle on random instances") {
    Rng rng(4);
    for (const std::uint32_t w : {5u, 7u}) {
        for (int trial = 0; trial < 1000; ++trial) {
            const Wrap wrap = trial % 4 == 0 ? Wrap::grid : Wrap::torus;
            const Topology t(w, wrap);
            const auto p = make_profile(1 + static_cast<std::uint32_t>(uniform_below(rng, 30)), 0.6);
            const auto c = place_uncoded(t, p, 1 + static_cast<std::uint32_t>(uniform_below(rng, 2)), rng);
            const auto trace = generate_trace(t.size(), 5, p, rng);
            const auto ledger = deliver_nearest_replica(t, c, trace, rng);
            std::size_t next = 0;
            for (std::uint32_t i = 0; i < trace.size(); ++i) {
                const Request& r = trace.requests[i];
                const auto want = oracle::nearest_replica_distance(w, wrap, c, r.origin.value, r.file.value);
                if (want) {
                    REQUIRE(next < ledger.records.size());
                    const auto& m = ledger.records[next++];
                    REQUIRE(m.request_index == i);
                    REQUIRE(m.distance == *want);
                    REQUIRE(c.holds(m.server, r.file));
                    REQUIRE(m.distance == t.distance(m.server, r.origin));
                } else {
                    REQUIRE(std::any_of(ledger.failures.begin(), ledger.failures.end(),
                                        [i](const Failure& f) { return f.request_index == i; }));
                }
            }
            REQUIRE(next == ledger.records.size());
        }
    }
}

TEST_CASE("nearest replica breaks ties uniformly") {
    const Topology t(9, Wrap::torus);
    const auto c = sparse_cache(t.size(), {t.at(4, 2).value, t.at(4, 6).value});
    int left = 0;
    constexpr int kTrials = 10000;
    for (int s = 0; s < kTrials; ++s) {
        Rng rng(static_cast<std::uint64_t>(s));
        const auto l = deliver_nearest_replica(t, c, one_request(t.at(4, 4), 1), rng);
        left += l.records[0].server == t.at(4, 2) ? 1 : 0;
    }
    CHECK(std::abs(left / double(kTrials) - 0.5) <= 0.02);
}

TEST_CASE("strategies reject the wrong cache scheme") {
    const Topology t(3, Wrap::torus);
    const PrimeField f(65537);
    Rng rng(5);
    const auto unc = place_uncoded(t, make_profile(2, 0.0), 1, rng);
    const auto cod = place_coded(t, make_profile(2, 0.0), 1, 2, f, rng);
    const auto trace = generate_trace(t.size(), 3, make_profile(2, 0.0), rng);
    CHECK_THROWS_AS(deliver_coded(t, unc, trace, f, rng), ConfigError);
    CHECK_THROWS_AS(deliver_nearest_replica(t, cod, trace, rng), ConfigError);
    CHECK_THROWS_AS(deliver_uncoded_chunks(t, unc, trace, rng), ConfigError);
    CHECK_THROWS_AS(deliver_coded(t, cod, trace, PrimeField(7), rng), ConfigError);
    const RequestTrace bad{{Request{NodeId{0}, FileId{3}}}};
    CHECK_THROWS_AS(deliver_nearest_replica(t, unc, bad, rng), ConfigError);
}

TEST_CASE("coded delivery with ell=1 is nearest chunk holder") {
    const Topology t(7, Wrap::torus);
    const PrimeField f(65537);
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = make_profile(8, 0.0);
        const auto c = place_coded(t, p, 1, 1, f, rng);
        const auto trace = generate_trace(t.size(), 4, p, rng);
        const auto ledger = deliver_coded(t, c, trace, f, rng);
        for (const MessageRecord& m : ledger.records) {
            const auto& r = trace.requests[m.request_index];
            const auto want = oracle::nearest_replica_distance(7, Wrap::torus, c, r.origin.value, r.file.value);
            REQUIRE(want);
            REQUIRE(m.distance == *want);
            REQUIRE(m.bits_fraction == 1.0);
        }
    }
}

TEST_CASE("coded delivery: all chunks at the origin cost nothing") {
    const Topology t(5, Wrap::torus);
    const PrimeField f(65537);
    CacheState c(Scheme::coded, t.size(), 1, 1, 3, f);
    for (std::uint32_t v = 0; v < t.size(); ++v) {
        for (std::uint32_t s = 0; s < 3; ++s) {
            auto co = c.mutable_coeffs(NodeId{v}, s);
            std::fill(co.begin(), co.end(), 0);
            co[s] = 1;
        }
    }
    c.rebuild_index();
    Rng rng(7);
    const auto ledger = deliver_coded(t, c, one_request(NodeId{12}, 1), f, rng);
    REQUIRE(ledger.records.size() == 3);
    for (const MessageRecord& m : ledger.records) {
        CHECK(m.distance == 0);
        CHECK(m.server == NodeId{12});
    }
    CHECK(compute_metrics(ledger, t.size()).comm_cost == 0.0);
}

TEST_CASE("coded delivery fetches repair chunks until full rank") {
    const Topology t(3, Wrap::grid);
    const PrimeField f(7);
    // Origin holds two copies of (1,0); the neighbour holds (0,1).
    CacheState c(Scheme::coded, t.size(), 2, 1, 2, f);
    for (std::uint32_t v = 0; v < t.size(); ++v) {
        for (std::uint32_t s = 0; s < 2; ++s) {
            c.set_entry(NodeId{v}, s, CacheEntry{2, 0});
        }
    }
    for (std::uint32_t s = 0; s < 2; ++s) {
        c.set_entry(NodeId{0}, s, CacheEntry{1, 0});
        auto co = c.mutable_coeffs(NodeId{0}, s);
        co[0] = 1;
        co[1] = 0;
    }
    c.set_entry(NodeId{1}, 0, CacheEntry{1, 0});
    auto co = c.mutable_coeffs(NodeId{1}, 0);
    co[0] = 0;
    co[1] = 1;
    c.rebuild_index();

    Rng rng(8);
    const auto ledger = deliver_coded(t, c, one_request(NodeId{0}, 1), f, rng);
    REQUIRE(ledger.records.size() == 3);
    CHECK_FALSE(ledger.records[0].rank_repair);
    CHECK_FALSE(ledger.records[1].rank_repair);
    CHECK(ledger.records[2].rank_repair);
    CHECK(ledger.records[2].server == NodeId{1});
    CHECK(ledger.extra_chunks == 1);
    CHECK(ledger.failures.empty());

    // Remove the independent chunk: the network runs out before full rank.
    c.set_entry(NodeId{1}, 0, CacheEntry{2, 0});
    c.rebuild_index();
    const auto stuck = deliver_coded(t, c, one_request(NodeId{0}, 1), f, rng);
    REQUIRE(stuck.failures.size() == 1);
    CHECK(stuck.failures[0].reason == FailureReason::undecodable);
}

TEST_CASE("coded delivery collects a decodable set whenever it succeeds") {
    const Topology t(6, Wrap::torus);
    const PrimeField f(2);
    Rng rng(9);
    const auto p = make_profile(4, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = place_coded(t, p, 2, 3, f, rng);
        const auto trace = generate_trace(t.size(), 10, p, rng);
        const auto ledger = deliver_coded(t, c, trace, f, rng);
        // Rebuild each request's coefficient set from the slots it used.
        std::vector<std::vector<CoeffVector>> used(trace.size());
        std::vector<std::vector<std::uint32_t>> next_slot(trace.size(), std::vector<std::uint32_t>(t.size(), 0));
        for (const MessageRecord& m : ledger.records) {
            const auto slots = c.slots_of(m.server, trace.requests[m.request_index].file);
            const std::uint32_t k = next_slot[m.request_index][m.server.value]++;
            REQUIRE(k < slots.size());
            const auto co = c.coeffs(m.server, slots[k]);
            used[m.request_index].push_back(CoeffVector{{co.begin(), co.end()}});
        }
        std::vector<bool> failed(trace.size(), false);
        for (const Failure& fl : ledger.failures) {
            failed[fl.request_index] = true;
        }
        for (std::uint32_t i = 0; i < trace.size(); ++i) {
            REQUIRE(used[i].size() >= (failed[i] ? 0u : 3u));
            REQUIRE((rank(used[i], f) == 3) == !failed[i]);
        }
    }
}

TEST_CASE("coded delivery: ell records of 1/ell in nearly every trial at q=65537") {
    const Topology t(7, Wrap::torus);
    const PrimeField f(65537);
    const auto p = make_profile(1, 0.0);
    int exact = 0;
    constexpr int kTrials = 10000;
    Rng rng(10);
    for (int trial = 0; trial < kTrials; ++trial) {
        const auto c = place_coded(t, p, 1, 4, f, rng);
        const auto trace = generate_trace(t.size(), 1, p, rng);
        const auto ledger = deliver_coded(t, c, trace, f, rng);
        const bool ok = ledger.records.size() == 4 &&
                        std::all_of(ledger.records.begin(), ledger.records.end(),
                                    [](const MessageRecord& m) { return m.bits_fraction == 0.25; });
        exact += ok ? 1 : 0;
    }
    CHECK(exact >= 0.999 * kTrials);
}

TEST_CASE("coded delivery matches a full-sort scan of chunk distances") {
    const PrimeField f(65537);
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto w = static_cast<std::uint32_t>(3 + uniform_below(rng, 18));
        const Wrap wrap = trial % 3 == 0 ? Wrap::grid : Wrap::torus;
        const Topology t(w, wrap);
        const auto ell = static_cast<std::uint32_t>(1 + uniform_below(rng, 10));
        const auto p = make_profile(1 + static_cast<std::uint32_t>(uniform_below(rng, 50)), 0.8);
        const auto c = place_coded(t, p, 1 + static_cast<std::uint32_t>(uniform_below(rng, 3)), ell, f, rng);
        const auto trace = generate_trace(t.size(), 20, p, rng);
        const auto ledger = deliver_coded(t, c, trace, f, rng);
        std::vector<std::vector<std::uint32_t>> got(trace.size());
        for (const MessageRecord& m : ledger.records) {
            REQUIRE(m.distance == t.distance(m.server, m.origin));
            if (!m.rank_repair) {
                got[m.request_index].push_back(m.distance);
            }
        }
        for (std::uint32_t i = 0; i < trace.size(); ++i) {
            auto want = oracle::sorted_chunk_distances(w, wrap, c, trace.requests[i].origin.value,
                                                       trace.requests[i].file.value);
            want.resize(std::min<std::size_t>(want.size(), ell));
            std::sort(got[i].begin(), got[i].end());
            REQUIRE(got[i] == want);
        }
    }
}

TEST_CASE("uncoded chunks: examples and coupon-collector scan count") {
    const Topology t(5, Wrap::torus);
    CacheState c(Scheme::uncoded_chunks, t.size(), 1, 1, 3);
    for (std::uint32_t v = 0; v < t.size(); ++v) {
        for (std::uint32_t s = 0; s < 3; ++s) {
            c.set_entry(NodeId{v}, s, CacheEntry{1, s + 1});
        }
    }
    c.rebuild_index();
    Rng rng(12);
    const auto local = deliver_uncoded_chunks(t, c, one_request(NodeId{7}, 1), rng);
    REQUIRE(local.records.size() == 3);
    CHECK(compute_metrics(local, t.size()).comm_cost == 0.0);

    // Dense single-file network, one chunk per node.
    const Topology big(45, Wrap::torus);
    const auto p = make_profile(1, 0.0);
    double scanned = 0.0;
    std::uint64_t requests = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const auto cache = place_uncoded_chunks(big, p, 1, 4, rng);
        const auto trace = generate_trace(big.size(), 1000, p, rng);
        const auto ledger = deliver_uncoded_chunks(big, cache, trace, rng);
        REQUIRE(ledger.failures.empty());
        REQUIRE(ledger.records.size() == 4 * trace.size());
        scanned += static_cast<double>(ledger.scanned_chunks);
        requests += trace.size();
    }
    const double expected = oracle::coupon_collector_mean(4);
    CHECK(expected == doctest::Approx(25.0 / 3.0));
    CHECK(std::abs(scanned / requests - expected) <= 0.05 * expected);
}

TEST_CASE("uncoded chunks with ell=1 is nearest holder") {
    const Topology t(6, Wrap::grid);
    Rng rng(13);
    const auto p = make_profile(10, 0.3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = place_uncoded_chunks(t, p, 2, 1, rng);
        const auto trace = generate_trace(t.size(), 5, p, rng);
        const auto ledger = deliver_uncoded_chunks(t, c, trace, rng);
        for (const MessageRecord& m : ledger.records) {
            const auto& r = trace.requests[m.request_index];
            REQUIRE(m.distance == *oracle::nearest_replica_distance(6, Wrap::grid, c, r.origin.value, r.file.value));
        }
    }
}

TEST_CASE("two-choice: single replica behaves as nearest") {
    const Topology t(7, Wrap::torus);
    const auto c = sparse_cache(t.size(), {t.at(1, 5).value});
    Rng rng(14);
    const RequestTrace trace{{Request{t.at(4, 4), FileId{1}}, Request{t.at(0, 0), FileId{1}}}};
    const auto ledger = deliver_two_choice(t, c, trace, RadiusPolicy::expanding_ring, rng);
    REQUIRE(ledger.records.size() == 2);
    for (const MessageRecord& m : ledger.records) {
        CHECK(m.server == t.at(1, 5));
        CHECK(m.distance == t.distance(m.origin, m.server));
    }
}

TEST_CASE("two-choice: equidistant equal-load replicas split evenly") {
    const Topology t(9, Wrap::torus);
    const auto c = sparse_cache(t.size(), {t.at(4, 2).value, t.at(4, 6).value});
    int left = 0;
    constexpr int kTrials = 10000;
    for (int s = 0; s < kTrials; ++s) {
        Rng rng(static_cast<std::uint64_t>(s) + 1000000);
        const auto l = deliver_two_choice(t, c, one_request(t.at(4, 4), 1), RadiusPolicy::expanding_ring, rng);
        left += l.records[0].server == t.at(4, 2) ? 1 : 0;
    }
    CHECK(std::abs(left / double(kTrials) - 0.5) <= 0.02);
}

TEST_CASE("two-choice: the less loaded candidate wins") {
    const Topology t(9, Wrap::torus);
    const auto c = sparse_cache(t.size(), {t.at(4, 2).value, t.at(4, 6).value});
    Rng rng(15);
    // Alternating requests from the midpoint must alternate servers.
    RequestTrace trace;
    for (int i = 0; i < 20; ++i) {
        trace.requests.push_back(Request{t.at(4, 4), FileId{1}});
    }
    const auto ledger = deliver_two_choice(t, c, trace, RadiusPolicy::expanding_ring, rng);
    const auto m = compute_metrics(ledger, t.size());
    CHECK(m.max_load == 10.0);
}

TEST_CASE("two-choice does not exceed nearest max load in paired trials") {
    const Topology t(32, Wrap::torus);
    const auto p = make_profile(100, 0.0);
    int better_or_equal = 0;
    constexpr int kTrials = 500;
    for (int trial = 0; trial < kTrials; ++trial) {
        Rng rng(derive_key(77, static_cast<std::uint64_t>(trial)));
        const auto c = place_uncoded(t, p, 1, rng);
        const auto trace = generate_trace(t.size(), t.size(), p, rng);
        Rng ra(rng());
        Rng rb(rng());
        const auto near = compute_metrics(deliver_nearest_replica(t, c, trace, ra), t.size());
        const auto two =
            compute_metrics(deliver_two_choice(t, c, trace, RadiusPolicy::expanding_ring, rb), t.size());
        better_or_equal += two.max_load <= near.max_load ? 1 : 0;
    }
    CHECK(better_or_equal >= 0.95 * kTrials);
}

TEST_CASE("delivery is deterministic and order-independent") {
    const Topology t(12, Wrap::torus);
    const PrimeField f(65537);
    const auto p = make_profile(30, 0.9);
    Rng setup(16);
    const auto unc = place_uncoded(t, p, 2, setup);
    const auto cod = place_coded(t, p, 1, 5, f, setup);
    const auto chk = place_uncoded_chunks(t, p, 1, 5, setup);
    const auto trace = generate_trace(t.size(), 300, p, setup);

    std::vector<std::uint32_t> order(trace.size());
    std::iota(order.begin(), order.end(), 0U);
    std::reverse(order.begin(), order.end());
    const DeliveryOptions reversed{order};

    const auto sorted_by_request = [](DeliveryLedger l) {
        std::stable_sort(l.records.begin(), l.records.end(),
                         [](const MessageRecord& a, const MessageRecord& b) { return a.request_index < b.request_index; });
        std::sort(l.failures.begin(), l.failures.end(),
                  [](const Failure& a, const Failure& b) { return a.request_index < b.request_index; });
        return l;
    };

    Rng a(1), b(1), c(1);
    CHECK(same_ledger(deliver_nearest_replica(t, unc, trace, a), deliver_nearest_replica(t, unc, trace, b)));
    Rng d(1);
    CHECK(same_ledger(deliver_nearest_replica(t, unc, trace, c),
                      sorted_by_request(deliver_nearest_replica(t, unc, trace, d, reversed))));

    Rng e(2), g(2);
    CHECK(same_ledger(deliver_coded(t, cod, trace, f, e), sorted_by_request(deliver_coded(t, cod, trace, f, g, reversed))));
    Rng h(3), k(3);
    CHECK(same_ledger(deliver_uncoded_chunks(t, chk, trace, h),
                      sorted_by_request(deliver_uncoded_chunks(t, chk, trace, k, reversed))));
    Rng m(4), n(4);
    CHECK(same_ledger(deliver_two_choice(t, unc, trace, RadiusPolicy::expanding_ring, m),
                      deliver_two_choice(t, unc, trace, RadiusPolicy::expanding_ring, n)));

    const std::vector<std::uint32_t> short_order{0, 1};
    Rng bad(5);
    CHECK_THROWS_AS(deliver_nearest_replica(t, unc, trace, bad, DeliveryOptions{short_order}), ConfigError);
}
