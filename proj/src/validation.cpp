#include "cachesim/validation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <string>

#include "cachesim/delivery.hpp"
#include "cachesim/metrics.hpp"
#include "cachesim/popularity.hpp"

namespace cachesim::oracle {

namespace {

std::vector<std::vector<std::uint32_t>> adjacency(std::uint32_t width, Wrap wrap) {
    const std::uint32_t n = width * width;
    std::vector<std::vector<std::uint32_t>> adj(n);
    const auto link = [&](std::uint32_t a, std::uint32_t b) {
        if (a == b) {
            return;
        }
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (std::uint32_t r = 0; r < width; ++r) {
        for (std::uint32_t c = 0; c < width; ++c) {
            const std::uint32_t id = r * width + c;
            if (c + 1 < width) {
                link(id, id + 1);
            } else if (wrap == Wrap::torus) {
                link(id, r * width);
            }
            if (r + 1 < width) {
                link(id, id + width);
            } else if (wrap == Wrap::torus) {
                link(id, c);
            }
        }
    }
    return adj;
}

} // namespace

std::vector<std::uint32_t> bfs_distances(std::uint32_t width, Wrap wrap, std::uint32_t source) {
    const auto adj = adjacency(width, wrap);
    constexpr std::uint32_t unseen = ~0U;
    std::vector<std::uint32_t> dist(adj.size(), unseen);
    std::deque<std::uint32_t> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        const std::uint32_t u = queue.front();
        queue.pop_front();
        for (const std::uint32_t v : adj[u]) {
            if (dist[v] == unseen) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

std::vector<std::uint32_t> ball(std::uint32_t width, Wrap wrap, std::uint32_t source, std::uint32_t r) {
    const auto dist = bfs_distances(width, wrap, source);
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < dist.size(); ++v) {
        if (dist[v] <= r) {
            out.push_back(v);
        }
    }
    return out;
}

std::optional<std::uint32_t> nearest_replica_distance(std::uint32_t width, Wrap wrap, const CacheState& cache,
                                                      std::uint32_t origin, std::uint32_t file) {
    const auto dist = bfs_distances(width, wrap, origin);
    std::optional<std::uint32_t> best;
    for (std::uint32_t v = 0; v < dist.size(); ++v) {
        for (const CacheEntry& e : cache.entries(NodeId{v})) {
            if (e.file == file && (!best || dist[v] < *best)) {
                best = dist[v];
            }
        }
    }
    return best;
}

std::vector<std::uint32_t> sorted_chunk_distances(std::uint32_t width, Wrap wrap, const CacheState& cache,
                                                  std::uint32_t origin, std::uint32_t file) {
    const auto dist = bfs_distances(width, wrap, origin);
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < dist.size(); ++v) {
        for (const CacheEntry& e : cache.entries(NodeId{v})) {
            if (e.file == file) {
                out.push_back(dist[v]);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double full_rank_probability(std::uint64_t q, std::uint32_t ell) {
    double p = 1.0;
    for (std::uint32_t i = 1; i <= ell; ++i) {
        p *= 1.0 - std::pow(static_cast<double>(q), -static_cast<double>(i));
    }
    return p;
}

std::size_t dense_rank(std::vector<std::vector<std::uint64_t>> rows, std::uint64_t q) {
    const auto modpow = [q](std::uint64_t b, std::uint64_t e) {
        std::uint64_t r = 1;
        b %= q;
        while (e > 0) {
            if (e & 1) {
                r = static_cast<std::uint64_t>(static_cast<unsigned __int128>(r) * b % q);
            }
            b = static_cast<std::uint64_t>(static_cast<unsigned __int128>(b) * b % q);
            e >>= 1;
        }
        return r;
    };
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && rows[pivot][c] % q == 0) {
            ++pivot;
        }
        if (pivot == rows.size()) {
            continue;
        }
        std::swap(rows[rank], rows[pivot]);
        const std::uint64_t inv = modpow(rows[rank][c], q - 2);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == rank || rows[r][c] % q == 0) {
                continue;
            }
            const std::uint64_t f = static_cast<std::uint64_t>(
                static_cast<unsigned __int128>(rows[r][c] % q) * inv % q);
            for (std::size_t k = c; k < cols; ++k) {
                const auto sub = static_cast<std::uint64_t>(static_cast<unsigned __int128>(f) * rows[rank][k] % q);
                rows[r][k] = (rows[r][k] % q + q - sub) % q;
            }
        }
        ++rank;
    }
    return rank;
}

std::uint64_t count_full_rank_binary(std::uint32_t ell) {
    const std::uint32_t cells = ell * ell;
    std::uint64_t count = 0;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << cells); ++bits) {
        std::vector<std::vector<std::uint64_t>> m(ell, std::vector<std::uint64_t>(ell));
        for (std::uint32_t i = 0; i < cells; ++i) {
            m[i / ell][i % ell] = (bits >> i) & 1;
        }
        if (dense_rank(std::move(m), 2) == ell) {
            ++count;
        }
    }
    return count;
}

Bracket zipf_normalizer_bounds(double gamma, std::uint64_t library_size) {
    const double k = static_cast<double>(library_size);
    // integral_a^b x^{-gamma} dx
    const auto integral = [gamma](double a, double b) {
        if (std::abs(gamma - 1.0) < 1e-12) {
            return std::log(b / a);
        }
        return (std::pow(b, 1.0 - gamma) - std::pow(a, 1.0 - gamma)) / (1.0 - gamma);
    };
    return Bracket{integral(1.0, k + 1.0), 1.0 + integral(1.0, k)};
}

double coupon_collector_mean(std::uint32_t ell) {
    double h = 0.0;
    for (std::uint32_t i = 1; i <= ell; ++i) {
        h += 1.0 / i;
    }
    return ell * h;
}

namespace {

struct Reporter {
    std::ostream& out;
    bool ok = true;

    void check(const std::string& name, bool pass, const std::string& detail = {}) {
        out << (pass ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) {
            out << "  (" << detail << ")";
        }
        out << '\n';
        ok = ok && pass;
    }
};

bool metric_axioms(std::uint32_t width, Wrap wrap) {
    const Topology t(width, wrap);
    const std::uint32_t n = t.size();
    for (std::uint32_t u = 0; u < n; ++u) {
        const auto bfs = bfs_distances(width, wrap, u);
        for (std::uint32_t v = 0; v < n; ++v) {
            const std::uint32_t d = t.distance(NodeId{u}, NodeId{v});
            if (d != bfs[v] || d != t.distance(NodeId{v}, NodeId{u}) || ((d == 0) != (u == v))) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

bool run_validation_suite(std::ostream& out, std::uint64_t seed) {
    Reporter rep{out};
    Rng rng(seed);

    {
        bool ok = true;
        for (std::uint32_t w = 1; w <= 7; ++w) {
            ok = ok && metric_axioms(w, Wrap::torus) && metric_axioms(w, Wrap::grid);
        }
        rep.check("topology: distance equals BFS hop count, symmetric, zero only on the diagonal", ok);
    }
    {
        const Topology t(21, Wrap::torus);
        bool ok = true;
        for (std::uint32_t r = 0; r <= 9; ++r) {
            ok = ok && t.ball(NodeId{17}, r).size() == torus_ball_size(r);
            auto fast = t.ball(NodeId{17}, r);
            std::vector<std::uint32_t> ids;
            for (const NodeId v : fast) {
                ids.push_back(v.value);
            }
            std::sort(ids.begin(), ids.end());
            ok = ok && ids == ball(21, Wrap::torus, 17, r);
        }
        rep.check("topology: torus ball size 2r(r+1)+1 and ball membership", ok);
    }
    {
        bool ok = true;
        for (const double gamma : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            const PopularityProfile p(100, gamma);
            double sum = 0.0;
            for (const double x : p.probs()) {
                sum += x;
            }
            const Bracket b = zipf_normalizer_bounds(gamma, 100);
            ok = ok && std::abs(sum - 1.0) < 1e-12 && p.normalizer() >= b.lower - 1e-12 &&
                 p.normalizer() <= b.upper + 1e-12;
        }
        rep.check("popularity: probabilities sum to one, normalizer within integral bounds", ok);
    }
    {
        const std::uint64_t counted = count_full_rank_binary(3);
        const double expected = full_rank_probability(2, 3) * 512.0;
        rep.check("fieldcode: enumerated full-rank 3x3 binary matrices match the product formula",
                  std::abs(static_cast<double>(counted) - expected) < 1e-9,
                  std::to_string(counted) + " of 512");
    }
    {
        const PrimeField field(65537);
        bool ok = true;
        for (int trial = 0; trial < 100 && ok; ++trial) {
            const auto len = static_cast<std::size_t>(1 + uniform_below(rng, 200));
            const auto ell = static_cast<std::uint32_t>(1 + uniform_below(rng, 8));
            std::vector<std::uint8_t> bytes(len);
            for (auto& b : bytes) {
                b = static_cast<std::uint8_t>(rng());
            }
            const ChunkedFile cf = split_file(bytes, ell, field);
            std::vector<CodedChunk> chunks;
            for (std::uint32_t i = 0; i < ell + 2; ++i) {
                chunks.push_back(encode_chunk(cf, field, rng));
            }
            ok = decode(chunks, ell, len, field) == bytes;
        }
        rep.check("fieldcode: decode round-trips 100 random payloads", ok);
    }
    {
        bool ok = true;
        for (int trial = 0; trial < 200 && ok; ++trial) {
            const std::uint32_t width = trial % 2 == 0 ? 5 : 7;
            const Topology t(width, Wrap::torus);
            const PopularityProfile p(10, 0.0);
            const CacheState cache = place_uncoded(t, p, 1, rng);
            const RequestTrace trace = generate_trace(t.size(), 10, p, rng);
            const DeliveryLedger ledger = deliver_nearest_replica(t, cache, trace, rng);
            std::size_t next = 0;
            for (std::uint32_t i = 0; i < trace.size(); ++i) {
                const Request& r = trace.requests[i];
                const auto want = nearest_replica_distance(width, Wrap::torus, cache, r.origin.value, r.file.value);
                if (next < ledger.records.size() && ledger.records[next].request_index == i) {
                    ok = ok && want && *want == ledger.records[next].distance &&
                         cache.holds(ledger.records[next].server, r.file);
                    ++next;
                } else {
                    ok = ok && !want;
                }
            }
        }
        rep.check("delivery: nearest-replica distance equals the BFS oracle on 200 instances", ok);
    }
    {
        bool ok = true;
        const PrimeField field(65537);
        for (int trial = 0; trial < 50 && ok; ++trial) {
            const std::uint32_t width = 3 + static_cast<std::uint32_t>(uniform_below(rng, 10));
            const std::uint32_t ell = 1 + static_cast<std::uint32_t>(uniform_below(rng, 6));
            const Topology t(width, trial % 3 == 0 ? Wrap::grid : Wrap::torus);
            const PopularityProfile p(8, 0.5);
            const CacheState cache = place_coded(t, p, 2, ell, field, rng);
            const RequestTrace trace = generate_trace(t.size(), 20, p, rng);
            const DeliveryLedger ledger = deliver_coded(t, cache, trace, field, rng);
            std::vector<std::vector<std::uint32_t>> got(trace.size());
            for (const MessageRecord& m : ledger.records) {
                if (!m.rank_repair) {
                    got[m.request_index].push_back(m.distance);
                }
            }
            for (std::uint32_t i = 0; i < trace.size() && ok; ++i) {
                const Request& r = trace.requests[i];
                auto all = sorted_chunk_distances(width, t.wrap(), cache, r.origin.value, r.file.value);
                all.resize(std::min<std::size_t>(all.size(), ell));
                std::sort(got[i].begin(), got[i].end());
                ok = got[i] == all;
            }
        }
        rep.check("delivery: coded chunk distances equal a full-sort scan on 50 instances", ok);
    }
    {
        const Topology t(15, Wrap::torus);
        const PopularityProfile p(20, 0.8);
        const PrimeField field(65537);
        const CacheState cache = place_coded(t, p, 2, 4, field, rng);
        const RequestTrace trace = generate_trace(t.size(), 225, p, rng);
        const DeliveryLedger ledger = deliver_coded(t, cache, trace, field, rng);
        const MetricsReport m = compute_metrics(ledger, t.size());
        double total = 0.0;
        for (const double x : m.load_vector) {
            total += x;
        }
        const double expected = static_cast<double>(ledger.records.size()) / ledger.units_per_file;
        rep.check("metrics: total load equals delivered file units", std::abs(total - expected) < 1e-9);
    }
    return rep.ok;
}

} // namespace cachesim::oracle
