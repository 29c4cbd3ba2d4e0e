#pragma once

// Discrete-event Monte Carlo engine: request arrivals, content discovery,
// TTL cache dynamics, and the measurements that cross-check the analytic
// modules (occupancy, hops, server load, traffic).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "icnlab/content.hpp"
#include "icnlab/hopcount.hpp"
#include "icnlab/rng.hpp"
#include "icnlab/topology.hpp"

namespace icnlab {

enum class DiscoveryMode { pathwise, expanding_ring };
enum class CachingMode { edge_only, on_path };
enum class SimMode { iid_snapshot, ttl_dynamics };

struct TopologySpec {
    enum class Kind { grid, random };
    Kind kind = Kind::grid;
    int levels = 10;  // grid
    int n = 1000;     // random
    double r = 0.1;   // random
    double connectivity_c = 1.0;
};

struct SimConfig {
    TopologySpec topology;
    ContentCatalog catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    DiscoveryMode discovery = DiscoveryMode::pathwise;
    CachingMode caching = CachingMode::edge_only;
    SimMode mode = SimMode::ttl_dynamics;

    // iid snapshot mode
    std::optional<OccupancyProfile> snapshot_profile;
    long snapshot_samples = 100000;

    // ttl dynamics mode
    double horizon = 1000.0;
    double warmup = 0.0;
    std::vector<double> ttl_per_level;  // optional per-level override for fixed timers

    std::uint64_t seed = 1;
    std::uint64_t max_events = 200'000'000;
    int batches = 20;
    bool collect_trace = false;
    std::size_t trace_limit = 1'000'000;
    bool keep_interval_accounting = false;
};

struct Estimate {
    double mean = 0.0;
    double stderr = 0.0;
};

struct TraceRecord {
    double time = 0.0;
    int requester = -1;
    int content = 0;
    int serving_level = 0;  // grid: holder level (0 = server); random: holder cell distance
    int hops = 0;
    int holder_node = -1;   // -1 when the server serves
};

struct SimResult {
    int levels = 0;
    std::size_t contents = 1;
    std::vector<double> level_node_counts;         // nodes per level index
    std::vector<std::vector<Estimate>> occupancy;  // [content][level]
    std::vector<Estimate> hops_per_content;
    std::vector<double> requests_per_content;      // measured request counts
    Estimate mean_hops;
    double server_served_fraction = 0.0;
    std::vector<double> server_fraction_per_content;
    double server_link_crossing_rate = 0.0;  // per server-adjacent link
    Estimate external_request_rate;          // requests per second leaving their requester
    Estimate traffic;                        // bits x hops per second
    std::uint64_t request_events = 0;
    std::uint64_t expiry_events = 0;
    std::uint64_t service_events = 0;
    double sim_span = 0.0;
    double wall_seconds = 0.0;
    bool truncated = false;
    std::vector<TraceRecord> trace;
    // per (node, content) interval sums over the measurement window
    std::vector<double> available_time;
    std::vector<double> absent_time;
};

struct DiscoverOutcome {
    int hops = 0;
    int serving_level = 0;
    int serving_node = -1;           // -1 = server
    std::vector<int> insert_nodes;   // requester plus relays, for on-path caching
};

// ---------------------------------------------------------------------------
// Discovery over an arbitrary holder predicate. These run both on drawn
// snapshots and on live TTL state.

/// Walk a sampled shortest path toward the server; the first holder met
/// serves (the requester itself counts at hop zero, the server at the end).
template <class Holds>
DiscoverOutcome discover_pathwise(const GridTopology& topo, GridCoord requester,
                                  Holds&& holds, Rng& rng, bool want_path = false) {
    DiscoverOutcome out;
    if (holds(requester)) {
        out.hops = 0;
        out.serving_level = requester.level();
        out.serving_node = topo.node_index(requester);
        return out;
    }
    if (want_path) out.insert_nodes.push_back(topo.node_index(requester));
    GridCoord cur = requester;
    int hops = 0;
    while (!cur.is_server()) {
        cur = topo.sample_descent_step(cur, rng);
        ++hops;
        if (cur.is_server()) {
            out.hops = hops;
            out.serving_level = 0;
            out.serving_node = -1;
            return out;
        }
        if (holds(cur)) {
            out.hops = hops;
            out.serving_level = cur.level();
            out.serving_node = topo.node_index(cur);
            return out;
        }
        if (want_path) out.insert_nodes.push_back(topo.node_index(cur));
    }
    out.hops = hops;
    out.serving_level = 0;
    return out;
}

/// Breadth-first ring expansion: the nearest holder serves, ties broken
/// uniformly at random. The server is discoverable at its own location.
template <class Holds>
DiscoverOutcome discover_ring(const GridTopology& topo, GridCoord requester, Holds&& holds,
                              Rng& rng) {
    DiscoverOutcome out;
    const int server_dist = requester.level();
    std::vector<GridCoord> found;
    for (int d = 0; d <= server_dist; ++d) {
        found.clear();
        for (const GridCoord& c : topo.ring(requester, d))
            if (holds(c)) found.push_back(c);
        const bool server_here = (d == server_dist);
        if (found.empty() && !server_here) continue;
        const std::size_t total = found.size() + (server_here ? 1 : 0);
        const std::size_t pick = total == 1 ? 0 : rng.index(total);
        out.hops = d;
        if (pick < found.size()) {
            out.serving_level = found[pick].level();
            out.serving_node = topo.node_index(found[pick]);
        } else {
            out.serving_level = 0;
            out.serving_node = -1;
        }
        return out;
    }
    out.hops = server_dist;  // unreachable: the server loop always returns
    return out;
}

/// Uniformly sampled monotone lattice path between two nodes that stays
/// inside the diamond (moves that would leave it are never offered).
inline std::vector<GridCoord> sample_monotone_path(const GridTopology& topo, GridCoord from,
                                                   GridCoord to, Rng& rng) {
    std::vector<GridCoord> path{from};
    GridCoord cur = from;
    while (!(cur == to)) {
        GridCoord opts[2];
        int count = 0;
        if (cur.x != to.x) {
            GridCoord c{cur.x + (to.x > cur.x ? 1 : -1), cur.y};
            if (topo.in_region(c)) opts[count++] = c;
        }
        if (cur.y != to.y) {
            GridCoord c{cur.x, cur.y + (to.y > cur.y ? 1 : -1)};
            if (topo.in_region(c)) opts[count++] = c;
        }
        cur = (count == 1) ? opts[0] : opts[rng.index(2)];
        path.push_back(cur);
    }
    return path;
}

// ---------------------------------------------------------------------------
// Topology adapters: a common node-indexed view for the engines.

class GridAdapter {
public:
    // level 0 is the server row, not a cache level
    static constexpr bool kLevelZeroIsServer = true;

    explicit GridAdapter(const TopologySpec& spec) : topo_(spec.levels) {}

    const GridTopology& topo() const { return topo_; }
    int node_count() const { return topo_.node_count(); }
    int levels() const { return topo_.levels(); }
    int level_of(int v) const { return topo_.node_at(v).level(); }

    template <class Holds>
    DiscoverOutcome discover(int requester, DiscoveryMode mode, CachingMode caching,
                             Holds&& holds, Rng& rng) const {
        const GridCoord rq = topo_.node_at(requester);
        auto holds_coord = [&](GridCoord c) { return holds(topo_.node_index(c)); };
        if (mode == DiscoveryMode::pathwise) {
            return discover_pathwise(topo_, rq, holds_coord, rng,
                                     caching == CachingMode::on_path);
        }
        DiscoverOutcome out = discover_ring(topo_, rq, holds_coord, rng);
        if (caching == CachingMode::on_path && out.hops > 0) {
            const GridCoord holder =
                out.serving_node < 0 ? GridCoord{0, 0} : topo_.node_at(out.serving_node);
            for (const GridCoord& c : sample_monotone_path(topo_, rq, holder, rng))
                if (!(c == holder) && !c.is_server())
                    out.insert_nodes.push_back(topo_.node_index(c));
        }
        return out;
    }

private:
    GridTopology topo_;
};

class RandomAdapter {
public:
    // distance 0 means the server cell's resident caches
    static constexpr bool kLevelZeroIsServer = false;

    RandomAdapter(const TopologySpec& spec, std::uint64_t placement_seed)
        : topo_(spec.n, spec.r, placement_seed, spec.connectivity_c) {}

    const RandomTopology& topo() const { return topo_; }
    int node_count() const { return topo_.node_count(); }
    int level_of(int v) const { return topo_.distance_to_server(topo_.cell_of_node(v)); }

    int levels() const {
        const int cps = topo_.cells_per_side();
        const CellCoord s = topo_.server_cell();
        const int dx = std::max(s.cx, cps - 1 - s.cx);
        const int dy = std::max(s.cy, cps - 1 - s.cy);
        return dx + dy;
    }

    /// Path-wise over the cell lattice: broadcast covers each visited cell,
    /// hops count the serving cell's ring distance; one uniform member per
    /// intermediate cell relays the request and caches on the way back.
    template <class Holds>
    DiscoverOutcome discover(int requester, DiscoveryMode mode, CachingMode caching,
                             Holds&& holds, Rng& rng) const {
        if (mode != DiscoveryMode::pathwise)
            throw std::invalid_argument("expanding-ring discovery is grid-only");
        DiscoverOutcome out;
        if (holds(requester)) {
            out.serving_node = requester;
            return out;
        }
        const bool want_path = caching == CachingMode::on_path;
        if (want_path) out.insert_nodes.push_back(requester);

        CellCoord cell = topo_.cell_of_node(requester);
        int dist = 0;
        while (true) {
            int holder = -1, seen = 0;
            for (int member : topo_.members(cell)) {
                if (member == requester || !holds(member)) continue;
                ++seen;
                if (seen == 1 || rng.index(static_cast<std::size_t>(seen)) == 0)
                    holder = member;
            }
            if (holder >= 0) {
                out.hops = dist;
                out.serving_level = topo_.distance_to_server(cell);
                out.serving_node = holder;
                return out;
            }
            if (cell == topo_.server_cell()) {
                out.hops = dist;
                out.serving_level = 0;
                out.serving_node = -1;
                return out;
            }
            cell = topo_.sample_descent_step(cell, rng);
            ++dist;
            if (!(cell == topo_.server_cell()) && want_path) {
                const auto& members = topo_.members(cell);
                if (!members.empty())
                    out.insert_nodes.push_back(members[rng.index(members.size())]);
            }
        }
    }

private:
    RandomTopology topo_;
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> popularity_cdf(const ContentCatalog& catalog) {
    std::vector<double> cdf;
    cdf.reserve(catalog.size());
    double acc = 0.0;
    for (const auto& it : catalog.items()) {
        acc += it.popularity;
        cdf.push_back(acc);
    }
    cdf.back() = 1.0;
    return cdf;
}

inline std::size_t draw_content(const std::vector<double>& cdf, Rng& rng) {
    const double u = rng.uniform();
    return static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

/// Mean and batch-means standard error from per-batch sums and counts.
inline Estimate batch_estimate(std::span<const double> sums, std::span<const double> counts) {
    double total = 0.0, count = 0.0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        total += sums[b];
        count += counts[b];
    }
    Estimate e;
    if (count == 0.0) return e;
    e.mean = total / count;
    std::vector<double> means;
    for (std::size_t b = 0; b < sums.size(); ++b)
        if (counts[b] > 0.0) means.push_back(sums[b] / counts[b]);
    if (means.size() >= 2) {
        double m = 0.0;
        for (double v : means) m += v;
        m /= static_cast<double>(means.size());
        double var = 0.0;
        for (double v : means) var += (v - m) * (v - m);
        var /= static_cast<double>(means.size() - 1);
        e.stderr = std::sqrt(var / static_cast<double>(means.size()));
    }
    return e;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Snapshot mode: every cache is drawn independently from the occupancy
// profile, a uniform requester issues one request, and discovery runs on the
// frozen state. Estimates are unbiased for the level-wise hop expectation.

template <class Adapter>
SimResult run_occupancy_snapshot_with(const Adapter& net, const SimConfig& cfg) {
    if (!cfg.snapshot_profile)
        throw std::invalid_argument("snapshot mode needs an occupancy profile");
    const OccupancyProfile& profile = *cfg.snapshot_profile;
    if (profile.contents() != cfg.catalog.size())
        throw std::invalid_argument("profile and catalog must agree on content count");
    const long samples = cfg.snapshot_samples;
    if (samples <= 0) throw std::invalid_argument("need a positive sample count");

    const auto t0 = std::chrono::steady_clock::now();
    const int node_count = net.node_count();
    const int levels = net.levels();
    const std::size_t m = cfg.catalog.size();
    const int batches = std::max(1, cfg.batches);

    std::vector<int> level_of(static_cast<std::size_t>(node_count));
    std::vector<double> level_nodes(static_cast<std::size_t>(levels) + 1, 0.0);
    for (int v = 0; v < node_count; ++v) {
        level_of[static_cast<std::size_t>(v)] = net.level_of(v);
        level_nodes[static_cast<std::size_t>(net.level_of(v))] += 1.0;
    }

    Rng rng(cfg.seed);
    const auto cdf = detail::popularity_cdf(cfg.catalog);
    std::vector<std::uint8_t> holding(static_cast<std::size_t>(node_count));

    std::vector<std::vector<double>> hop_sums(m, std::vector<double>(batches, 0.0));
    std::vector<std::vector<double>> hop_counts(m, std::vector<double>(batches, 0.0));
    std::vector<double> all_sums(batches, 0.0), all_counts(batches, 0.0);
    std::vector<std::vector<double>> occ_hits(m, std::vector<double>((levels + 1), 0.0));
    std::vector<double> occ_draws(m, 0.0);
    std::vector<double> server_hits(m, 0.0), content_samples(m, 0.0);
    std::vector<double> nonlocal(m, 0.0);

    SimResult res;
    res.levels = levels;
    res.contents = m;

    for (long s = 0; s < samples; ++s) {
        const int batch = static_cast<int>((s * static_cast<long>(batches)) / samples);
        const std::size_t k = detail::draw_content(cdf, rng);
        const int requester = static_cast<int>(rng.index(static_cast<std::size_t>(node_count)));
        for (int v = 0; v < node_count; ++v) {
            const int lvl = level_of[static_cast<std::size_t>(v)];
            const double p =
                Adapter::kLevelZeroIsServer ? profile.rho(k, lvl) : profile.uniform_rho(k);
            const bool h = rng.bernoulli(p);
            holding[static_cast<std::size_t>(v)] = h;
            if (h) occ_hits[k][static_cast<std::size_t>(lvl)] += 1.0;
        }
        occ_draws[k] += 1.0;

        auto holds = [&](int v) { return v >= 0 && holding[static_cast<std::size_t>(v)] != 0; };
        const DiscoverOutcome out =
            net.discover(requester, cfg.discovery, CachingMode::edge_only, holds, rng);

        hop_sums[k][batch] += out.hops;
        hop_counts[k][batch] += 1.0;
        all_sums[batch] += out.hops;
        all_counts[batch] += 1.0;
        content_samples[k] += 1.0;
        if (out.serving_node < 0) server_hits[k] += 1.0;
        if (out.serving_node != requester) nonlocal[k] += 1.0;
        if (cfg.collect_trace && res.trace.size() < cfg.trace_limit)
            res.trace.push_back({static_cast<double>(s), requester, static_cast<int>(k),
                                 out.serving_level, out.hops, out.serving_node});
    }

    res.level_node_counts = level_nodes;
    res.hops_per_content.resize(m);
    res.requests_per_content = content_samples;
    res.server_fraction_per_content.assign(m, 0.0);
    double server_total = 0.0;
    double crossing = 0.0, ext_rate = 0.0, traffic = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        res.hops_per_content[k] = detail::batch_estimate(hop_sums[k], hop_counts[k]);
        if (content_samples[k] > 0.0)
            res.server_fraction_per_content[k] = server_hits[k] / content_samples[k];
        server_total += server_hits[k];
        const double beta = cfg.catalog.item(k).request_rate;
        crossing += node_count * beta * res.server_fraction_per_content[k] / 4.0;
        if (content_samples[k] > 0.0) {
            ext_rate += node_count * beta * (nonlocal[k] / content_samples[k]);
            traffic += node_count * beta * cfg.catalog.item(k).size_bits *
                       res.hops_per_content[k].mean;
        }
    }
    res.mean_hops = detail::batch_estimate(all_sums, all_counts);
    res.server_served_fraction = server_total / static_cast<double>(samples);
    res.server_link_crossing_rate = crossing;
    res.external_request_rate = {ext_rate, 0.0};
    res.traffic = {traffic, 0.0};

    res.occupancy.assign(m, std::vector<Estimate>(static_cast<std::size_t>(levels) + 1));
    for (std::size_t k = 0; k < m; ++k) {
        for (int j = 0; j <= levels; ++j) {
            const double nodes_here = level_nodes[static_cast<std::size_t>(j)];
            if (occ_draws[k] > 0.0 && nodes_here > 0.0)
                res.occupancy[k][static_cast<std::size_t>(j)].mean =
                    occ_hits[k][static_cast<std::size_t>(j)] / (occ_draws[k] * nodes_here);
            else if (j == 0)
                res.occupancy[k][0] = {1.0, 0.0};  // grid server row
        }
    }

    res.request_events = static_cast<std::uint64_t>(samples);
    res.service_events = static_cast<std::uint64_t>(samples);
    res.sim_span = static_cast<double>(samples);
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// ---------------------------------------------------------------------------
// TTL dynamics: per-node per-content Poisson requests, TTL expiries, optional
// refresh-on-hit, edge or on-path insertion, instantaneous downloads.

template <class Adapter>
SimResult run_ttl_simulation_with(const Adapter& net, const SimConfig& cfg) {
    if (!(cfg.horizon > cfg.warmup) || cfg.warmup < 0.0)
        throw std::invalid_argument("need horizon > warmup >= 0");
    const auto t0 = std::chrono::steady_clock::now();

    const int node_count = net.node_count();
    const int levels = net.levels();
    const std::size_t m = cfg.catalog.size();
    const int batches = std::max(1, cfg.batches);
    const double span = cfg.horizon - cfg.warmup;
    const double window = span / batches;

    if (!cfg.ttl_per_level.empty() &&
        cfg.ttl_per_level.size() != static_cast<std::size_t>(levels))
        throw std::invalid_argument("per-level ttl override must have one entry per level");

    std::vector<int> level_of(static_cast<std::size_t>(node_count));
    std::vector<double> level_nodes(static_cast<std::size_t>(levels) + 1, 0.0);
    for (int v = 0; v < node_count; ++v) {
        level_of[static_cast<std::size_t>(v)] = net.level_of(v);
        level_nodes[static_cast<std::size_t>(net.level_of(v))] += 1.0;
    }

    auto slot = [m](int v, std::size_t k) { return static_cast<std::size_t>(v) * m + k; };
    const std::size_t slots = static_cast<std::size_t>(node_count) * m;
    std::vector<std::uint8_t> present(slots, 0);
    std::vector<std::uint64_t> expiry_gen(slots, 0);
    std::vector<double> since(slots, 0.0);  // time of the last presence transition
    std::vector<double> avail(slots, 0.0), absent(slots, 0.0);

    // occupancy window accumulators [content][level][batch]
    std::vector<std::vector<std::vector<double>>> occ_window(
        m, std::vector<std::vector<double>>(static_cast<std::size_t>(levels) + 1,
                                            std::vector<double>(batches, 0.0)));

    // Clip an interval to the measurement window, crediting the per-slot sum
    // and spreading it over the batch windows it overlaps. Roundoff at the
    // far end is absorbed into the last window.
    auto credit = [&](int v, std::size_t k, double a, double b, bool was_present) {
        double lo = std::max(a, cfg.warmup);
        const double hi = std::min(b, cfg.horizon);
        if (hi <= lo) return;
        (was_present ? avail : absent)[slot(v, k)] += hi - lo;
        if (!was_present) return;
        auto& row = occ_window[k][static_cast<std::size_t>(level_of[static_cast<std::size_t>(v)])];
        int w = std::min(batches - 1, static_cast<int>((lo - cfg.warmup) / window));
        while (lo < hi) {
            const bool last = w >= batches - 1;
            const double wend = last ? hi : cfg.warmup + window * (w + 1);
            const double seg = std::min(hi, wend) - lo;
            if (seg > 0.0) row[static_cast<std::size_t>(w)] += seg;
            if (last) break;
            lo = wend;
            ++w;
        }
    };

    struct Event {
        double t;
        std::uint64_t seq;
        enum : std::uint8_t { request, expiry } kind;
        int node;
        std::uint16_t content;
        std::uint64_t gen;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.t > b.t || (a.t == b.t && a.seq > b.seq);
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> queue;
    std::uint64_t seq = 0;

    Rng rng(cfg.seed);

    auto level_ttl = [&](const TtlSpec& ttl, int level) {
        if (!cfg.ttl_per_level.empty() && level >= 1)
            return cfg.ttl_per_level[static_cast<std::size_t>(level - 1)];
        return ttl.duration;
    };

    auto arm_timer = [&](int v, std::size_t k, double now) {
        const TtlSpec& ttl = cfg.catalog.item(k).ttl;
        const std::uint64_t gen = ++expiry_gen[slot(v, k)];
        double expires;
        if (ttl.law == TtlLaw::exponential) {
            if (ttl.eta == 0.0) return;  // never expires
            expires = now + rng.exponential(ttl.eta);
        } else {
            expires = now + level_ttl(ttl, level_of[static_cast<std::size_t>(v)]);
        }
        queue.push({expires, ++seq, Event::expiry, v, static_cast<std::uint16_t>(k), gen});
    };

    auto insert = [&](int v, std::size_t k, double now) {
        if (!present[slot(v, k)]) {
            credit(v, k, since[slot(v, k)], now, false);
            present[slot(v, k)] = 1;
            since[slot(v, k)] = now;
        }
        arm_timer(v, k, now);  // a receipt always (re)arms the timer
    };

    for (int v = 0; v < node_count; ++v)
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = cfg.catalog.item(k).request_rate;
            if (beta > 0.0)
                queue.push({rng.exponential(beta), ++seq, Event::request, v,
                            static_cast<std::uint16_t>(k), 0});
        }

    SimResult res;
    res.levels = levels;
    res.contents = m;

    std::vector<std::vector<double>> hop_sums(m, std::vector<double>(batches, 0.0));
    std::vector<std::vector<double>> hop_counts(m, std::vector<double>(batches, 0.0));
    std::vector<double> all_sums(batches, 0.0), all_counts(batches, 0.0);
    std::vector<double> ext_window(batches, 0.0), traffic_window(batches, 0.0);
    std::vector<double> server_hits(m, 0.0), content_requests(m, 0.0);
    double server_total = 0.0, measured_requests = 0.0;

    std::uint64_t events = 0;
    double now = 0.0;
    bool truncated = false;

    while (!queue.empty()) {
        const Event ev = queue.top();
        if (ev.t > cfg.horizon) break;
        queue.pop();
        if (++events > cfg.max_events) {
            truncated = true;
            break;
        }
        now = ev.t;
        const std::size_t k = ev.content;
        const int v = ev.node;

        if (ev.kind == Event::expiry) {
            ++res.expiry_events;
            if (ev.gen != expiry_gen[slot(v, k)] || !present[slot(v, k)]) continue;
            credit(v, k, since[slot(v, k)], now, true);
            present[slot(v, k)] = 0;
            since[slot(v, k)] = now;
            continue;
        }

        ++res.request_events;
        const double beta = cfg.catalog.item(k).request_rate;
        queue.push({now + rng.exponential(beta), ++seq, Event::request, v,
                    static_cast<std::uint16_t>(k), 0});

        const bool in_window = now >= cfg.warmup;
        const int batch =
            in_window ? std::min(batches - 1, static_cast<int>((now - cfg.warmup) / window))
                      : 0;

        DiscoverOutcome out;
        if (present[slot(v, k)]) {
            out.serving_node = v;
            out.serving_level = level_of[static_cast<std::size_t>(v)];
            const TtlSpec& ttl = cfg.catalog.item(k).ttl;
            if (ttl.law == TtlLaw::fixed_duration && ttl.refresh_on_hit) arm_timer(v, k, now);
        } else {
            auto holds = [&](int u) { return u >= 0 && present[slot(u, k)] != 0; };
            out = net.discover(v, cfg.discovery, cfg.caching, holds, rng);
            if (out.serving_node >= 0) {
                const TtlSpec& ttl = cfg.catalog.item(k).ttl;
                if (ttl.law == TtlLaw::fixed_duration && ttl.refresh_on_hit)
                    arm_timer(out.serving_node, k, now);
            }
            if (cfg.caching == CachingMode::on_path) {
                for (int u : out.insert_nodes) insert(u, k, now);
            } else {
                insert(v, k, now);
            }
        }

        ++res.service_events;
        if (in_window) {
            measured_requests += 1.0;
            content_requests[k] += 1.0;
            hop_sums[k][batch] += out.hops;
            hop_counts[k][batch] += 1.0;
            all_sums[batch] += out.hops;
            all_counts[batch] += 1.0;
            if (out.serving_node < 0) {
                server_hits[k] += 1.0;
                server_total += 1.0;
            }
            if (out.serving_node != v) ext_window[batch] += 1.0;
            traffic_window[batch] += cfg.catalog.item(k).size_bits * out.hops;
            if (cfg.collect_trace && res.trace.size() < cfg.trace_limit)
                res.trace.push_back({now, v, static_cast<int>(k), out.serving_level, out.hops,
                                     out.serving_node});
        }
    }

    const double stop = truncated ? now : cfg.horizon;
    for (int v = 0; v < node_count; ++v)
        for (std::size_t k = 0; k < m; ++k)
            credit(v, k, since[slot(v, k)], stop, present[slot(v, k)] != 0);

    const double measured_span = std::max(0.0, stop - cfg.warmup);
    res.sim_span = measured_span;
    res.truncated = truncated;

    res.level_node_counts = level_nodes;
    res.hops_per_content.resize(m);
    res.requests_per_content = content_requests;
    for (std::size_t k = 0; k < m; ++k)
        res.hops_per_content[k] = detail::batch_estimate(hop_sums[k], hop_counts[k]);
    res.mean_hops = detail::batch_estimate(all_sums, all_counts);

    res.server_fraction_per_content.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        if (content_requests[k] > 0.0)
            res.server_fraction_per_content[k] = server_hits[k] / content_requests[k];
    res.server_served_fraction =
        measured_requests > 0.0 ? server_total / measured_requests : 0.0;
    res.server_link_crossing_rate =
        measured_span > 0.0 ? server_total / measured_span / 4.0 : 0.0;

    std::vector<double> window_lens(batches, window);
    if (truncated)
        for (int b = 0; b < batches; ++b) {
            const double wlo = cfg.warmup + b * window;
            window_lens[static_cast<std::size_t>(b)] =
                std::clamp(stop - wlo, 0.0, window);
        }
    res.external_request_rate = detail::batch_estimate(ext_window, window_lens);
    res.traffic = detail::batch_estimate(traffic_window, window_lens);

    res.occupancy.assign(m, std::vector<Estimate>(static_cast<std::size_t>(levels) + 1));
    for (std::size_t k = 0; k < m; ++k) {
        for (int j = 0; j <= levels; ++j) {
            const double nodes_here = level_nodes[static_cast<std::size_t>(j)];
            auto& cell = res.occupancy[k][static_cast<std::size_t>(j)];
            if (nodes_here == 0.0) {
                if (j == 0) cell = {1.0, 0.0};  // grid server row
                continue;
            }
            std::vector<double> sums = occ_window[k][static_cast<std::size_t>(j)];
            std::vector<double> denoms(static_cast<std::size_t>(batches));
            for (int b = 0; b < batches; ++b)
                denoms[static_cast<std::size_t>(b)] =
                    nodes_here * window_lens[static_cast<std::size_t>(b)];
            cell = detail::batch_estimate(sums, denoms);
        }
    }

    if (cfg.keep_interval_accounting) {
        res.available_time = std::move(avail);
        res.absent_time = std::move(absent);
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// ---------------------------------------------------------------------------

inline SimResult run_occupancy_snapshot(const SimConfig& cfg) {
    if (cfg.topology.kind == TopologySpec::Kind::grid)
        return run_occupancy_snapshot_with(GridAdapter(cfg.topology), cfg);
    if (!cfg.snapshot_profile || !cfg.snapshot_profile->is_uniform())
        throw std::invalid_argument("random-network snapshots need a uniform profile");
    return run_occupancy_snapshot_with(
        RandomAdapter(cfg.topology, derive_seed(cfg.seed, 0x706c6163)), cfg);
}

inline SimResult run_ttl_simulation(const SimConfig& cfg) {
    if (cfg.topology.kind == TopologySpec::Kind::grid)
        return run_ttl_simulation_with(GridAdapter(cfg.topology), cfg);
    return run_ttl_simulation_with(
        RandomAdapter(cfg.topology, derive_seed(cfg.seed, 0x706c6163)), cfg);
}

inline SimResult run_simulation(const SimConfig& cfg) {
    return cfg.mode == SimMode::iid_snapshot ? run_occupancy_snapshot(cfg)
                                             : run_ttl_simulation(cfg);
}

/// Download rate crossing one server-adjacent link.
inline double measure_server_load(const SimResult& result) {
    return result.server_link_crossing_rate;
}

/// Paired comparison on identical snapshots: both discovery modes run on the
/// same drawn state, so per-sample dominance of the nearer copy is exact.
struct PairedSnapshotResult {
    Estimate path_hops;
    Estimate ring_hops;
    bool ring_le_path_everywhere = true;
    long samples = 0;
};

inline PairedSnapshotResult run_paired_snapshot(const SimConfig& cfg) {
    if (cfg.topology.kind != TopologySpec::Kind::grid)
        throw std::invalid_argument("paired snapshots are grid-only");
    if (!cfg.snapshot_profile)
        throw std::invalid_argument("snapshot mode needs an occupancy profile");
    const OccupancyProfile& profile = *cfg.snapshot_profile;
    const GridAdapter net(cfg.topology);
    const int node_count = net.node_count();
    const int batches = std::max(1, cfg.batches);

    Rng rng(cfg.seed);
    const auto cdf = detail::popularity_cdf(cfg.catalog);
    std::vector<std::uint8_t> holding(static_cast<std::size_t>(node_count));
    std::vector<double> path_sums(batches, 0.0), ring_sums(batches, 0.0),
        counts(batches, 0.0);

    PairedSnapshotResult out;
    out.samples = cfg.snapshot_samples;
    for (long s = 0; s < cfg.snapshot_samples; ++s) {
        const int batch =
            static_cast<int>((s * static_cast<long>(batches)) / cfg.snapshot_samples);
        const std::size_t k = detail::draw_content(cdf, rng);
        const int requester = static_cast<int>(rng.index(static_cast<std::size_t>(node_count)));
        for (int v = 0; v < node_count; ++v)
            holding[static_cast<std::size_t>(v)] =
                rng.bernoulli(profile.rho(k, net.level_of(v)));
        auto holds = [&](int v) { return v >= 0 && holding[static_cast<std::size_t>(v)] != 0; };
        const auto path = net.discover(requester, DiscoveryMode::pathwise,
                                       CachingMode::edge_only, holds, rng);
        const auto ring = net.discover(requester, DiscoveryMode::expanding_ring,
                                       CachingMode::edge_only, holds, rng);
        if (ring.hops > path.hops) out.ring_le_path_everywhere = false;
        path_sums[static_cast<std::size_t>(batch)] += path.hops;
        ring_sums[static_cast<std::size_t>(batch)] += ring.hops;
        counts[static_cast<std::size_t>(batch)] += 1.0;
    }
    out.path_hops = detail::batch_estimate(path_sums, counts);
    out.ring_hops = detail::batch_estimate(ring_sums, counts);
    return out;
}

}  // namespace icnlab
