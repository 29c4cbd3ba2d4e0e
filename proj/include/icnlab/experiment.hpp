#pragma once

// Experiment orchestration: JSON config ingestion, the analyze / simulate /
// sweep / scaling commands, figure presets, and the replica worker pool.

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "icnlab/capacity.hpp"
#include "icnlab/content.hpp"
#include "icnlab/hopcount.hpp"
#include "icnlab/report.hpp"
#include "icnlab/scaling.hpp"
#include "icnlab/simulator.hpp"
#include "icnlab/topology.hpp"

namespace icnlab {

/// Configuration problem tied to a named field, for machine-parseable
/// diagnostics at the CLI border.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// ---------------------------------------------------------------------------

/// Run f(0..count-1) on a bounded pool; results must be written by index so
/// the merge stays order-independent. The first worker exception is rethrown.
template <class F>
void parallel_for_indexed(std::size_t count, unsigned workers, F&& f) {
    workers = std::max(1u, workers);
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    pool.reserve(spawn);
    for (unsigned w = 0; w < spawn; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline unsigned default_worker_count() {
    if (const char* env = std::getenv("ICNLAB_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

// ---------------------------------------------------------------------------
// JSON parsing helpers

namespace cfg {

using nlohmann::json;

inline const json& require(const json& j, const std::string& field, const std::string& path) {
    if (!j.contains(field)) throw ConfigError(path + field, "missing required field");
    return j[field];
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
    std::vector<double> out;
    if (j.is_number()) {
        out.push_back(j.get<double>());
    } else if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError(path, "expected numbers");
            out.push_back(v.get<double>());
        }
    } else {
        throw ConfigError(path, "expected a number or an array of numbers");
    }
    if (out.empty()) throw ConfigError(path, "empty grid");
    return out;
}

inline std::vector<int> int_list(const json& j, const std::string& path) {
    std::vector<int> out;
    for (double v : number_list(j, path)) out.push_back(static_cast<int>(v));
    return out;
}

inline Scenario parse_scenario(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a scenario name");
    const std::string s = j.get<std::string>();
    if (s == "grid-path" || s == "I" || s == "i") return Scenario::grid_path;
    if (s == "grid-ring" || s == "II" || s == "ii") return Scenario::grid_ring;
    if (s == "random-path" || s == "III" || s == "iii") return Scenario::random_path;
    throw ConfigError(path, "unknown scenario '" + s + "' (grid-path, grid-ring, random-path)");
}

inline TtlSpec parse_ttl(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected a ttl object");
    const std::string law = require(j, "law", path + ".").get<std::string>();
    if (law == "exponential") {
        TtlSpec ttl = TtlSpec::exponential(number(require(j, "eta", path + "."), path + ".eta"));
        if (ttl.eta < 0.0) throw ConfigError(path + ".eta", "must be nonnegative");
        return ttl;
    }
    if (law == "fixed") {
        const double d = number(require(j, "duration", path + "."), path + ".duration");
        if (!(d > 0.0)) throw ConfigError(path + ".duration", "must be positive");
        bool refresh = false;
        if (j.contains("refresh_on_hit")) refresh = j["refresh_on_hit"].get<bool>();
        return TtlSpec::fixed(d, refresh);
    }
    throw ConfigError(path + ".law", "unknown ttl law '" + law + "' (exponential, fixed)");
}

inline ContentCatalog parse_catalog(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("items"))
        throw ConfigError(path, "expected a catalog object with items");
    const auto& items = j["items"];
    if (!items.is_array() || items.empty())
        throw ConfigError(path + ".items", "expected a non-empty array");
    std::vector<ContentItem> parsed;
    for (std::size_t k = 0; k < items.size(); ++k) {
        const std::string ipath = path + ".items[" + std::to_string(k) + "]";
        const auto& it = items[k];
        ContentItem item;
        item.size_bits = it.contains("size") ? number(it["size"], ipath + ".size") : 1.0;
        item.popularity =
            it.contains("alpha") ? number(it["alpha"], ipath + ".alpha")
                                 : 1.0 / static_cast<double>(items.size());
        item.request_rate = it.contains("beta") ? number(it["beta"], ipath + ".beta") : 1.0;
        item.ttl = parse_ttl(require(it, "ttl", ipath + "."), ipath + ".ttl");
        parsed.push_back(item);
    }
    try {
        return ContentCatalog(std::move(parsed));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
}

}  // namespace cfg

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeCase {
    std::string experiment = "analyze";
    Scenario scenario = Scenario::grid_path;
    std::vector<int> grid_levels;
    std::vector<double> random_n;
    std::optional<double> random_r;  // fixed range; otherwise sqrt(log n / n)
    ContentCatalog catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));

    enum class Occupancy { uniform, edge_exponential, edge_fixed, onpath_fixed };
    Occupancy occupancy = Occupancy::uniform;
    std::vector<double> uniform_rho;      // uniform mode, one per content (or one shared)
    std::vector<double> ttl_per_level;    // onpath mode override
    HopNorm normalization = HopNorm::exact;
    bool emit_level_rows = true;
};

namespace detail {

inline OccupancyProfile analyze_profile(const AnalyzeCase& c, int levels) {
    const std::size_t m = c.catalog.size();
    switch (c.occupancy) {
        case AnalyzeCase::Occupancy::uniform: {
            std::vector<double> rho = c.uniform_rho;
            if (rho.size() == 1 && m > 1) rho.assign(m, rho[0]);
            if (rho.size() != m)
                throw ConfigError("occupancy.rho", "need one value or one per content");
            return OccupancyProfile::uniform(levels, rho);
        }
        case AnalyzeCase::Occupancy::edge_exponential:
            return occupancy_uniform(c.catalog, levels, UniformOccupancyMode::edge_exponential);
        case AnalyzeCase::Occupancy::edge_fixed:
            return occupancy_uniform(c.catalog, levels, UniformOccupancyMode::edge_fixed_ttl);
        case AnalyzeCase::Occupancy::onpath_fixed: {
            std::vector<std::vector<double>> rows;
            for (const auto& item : c.catalog.items()) {
                if (item.ttl.law != TtlLaw::fixed_duration)
                    throw ConfigError("catalog", "onpath-fixed occupancy needs fixed ttl items");
                const auto prof =
                    c.ttl_per_level.empty()
                        ? beta_prime_profile(levels, item.request_rate, item.ttl.duration)
                        : beta_prime_profile(levels, item.request_rate, c.ttl_per_level);
                rows.push_back(prof.rho);
            }
            return OccupancyProfile::per_level(std::move(rows));
        }
    }
    throw std::logic_error("unreachable");
}

inline void fill_rate_columns(MetricRow& row, const ContentItem& item, double n, double rho,
                              double hops) {
    row.lambda = item.request_rate;
    if (item.ttl.law == TtlLaw::exponential) row.mu = item.ttl.eta;
    if (!std::isnan(rho)) {
        row.total_request_rate = total_request_rate(n, rho, item.request_rate);
        row.total_traffic = total_traffic(n, rho, item.request_rate, item.size_bits, hops);
    }
}

}  // namespace detail

inline std::vector<MetricRow> run_analyze_case(const AnalyzeCase& c) {
    std::vector<MetricRow> rows;
    const std::size_t m = c.catalog.size();

    struct SizePoint {
        int levels = 0;
        double n = kMissing;
        double r = kMissing;
        TopoParams params;
        double node_count = 0.0;
    };
    std::vector<SizePoint> points;
    if (c.scenario == Scenario::random_path) {
        if (c.random_n.empty()) throw ConfigError("random.n", "random scenario needs node counts");
        for (double n : c.random_n) {
            SizePoint p;
            p.n = n;
            p.r = c.random_r ? *c.random_r : std::sqrt(std::log(n) / n);
            p.levels = 1;
            p.params = TopoParams::random(n, p.r);
            p.node_count = n;
            points.push_back(p);
        }
    } else {
        if (c.grid_levels.empty()) throw ConfigError("grid.levels", "grid scenario needs levels");
        for (int levels : c.grid_levels) {
            if (levels < 1) throw ConfigError("grid.levels", "levels must be >= 1");
            SizePoint p;
            p.levels = levels;
            p.params = TopoParams::grid(levels);
            p.node_count = static_cast<double>(GridTopology::node_count_for(levels));
            points.push_back(p);
        }
    }

    if (c.normalization == HopNorm::order &&
        (c.scenario == Scenario::random_path ||
         c.occupancy == AnalyzeCase::Occupancy::onpath_fixed))
        throw ConfigError("normalization",
                          "order normalization applies to the uniform grid closed forms only");

    for (const auto& pt : points) {
        const OccupancyProfile profile = detail::analyze_profile(c, pt.levels);
        CapacityReport rep = throughput_capacity(c.scenario, c.catalog, profile, pt.params);
        if (c.normalization == HopNorm::order) {
            // dropped-constant variant of the hop sums; the derived
            // interference ceiling follows the same convention, the
            // server-load side is untouched
            for (std::size_t k = 0; k < rep.hops_per_content.size(); ++k)
                rep.hops_per_content[k] =
                    c.scenario == Scenario::grid_path
                        ? expected_hops_grid_pathwise(pt.levels, profile.uniform_rho(k),
                                                      HopNorm::order)
                        : expected_hops_grid_ring(pt.levels, profile.uniform_rho(k),
                                                  HopNorm::order);
            const auto alpha = c.catalog.popularities();
            rep.mean_hops = catalog_expected_hops(alpha, rep.hops_per_content);
            rep.interference_bound =
                rep.mean_hops == 0.0 ? kInfiniteRate : 1.0 / rep.mean_hops;
            rep.gamma_max = std::min(rep.interference_bound, rep.supportable_rate);
        }

        MetricRow agg;
        agg.experiment = c.experiment;
        agg.scenario = scenario_name(c.scenario);
        agg.levels = c.scenario == Scenario::random_path ? 0 : pt.levels;
        agg.n = pt.n;
        agg.r = pt.r;
        agg.content = -1;
        agg.mean_hops = rep.mean_hops;
        agg.gamma_interference = rep.interference_bound;
        agg.psi = rep.server_link_load;
        agg.gamma_supportable = rep.supportable_rate;
        agg.gamma_max = rep.gamma_max;
        agg.regime = rep.regime;
        rows.push_back(agg);

        for (std::size_t k = 0; k < m; ++k) {
            MetricRow row = agg;
            row.content = static_cast<int>(k);
            row.rho = profile.is_uniform() ? profile.uniform_rho(k) : kMissing;
            row.mean_hops = rep.hops_per_content[k];
            row.psi = rep.psi_per_content[k];
            row.gamma_interference = kMissing;
            row.gamma_supportable = kMissing;
            row.gamma_max = kMissing;
            row.regime.clear();
            detail::fill_rate_columns(row, c.catalog.item(k), pt.node_count, row.rho,
                                      row.mean_hops);
            rows.push_back(row);

            if (!profile.is_uniform() && c.emit_level_rows) {
                for (int j = 0; j <= profile.levels(); ++j) {
                    MetricRow lvl;
                    lvl.experiment = c.experiment;
                    lvl.scenario = agg.scenario;
                    lvl.levels = agg.levels;
                    lvl.n = pt.n;
                    lvl.r = pt.r;
                    lvl.content = static_cast<int>(k);
                    lvl.level = j;
                    lvl.rho = profile.rho(k, j);
                    rows.push_back(lvl);
                }
            }
        }
    }
    return rows;
}

inline AnalyzeCase parse_analyze_case(const nlohmann::json& j) {
    AnalyzeCase c;
    if (j.contains("experiment")) c.experiment = j["experiment"].get<std::string>();
    c.scenario = cfg::parse_scenario(cfg::require(j, "scenario", ""), "scenario");
    if (j.contains("grid"))
        c.grid_levels = cfg::int_list(cfg::require(j["grid"], "levels", "grid."), "grid.levels");
    if (j.contains("random")) {
        const auto& r = j["random"];
        c.random_n = cfg::number_list(cfg::require(r, "n", "random."), "random.n");
        if (r.contains("r") && !r["r"].is_string())
            c.random_r = cfg::number(r["r"], "random.r");
    }
    c.catalog = cfg::parse_catalog(cfg::require(j, "catalog", ""), "catalog");

    const auto& occ = cfg::require(j, "occupancy", "");
    const std::string mode = cfg::require(occ, "mode", "occupancy.").get<std::string>();
    if (mode == "uniform") {
        c.occupancy = AnalyzeCase::Occupancy::uniform;
        c.uniform_rho =
            cfg::number_list(cfg::require(occ, "rho", "occupancy."), "occupancy.rho");
        for (double v : c.uniform_rho)
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("occupancy.rho", "must lie in [0, 1]");
    } else if (mode == "edge-exponential") {
        c.occupancy = AnalyzeCase::Occupancy::edge_exponential;
    } else if (mode == "edge-fixed") {
        c.occupancy = AnalyzeCase::Occupancy::edge_fixed;
    } else if (mode == "onpath-fixed") {
        c.occupancy = AnalyzeCase::Occupancy::onpath_fixed;
        if (c.scenario != Scenario::grid_path)
            throw ConfigError("occupancy.mode", "onpath-fixed occupancy is grid-path only");
        if (occ.contains("ttl_per_level"))
            c.ttl_per_level = cfg::number_list(occ["ttl_per_level"], "occupancy.ttl_per_level");
    } else {
        throw ConfigError("occupancy.mode", "unknown mode '" + mode + "'");
    }
    if (j.contains("normalization")) {
        const std::string n = j["normalization"].get<std::string>();
        if (n == "exact") c.normalization = HopNorm::exact;
        else if (n == "order") c.normalization = HopNorm::order;
        else throw ConfigError("normalization", "expected 'exact' or 'order'");
    }
    return c;
}

inline std::vector<MetricRow> run_analyze_config(const nlohmann::json& j, unsigned workers) {
    std::vector<nlohmann::json> case_configs;
    if (j.contains("cases")) {
        for (const auto& c : j["cases"]) case_configs.push_back(c);
        if (case_configs.empty()) throw ConfigError("cases", "empty case list");
    } else {
        case_configs.push_back(j);
    }
    std::vector<std::vector<MetricRow>> per_case(case_configs.size());
    parallel_for_indexed(case_configs.size(), workers, [&](std::size_t i) {
        per_case[i] = run_analyze_case(parse_analyze_case(case_configs[i]));
    });
    std::vector<MetricRow> rows;
    for (auto& part : per_case)
        rows.insert(rows.end(), part.begin(), part.end());
    return rows;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateRequest {
    std::string experiment = "simulate";
    SimConfig config;
    int replicas = 1;
    std::string trace_path;  // empty = no trace dump
};

inline SimulateRequest parse_simulate_request(const nlohmann::json& j) {
    SimulateRequest req;
    if (j.contains("experiment")) req.experiment = j["experiment"].get<std::string>();
    SimConfig& c = req.config;

    const auto& topo = cfg::require(j, "topology", "");
    const std::string kind = cfg::require(topo, "kind", "topology.").get<std::string>();
    if (kind == "grid") {
        c.topology.kind = TopologySpec::Kind::grid;
        c.topology.levels = cfg::integer(cfg::require(topo, "levels", "topology."), "topology.levels");
        if (c.topology.levels < 1) throw ConfigError("topology.levels", "must be >= 1");
    } else if (kind == "random") {
        c.topology.kind = TopologySpec::Kind::random;
        c.topology.n = cfg::integer(cfg::require(topo, "n", "topology."), "topology.n");
        c.topology.r = cfg::number(cfg::require(topo, "r", "topology."), "topology.r");
        if (c.topology.n < 1) throw ConfigError("topology.n", "must be >= 1");
        if (!(c.topology.r > 0.0 && c.topology.r <= 1.0))
            throw ConfigError("topology.r", "must be in (0, 1]");
        if (topo.contains("connectivity_c"))
            c.topology.connectivity_c = cfg::number(topo["connectivity_c"], "topology.connectivity_c");
    } else {
        throw ConfigError("topology.kind", "expected 'grid' or 'random'");
    }

    c.catalog = cfg::parse_catalog(cfg::require(j, "catalog", ""), "catalog");

    if (j.contains("discovery")) {
        const std::string d = j["discovery"].get<std::string>();
        if (d == "pathwise") c.discovery = DiscoveryMode::pathwise;
        else if (d == "ring") c.discovery = DiscoveryMode::expanding_ring;
        else throw ConfigError("discovery", "expected 'pathwise' or 'ring'");
    }
    if (c.discovery == DiscoveryMode::expanding_ring &&
        c.topology.kind == TopologySpec::Kind::random)
        throw ConfigError("discovery", "ring discovery is grid-only");

    if (j.contains("caching")) {
        const std::string m = j["caching"].get<std::string>();
        if (m == "edge") c.caching = CachingMode::edge_only;
        else if (m == "onpath") c.caching = CachingMode::on_path;
        else throw ConfigError("caching", "expected 'edge' or 'onpath'");
    }

    const std::string mode = cfg::require(j, "mode", "").get<std::string>();
    if (mode == "snapshot") {
        c.mode = SimMode::iid_snapshot;
        const auto& snap = cfg::require(j, "snapshot", "");
        const int levels = c.topology.kind == TopologySpec::Kind::grid ? c.topology.levels : 1;
        if (snap.contains("profile")) {
            if (c.topology.kind == TopologySpec::Kind::random)
                throw ConfigError("snapshot.profile",
                                  "random-network snapshots take a uniform rho, not a profile");
            std::vector<std::vector<double>> rows =
                snap["profile"].get<std::vector<std::vector<double>>>();
            try {
                c.snapshot_profile = OccupancyProfile::per_level(std::move(rows));
            } catch (const std::invalid_argument& e) {
                throw ConfigError("snapshot.profile", e.what());
            }
            if (c.snapshot_profile->levels() != levels)
                throw ConfigError("snapshot.profile", "profile levels must match the topology");
        } else {
            auto rho = cfg::number_list(cfg::require(snap, "rho", "snapshot."), "snapshot.rho");
            if (rho.size() == 1 && c.catalog.size() > 1) rho.assign(c.catalog.size(), rho[0]);
            if (rho.size() != c.catalog.size())
                throw ConfigError("snapshot.rho", "need one value or one per catalog item");
            try {
                c.snapshot_profile = OccupancyProfile::uniform(levels, rho);
            } catch (const std::invalid_argument& e) {
                throw ConfigError("snapshot.rho", e.what());
            }
        }
        if (c.snapshot_profile->contents() != c.catalog.size())
            throw ConfigError("snapshot.profile", "need one occupancy row per catalog item");
        if (snap.contains("samples"))
            c.snapshot_samples = static_cast<long>(cfg::number(snap["samples"], "snapshot.samples"));
        if (c.snapshot_samples <= 0) throw ConfigError("snapshot.samples", "must be positive");
    } else if (mode == "ttl") {
        c.mode = SimMode::ttl_dynamics;
        const auto& ttl = cfg::require(j, "ttl", "");
        c.horizon = cfg::number(cfg::require(ttl, "horizon", "ttl."), "ttl.horizon");
        if (ttl.contains("warmup")) c.warmup = cfg::number(ttl["warmup"], "ttl.warmup");
        if (!(c.horizon > c.warmup) || c.warmup < 0.0)
            throw ConfigError("ttl.horizon", "need horizon > warmup >= 0");
        if (ttl.contains("ttl_per_level")) {
            c.ttl_per_level = cfg::number_list(ttl["ttl_per_level"], "ttl.ttl_per_level");
            if (c.topology.kind == TopologySpec::Kind::grid &&
                c.ttl_per_level.size() != static_cast<std::size_t>(c.topology.levels))
                throw ConfigError("ttl.ttl_per_level", "need one entry per grid level");
        }
        if (ttl.contains("max_events"))
            c.max_events = static_cast<std::uint64_t>(cfg::number(ttl["max_events"], "ttl.max_events"));
    } else {
        throw ConfigError("mode", "expected 'snapshot' or 'ttl'");
    }

    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("replicas")) {
        req.replicas = cfg::integer(j["replicas"], "replicas");
        if (req.replicas < 1) throw ConfigError("replicas", "must be >= 1");
    }
    if (j.contains("trace")) {
        req.trace_path = j["trace"].get<std::string>();
        c.collect_trace = true;
    }
    return req;
}

namespace detail {

inline Estimate merge_estimates(std::span<const Estimate> parts, std::span<const double> weights) {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    Estimate out;
    if (wsum == 0.0) return out;
    double var = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const double w = weights[i] / wsum;
        out.mean += w * parts[i].mean;
        var += w * w * parts[i].stderr * parts[i].stderr;
    }
    out.stderr = std::sqrt(var);
    return out;
}

}  // namespace detail

/// Merge replica results. Rate-like quantities are weighted by measured span
/// (or samples), event-mean quantities by their event counts; the merge is
/// associative and independent of completion order.
inline SimResult merge_sim_results(std::vector<SimResult> parts) {
    if (parts.empty()) throw std::invalid_argument("nothing to merge");
    if (parts.size() == 1) return std::move(parts.front());
    SimResult out = parts.front();  // shapes and metadata

    const std::size_t R = parts.size();
    const std::size_t m = out.contents;
    std::vector<double> span_w(R), req_w(R);
    for (std::size_t i = 0; i < R; ++i) {
        span_w[i] = parts[i].sim_span;
        req_w[i] = 0.0;
        for (double c : parts[i].requests_per_content) req_w[i] += c;
    }

    std::vector<Estimate> tmp(R);
    std::vector<double> w(R);

    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < R; ++i) {
            tmp[i] = parts[i].hops_per_content[k];
            w[i] = parts[i].requests_per_content[k];
        }
        out.hops_per_content[k] = detail::merge_estimates(tmp, w);
        for (int j = 0; j <= out.levels; ++j) {
            for (std::size_t i = 0; i < R; ++i) {
                tmp[i] = parts[i].occupancy[k][static_cast<std::size_t>(j)];
                w[i] = span_w[i] > 0.0 ? span_w[i] : 1.0;
            }
            out.occupancy[k][static_cast<std::size_t>(j)] = detail::merge_estimates(tmp, w);
        }
    }
    for (std::size_t i = 0; i < R; ++i) tmp[i] = parts[i].mean_hops;
    out.mean_hops = detail::merge_estimates(tmp, req_w);
    for (std::size_t i = 0; i < R; ++i) tmp[i] = parts[i].external_request_rate;
    out.external_request_rate = detail::merge_estimates(tmp, span_w);
    for (std::size_t i = 0; i < R; ++i) tmp[i] = parts[i].traffic;
    out.traffic = detail::merge_estimates(tmp, span_w);

    double req_total = 0.0;
    out.server_served_fraction = 0.0;
    out.server_link_crossing_rate = 0.0;
    double span_total = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        out.server_served_fraction += parts[i].server_served_fraction * req_w[i];
        req_total += req_w[i];
        out.server_link_crossing_rate += parts[i].server_link_crossing_rate * span_w[i];
        span_total += span_w[i];
    }
    if (req_total > 0.0) out.server_served_fraction /= req_total;
    if (span_total > 0.0) out.server_link_crossing_rate /= span_total;

    for (std::size_t k = 0; k < m; ++k) {
        double frac = 0.0, reqs = 0.0;
        for (std::size_t i = 0; i < R; ++i) {
            frac += parts[i].server_fraction_per_content[k] * parts[i].requests_per_content[k];
            reqs += parts[i].requests_per_content[k];
        }
        out.server_fraction_per_content[k] = reqs > 0.0 ? frac / reqs : 0.0;
        out.requests_per_content[k] = reqs;
    }

    out.request_events = out.expiry_events = out.service_events = 0;
    out.truncated = false;
    out.wall_seconds = 0.0;
    out.sim_span = 0.0;
    out.trace.clear();
    out.available_time.clear();
    out.absent_time.clear();
    for (const auto& p : parts) {
        out.request_events += p.request_events;
        out.expiry_events += p.expiry_events;
        out.service_events += p.service_events;
        out.truncated = out.truncated || p.truncated;
        out.wall_seconds += p.wall_seconds;
        out.sim_span += p.sim_span;
        out.trace.insert(out.trace.end(), p.trace.begin(), p.trace.end());
    }
    return out;
}

inline SimResult run_simulate_merged(const SimulateRequest& req, unsigned workers) {
    std::vector<SimResult> parts(static_cast<std::size_t>(req.replicas));
    parallel_for_indexed(parts.size(), workers, [&](std::size_t i) {
        SimConfig c = req.config;
        c.seed = req.replicas == 1 ? req.config.seed
                                   : derive_seed(req.config.seed, static_cast<std::uint64_t>(i));
        parts[i] = run_simulation(c);
    });
    return merge_sim_results(std::move(parts));
}

inline std::vector<MetricRow> simulate_rows(const SimulateRequest& req, const SimResult& res) {
    std::vector<MetricRow> rows;
    const SimConfig& c = req.config;
    const bool grid = c.topology.kind == TopologySpec::Kind::grid;

    MetricRow base;
    base.experiment = req.experiment;
    base.scenario = scenario_name(
        grid ? (c.discovery == DiscoveryMode::pathwise ? Scenario::grid_path : Scenario::grid_ring)
             : Scenario::random_path);
    base.levels = grid ? c.topology.levels : 0;
    if (!grid) {
        base.n = c.topology.n;
        base.r = c.topology.r;
    }
    base.source = "simulated";

    MetricRow agg = base;
    agg.content = -1;
    agg.mean_hops = res.mean_hops.mean;
    agg.stderr_value = res.mean_hops.stderr;
    agg.psi = res.server_link_crossing_rate;
    if (res.mean_hops.mean > 0.0) {
        agg.gamma_interference =
            grid ? 1.0 / res.mean_hops.mean
                 : 1.0 / (res.mean_hops.mean * c.topology.n * c.topology.r * c.topology.r);
    } else {
        agg.gamma_interference = kInfiniteRate;
    }
    agg.gamma_supportable = res.server_link_crossing_rate > 0.0
                                ? 1.0 / res.server_link_crossing_rate
                                : kInfiniteRate;
    agg.gamma_max = std::min(agg.gamma_interference, agg.gamma_supportable);
    agg.total_request_rate = res.external_request_rate.mean;
    agg.total_traffic = res.traffic.mean;
    rows.push_back(agg);

    double pop_total = 0.0;
    for (int j = grid ? 1 : 0; j <= res.levels; ++j)
        pop_total += res.level_node_counts[static_cast<std::size_t>(j)];

    for (std::size_t k = 0; k < res.contents; ++k) {
        MetricRow row = base;
        row.content = static_cast<int>(k);
        row.mean_hops = res.hops_per_content[k].mean;
        row.stderr_value = res.hops_per_content[k].stderr;
        row.lambda = c.catalog.item(k).request_rate;
        if (c.catalog.item(k).ttl.law == TtlLaw::exponential)
            row.mu = c.catalog.item(k).ttl.eta;
        double rho_avg = 0.0;
        for (int j = grid ? 1 : 0; j <= res.levels; ++j)
            rho_avg += res.occupancy[k][static_cast<std::size_t>(j)].mean *
                       res.level_node_counts[static_cast<std::size_t>(j)];
        row.rho = pop_total > 0.0 ? rho_avg / pop_total : kMissing;
        rows.push_back(row);

        for (int j = 0; j <= res.levels; ++j) {
            if (grid && j == 0) continue;
            if (res.level_node_counts[static_cast<std::size_t>(j)] == 0.0) continue;
            MetricRow lvl = base;
            lvl.content = static_cast<int>(k);
            lvl.level = j;
            lvl.rho = res.occupancy[k][static_cast<std::size_t>(j)].mean;
            lvl.stderr_value = res.occupancy[k][static_cast<std::size_t>(j)].stderr;
            rows.push_back(lvl);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepAxis {
    std::string parameter;
    std::vector<double> values;
};

struct SweepRequest {
    std::string experiment = "sweep";
    std::string base_command = "analyze";  // or "simulate"
    nlohmann::json base;
    std::vector<SweepAxis> axes;
    std::size_t grid_cap = 10000;
};

inline SweepRequest parse_sweep_request(const nlohmann::json& j) {
    SweepRequest req;
    if (j.contains("experiment")) req.experiment = j["experiment"].get<std::string>();
    req.base = cfg::require(j, "base", "");
    if (j.contains("base_command")) {
        req.base_command = j["base_command"].get<std::string>();
        if (req.base_command != "analyze" && req.base_command != "simulate")
            throw ConfigError("base_command", "expected 'analyze' or 'simulate'");
    }
    const auto& axes = cfg::require(j, "axes", "");
    if (!axes.is_array() || axes.empty() || axes.size() > 2)
        throw ConfigError("axes", "expected one or two sweep axes");
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const std::string path = "axes[" + std::to_string(i) + "]";
        SweepAxis axis;
        axis.parameter = cfg::require(axes[i], "parameter", path + ".").get<std::string>();
        axis.values = cfg::number_list(cfg::require(axes[i], "values", path + "."), path + ".values");
        req.axes.push_back(std::move(axis));
    }
    if (j.contains("grid_cap"))
        req.grid_cap = static_cast<std::size_t>(cfg::number(j["grid_cap"], "grid_cap"));
    return req;
}

namespace detail {

inline void apply_axis(nlohmann::json& base, const std::string& parameter, double value,
                       const std::string& path) {
    auto set_items = [&](auto&& fn) {
        if (!base.contains("catalog") || !base["catalog"].contains("items"))
            throw ConfigError(path, "base config has no catalog items to sweep");
        for (auto& item : base["catalog"]["items"]) fn(item);
    };
    if (parameter == "lambda" || parameter == "beta") {
        set_items([&](nlohmann::json& it) { it["beta"] = value; });
    } else if (parameter == "mu" || parameter == "eta") {
        set_items([&](nlohmann::json& it) { it["ttl"]["eta"] = value; });
    } else if (parameter == "inv_mu") {
        set_items([&](nlohmann::json& it) { it["ttl"]["eta"] = 1.0 / value; });
    } else if (parameter == "ttl" || parameter == "duration") {
        set_items([&](nlohmann::json& it) { it["ttl"]["duration"] = value; });
    } else if (parameter == "rho") {
        base["occupancy"]["rho"] = value;
    } else if (parameter == "levels") {
        if (base.contains("grid")) base["grid"]["levels"] = static_cast<int>(value);
        else base["topology"]["levels"] = static_cast<int>(value);
    } else if (parameter == "n") {
        if (base.contains("random")) base["random"]["n"] = value;
        else base["topology"]["n"] = static_cast<int>(value);
    } else if (parameter == "r") {
        if (base.contains("random")) base["random"]["r"] = value;
        else base["topology"]["r"] = value;
    } else {
        throw ConfigError(path, "unknown sweep parameter '" + parameter + "'");
    }
}

}  // namespace detail

inline std::vector<MetricRow> run_sweep(const SweepRequest& req, unsigned workers) {
    std::vector<std::vector<double>> grid_points;  // cartesian product
    const std::size_t n0 = req.axes[0].values.size();
    const std::size_t n1 = req.axes.size() > 1 ? req.axes[1].values.size() : 1;
    if (n0 * n1 > req.grid_cap)
        throw ConfigError("axes", "sweep grid of " + std::to_string(n0 * n1) +
                                      " points exceeds cap " + std::to_string(req.grid_cap));
    for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t j = 0; j < n1; ++j) {
            std::vector<double> pt{req.axes[0].values[i]};
            if (req.axes.size() > 1) pt.push_back(req.axes[1].values[j]);
            grid_points.push_back(std::move(pt));
        }

    std::vector<std::vector<MetricRow>> per_point(grid_points.size());
    parallel_for_indexed(grid_points.size(), workers, [&](std::size_t i) {
        nlohmann::json point_cfg = req.base;
        for (std::size_t a = 0; a < req.axes.size(); ++a)
            detail::apply_axis(point_cfg, req.axes[a].parameter, grid_points[i][a],
                               "axes[" + std::to_string(a) + "]");
        std::vector<MetricRow> rows;
        if (req.base_command == "analyze") {
            AnalyzeCase c = parse_analyze_case(point_cfg);
            c.experiment = req.experiment;
            rows = run_analyze_case(c);
        } else {
            SimulateRequest sim = parse_simulate_request(point_cfg);
            sim.experiment = req.experiment;
            const SimResult res = run_simulate_merged(sim, 1);
            rows = simulate_rows(sim, res);
        }
        for (auto& row : rows) {
            for (std::size_t a = 0; a < req.axes.size(); ++a) {
                const auto& p = req.axes[a].parameter;
                const double v = grid_points[i][a];
                if (p == "lambda" || p == "beta") row.lambda = v;
                else if (p == "mu" || p == "eta") row.mu = v;
                else if (p == "inv_mu") row.mu = 1.0 / v;
            }
        }
        per_point[i] = std::move(rows);
    });

    std::vector<MetricRow> rows;
    for (auto& part : per_point) rows.insert(rows.end(), part.begin(), part.end());
    return rows;
}

// ---------------------------------------------------------------------------
// scaling

struct ScalingCase {
    std::string experiment = "scaling";
    ScalingMetric metric = ScalingMetric::mean_hops;
    Scenario scenario = Scenario::grid_path;
    RhoLaw rho_law;
    std::vector<int> grid_levels = {10, 20, 40, 80, 160, 320};
    std::vector<double> random_n = {1e3, 1e4, 1e5, 1e6};
    RangeLaw range_law;
    double tolerance = 0.05;
};

inline ScalingCase parse_scaling_case(const nlohmann::json& j) {
    ScalingCase c;
    if (j.contains("experiment")) c.experiment = j["experiment"].get<std::string>();
    const std::string metric = cfg::require(j, "metric", "").get<std::string>();
    if (metric == "E_h" || metric == "hops") c.metric = ScalingMetric::mean_hops;
    else if (metric == "gamma_max") c.metric = ScalingMetric::gamma_max;
    else throw ConfigError("metric", "expected 'E_h' or 'gamma_max'");
    c.scenario = cfg::parse_scenario(cfg::require(j, "scenario", ""), "scenario");

    const auto& law = cfg::require(j, "rho_law", "");
    if (law.contains("constant")) {
        c.rho_law = RhoLaw::constant(cfg::number(law["constant"], "rho_law.constant"));
    } else {
        c.rho_law.exponent = cfg::number(cfg::require(law, "exponent", "rho_law."), "rho_law.exponent");
        if (law.contains("coefficient"))
            c.rho_law.coefficient = cfg::number(law["coefficient"], "rho_law.coefficient");
    }
    if (j.contains("grid_levels")) c.grid_levels = cfg::int_list(j["grid_levels"], "grid_levels");
    if (j.contains("random_n")) c.random_n = cfg::number_list(j["random_n"], "random_n");
    if (j.contains("range_law")) {
        const auto& rl = j["range_law"];
        if (rl.is_string() && rl.get<std::string>() == "connectivity") {
            c.range_law.connectivity = true;
        } else {
            c.range_law.connectivity = false;
            c.range_law.exponent = cfg::number(cfg::require(rl, "exponent", "range_law."),
                                               "range_law.exponent");
            if (rl.contains("coefficient"))
                c.range_law.coefficient = cfg::number(rl["coefficient"], "range_law.coefficient");
        }
    }
    if (j.contains("tolerance")) c.tolerance = cfg::number(j["tolerance"], "tolerance");
    return c;
}

inline ScalingRow scaling_row_from(const ScalingCase& c, const ScalingVerdict& v) {
    ScalingRow row;
    row.experiment = c.experiment;
    row.metric = scaling_metric_name(c.metric);
    row.scenario = scenario_name(c.scenario);
    row.rho_exponent = c.rho_law.exponent;
    row.rho_coefficient = c.rho_law.coefficient;
    row.r_exponent = c.scenario == Scenario::random_path
                         ? (c.range_law.connectivity ? 0.5 : c.range_law.exponent)
                         : kMissing;
    row.sizes = v.sizes;
    row.fitted_slope = v.fitted_slope;
    row.r_squared = v.r_squared;
    row.predicted_exponent = v.predicted_exponent;
    row.regime = v.regime;
    row.tolerance = v.tolerance;
    row.straddled = v.straddles_regimes;
    row.pass = v.pass;
    return row;
}

inline std::vector<ScalingRow> run_scaling_config(const nlohmann::json& j, unsigned workers) {
    std::vector<nlohmann::json> case_configs;
    if (j.contains("cases")) {
        for (const auto& c : j["cases"]) case_configs.push_back(c);
        if (case_configs.empty()) throw ConfigError("cases", "empty case list");
    } else {
        case_configs.push_back(j);
    }
    std::vector<ScalingRow> rows(case_configs.size());
    parallel_for_indexed(case_configs.size(), workers, [&](std::size_t i) {
        const ScalingCase c = parse_scaling_case(case_configs[i]);
        const ScalingVerdict v =
            c.scenario == Scenario::random_path
                ? verify_order(c.metric, c.scenario, c.rho_law, {}, c.random_n, c.range_law,
                               c.tolerance)
                : verify_order(c.metric, c.scenario, c.rho_law, c.grid_levels, {},
                               c.range_law, c.tolerance);
        rows[i] = scaling_row_from(c, v);
    });
    return rows;
}

// ---------------------------------------------------------------------------
// figure presets

inline std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> out;
    const double step = std::log10(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i) out.push_back(lo * std::pow(10.0, step * i));
    return out;
}

/// Request-rate sweep at fixed unit expiry rate: total request rate and
/// traffic against lambda.
inline nlohmann::json preset_fig3() {
    nlohmann::json base = {
        {"scenario", "grid-path"},
        {"grid", {{"levels", 16}}},
        {"catalog",
         {{"items",
           {{{"size", 1.0}, {"alpha", 1.0}, {"beta", 1.0}, {"ttl", {{"law", "exponential"}, {"eta", 1.0}}}}}}}},
        {"occupancy", {{"mode", "edge-exponential"}}}};
    return {{"experiment", "fig3"},
            {"base_command", "analyze"},
            {"base", base},
            {"axes", {{{"parameter", "lambda"}, {"values", log_grid(1e-2, 1e2, 41)}}}}};
}

/// Timer-lifetime sweep at fixed unit request rate.
inline nlohmann::json preset_fig4() {
    nlohmann::json base = preset_fig3()["base"];
    return {{"experiment", "fig4"},
            {"base_command", "analyze"},
            {"base", base},
            {"axes", {{{"parameter", "inv_mu"}, {"values", log_grid(1e-2, 1e2, 41)}}}}};
}

/// Capacity versus network size at rho = 7/8, all three scenarios plus the
/// cache-free grid reference.
inline nlohmann::json preset_fig5() {
    auto catalog = nlohmann::json{
        {"items",
         {{{"size", 1.0}, {"alpha", 1.0}, {"beta", 7.0}, {"ttl", {{"law", "exponential"}, {"eta", 1.0}}}}}}};
    const auto levels = nlohmann::json::array({10, 20, 40, 80, 160, 320});
    const auto sizes = nlohmann::json::array({1e3, 1e4, 1e5, 1e6});
    nlohmann::json cases = nlohmann::json::array();
    cases.push_back({{"experiment", "fig5-grid-path"},
                     {"scenario", "grid-path"},
                     {"grid", {{"levels", levels}}},
                     {"catalog", catalog},
                     {"occupancy", {{"mode", "uniform"}, {"rho", 0.875}}}});
    cases.push_back({{"experiment", "fig5-grid-ring"},
                     {"scenario", "grid-ring"},
                     {"grid", {{"levels", levels}}},
                     {"catalog", catalog},
                     {"occupancy", {{"mode", "uniform"}, {"rho", 0.875}}}});
    cases.push_back({{"experiment", "fig5-random-path"},
                     {"scenario", "random-path"},
                     {"random", {{"n", sizes}}},
                     {"catalog", catalog},
                     {"occupancy", {{"mode", "uniform"}, {"rho", 0.875}}}});
    cases.push_back({{"experiment", "fig5-no-cache"},
                     {"scenario", "grid-path"},
                     {"grid", {{"levels", levels}}},
                     {"catalog", catalog},
                     {"occupancy", {{"mode", "uniform"}, {"rho", 0.0}}}});
    return {{"experiment", "fig5"}, {"cases", cases}};
}

/// preset name -> (command, config); unknown names raise ConfigError.
inline std::pair<std::string, nlohmann::json> preset_config(const std::string& name) {
    if (name == "fig3") return {"sweep", preset_fig3()};
    if (name == "fig4") return {"sweep", preset_fig4()};
    if (name == "fig5") return {"analyze", preset_fig5()};
    throw ConfigError("preset", "unknown preset '" + name + "' (fig3, fig4, fig5)");
}

}  // namespace icnlab
