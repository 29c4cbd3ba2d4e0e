#pragma once

// Capacity and load analytics: the exact grid capacity index, the
// transport-capacity interference bound, server-link load and the largest
// supportable rate, their combination, and the traffic metrics.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icnlab/content.hpp"
#include "icnlab/hopcount.hpp"

namespace icnlab {

constexpr double kInfiniteRate = std::numeric_limits<double>::infinity();

/// Geometry parameters a scenario needs: grid level count, or node count and
/// transmission range of the cell network.
struct TopoParams {
    int levels = 0;
    double n = 0.0;
    double r = 0.0;

    static TopoParams grid(int levels) { return {levels, 0.0, 0.0}; }
    static TopoParams random(double n, double r) { return {0, n, r}; }
};

/// Exact capacity index of the grid with path-wise discovery:
/// N / sum_k alpha_k sum_i 4i sum_{j<i} (i-j) rho_j prod_{l=j+1..i}(1-rho_l).
/// Equals the reciprocal of the level-wise expected hop count; evaluated here
/// through its own sum so the two routes stay independently checkable.
/// Returns the infinite-rate sentinel when every request is served locally.
inline double capacity_index_exact(const OccupancyProfile& profile,
                                      std::span<const double> alpha) {
    if (alpha.size() != profile.contents())
        throw std::invalid_argument("popularity vector must match profile contents");
    const int levels = profile.levels();
    const double node_count = 2.0 * levels * (levels + 1);
    double denom = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        double content_sum = 0.0;
        for (int i = 1; i <= levels; ++i) {
            double miss_run = 1.0;
            double per_node = 0.0;
            for (int j = i - 1; j >= 0; --j) {
                miss_run *= 1.0 - profile.rho(k, j + 1);
                per_node += (i - j) * profile.rho(k, j) * miss_run;
            }
            content_sum += 4.0 * i * per_node;
        }
        denom += alpha[k] * content_sum;
    }
    if (denom == 0.0) return kInfiniteRate;
    return node_count / denom;
}

/// Transport-capacity bound on the per-node download rate: 1/E[h] on the
/// grid, 1/(E[h] n r^2) on the cell network.
inline double interference_bound(Scenario s, double mean_hops, const TopoParams& tp) {
    if (mean_hops < 0.0) throw std::invalid_argument("mean hops must be nonnegative");
    if (mean_hops == 0.0) return kInfiniteRate;
    switch (s) {
        case Scenario::grid_path:
        case Scenario::grid_ring:
            return 1.0 / mean_hops;
        case Scenario::random_path:
            return 1.0 / (mean_hops * tp.n * tp.r * tp.r);
    }
    return kInfiniteRate;
}

/// Per-content load on one server-adjacent link at unit download rate.
/// Uniform profiles evaluate the per-scenario finite sums; per-level profiles
/// are supported for the grid path scenario only, where the miss product
/// generalizes directly.
inline std::vector<double> server_link_load_per_content(Scenario s,
                                                        const OccupancyProfile& profile,
                                                        const TopoParams& tp) {
    if (!profile.is_uniform() && s != Scenario::grid_path)
        throw std::invalid_argument("per-level profiles are only supported for grid-path load");
    std::vector<double> out(profile.contents(), 0.0);
    for (std::size_t k = 0; k < profile.contents(); ++k) {
        double psi_k = 0.0;
        switch (s) {
            case Scenario::grid_path: {
                double miss_run = 1.0;
                for (int i = 1; i <= tp.levels; ++i) {
                    miss_run *= 1.0 - profile.rho(k, i);
                    psi_k += i * miss_run;
                }
                break;
            }
            case Scenario::grid_ring: {
                const double q = 1.0 - profile.uniform_rho(k);
                psi_k = q;
                for (int i = 1; i <= tp.levels; ++i)
                    psi_k += i * std::pow(q, 2.0 * i * i + 2.0 * i + 1.0);
                break;
            }
            case Scenario::random_path: {
                const double q = 1.0 - profile.uniform_rho(k);
                const double per_cell = tp.n * tp.r * tp.r;
                const int max_dist = static_cast<int>(std::floor(1.0 / tp.r));
                double acc = q;
                const double qc = std::pow(q, per_cell);
                double qpow = qc;  // qc^i
                for (int i = 2; i <= max_dist; ++i) {
                    qpow *= qc;
                    acc += i * qpow;
                }
                psi_k = per_cell * acc;
                break;
            }
        }
        out[k] = psi_k;
    }
    return out;
}

/// Popularity-weighted load on one server-adjacent link at per-node download
/// rate gamma; linear in gamma.
inline double server_link_load(Scenario s, const ContentCatalog& catalog,
                               const OccupancyProfile& profile, double gamma,
                               const TopoParams& tp) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    if (catalog.size() != profile.contents())
        throw std::invalid_argument("catalog and profile must agree on content count");
    const auto per_content = server_link_load_per_content(s, profile, tp);
    double psi = 0.0;
    for (std::size_t k = 0; k < catalog.size(); ++k)
        psi += catalog.item(k).popularity * per_content[k];
    return gamma * psi;
}

/// Largest gamma the server links can carry: per-link capacity is normalized
/// to one and the load is linear in gamma, so the answer is 1/psi(1).
inline double supportable_rate(Scenario s, const ContentCatalog& catalog,
                               const OccupancyProfile& profile, const TopoParams& tp) {
    const double psi1 = server_link_load(s, catalog, profile, 1.0, tp);
    if (psi1 == 0.0) return kInfiniteRate;
    return 1.0 / psi1;
}

struct CapacityReport {
    Scenario scenario = Scenario::grid_path;
    double mean_hops = 0.0;
    double capacity_index = 0.0;      // grid-path exact index, when applicable
    double interference_bound = 0.0;
    double server_link_load = 0.0;    // psi at gamma = 1
    double supportable_rate = 0.0;
    double gamma_max = 0.0;
    std::vector<double> hops_per_content;
    std::vector<double> psi_per_content;
    std::string regime;
    bool per_level_extension = false;
};

namespace detail {
inline std::string capacity_regime_label(Scenario s, double min_rho, const TopoParams& tp) {
    switch (s) {
        case Scenario::grid_path: {
            const double node_count = 2.0 * tp.levels * (tp.levels + 1);
            return min_rho * std::sqrt(node_count) < 1.0 ? "server-bottleneck" : "cache-limited";
        }
        case Scenario::grid_ring: {
            const double node_count = 2.0 * tp.levels * (tp.levels + 1);
            return min_rho * node_count < 1.0 ? "server-bottleneck" : "cache-limited";
        }
        case Scenario::random_path: {
            const double per_cell = tp.n * tp.r * tp.r;
            if (min_rho * tp.n * tp.r < 1.0) return "server-bottleneck";
            if (min_rho * per_cell < 1.0) return "cache-limited";
            return "saturated";
        }
    }
    return "?";
}
}  // namespace detail

/// Combined throughput capacity: the interference bound and the server-link
/// bottleneck are computed separately and gamma_max takes their minimum.
inline CapacityReport throughput_capacity(Scenario s, const ContentCatalog& catalog,
                                          const OccupancyProfile& profile,
                                          const TopoParams& tp) {
    if (catalog.size() != profile.contents())
        throw std::invalid_argument("catalog and profile must agree on content count");
    CapacityReport rep;
    rep.scenario = s;
    rep.per_level_extension = !profile.is_uniform();

    const auto alpha = catalog.popularities();
    std::vector<double> hops(catalog.size());
    double min_rho = 1.0;
    for (std::size_t k = 0; k < catalog.size(); ++k) {
        switch (s) {
            case Scenario::grid_path:
                hops[k] = expected_hops_levelwise(profile, k);
                break;
            case Scenario::grid_ring:
                hops[k] = expected_hops_grid_ring(tp.levels, profile.uniform_rho(k));
                break;
            case Scenario::random_path:
                hops[k] = expected_hops_random_pathwise(tp.n, tp.r, profile.uniform_rho(k));
                break;
        }
        if (profile.is_uniform()) {
            min_rho = std::min(min_rho, profile.uniform_rho(k));
        } else {
            for (int j = 1; j <= profile.levels(); ++j)
                min_rho = std::min(min_rho, profile.rho(k, j));
        }
    }
    rep.mean_hops = catalog_expected_hops(alpha, hops);
    rep.hops_per_content = hops;
    rep.psi_per_content = server_link_load_per_content(s, profile, tp);
    rep.capacity_index = (s == Scenario::grid_path)
                             ? capacity_index_exact(profile, alpha)
                             : (rep.mean_hops == 0.0 ? kInfiniteRate : 1.0 / rep.mean_hops);
    rep.interference_bound = interference_bound(s, rep.mean_hops, tp);
    rep.server_link_load = server_link_load(s, catalog, profile, 1.0, tp);
    rep.supportable_rate =
        rep.server_link_load == 0.0 ? kInfiniteRate : 1.0 / rep.server_link_load;
    rep.gamma_max = std::min(rep.interference_bound, rep.supportable_rate);
    rep.regime = detail::capacity_regime_label(s, min_rho, tp);
    return rep;
}

/// Predicted growth exponent in n of the interference bound alone, read off
/// the stated order compositions (the cell scenario's statement composes
/// min/max differently from its proof-side bound 1/(E[h] n r^2), which the
/// numeric interference_bound implements; both readings stay available).
inline RegimeVerdict interference_order(Scenario s, double rho_exponent,
                                        double r_exponent = 0.0) {
    const double a = std::max(0.0, rho_exponent);
    const double b = r_exponent;
    RegimeVerdict v;
    v.scenario = s;
    switch (s) {
        case Scenario::grid_path:
            v.exponent = std::max(-0.5, -a);
            v.label = a > 0.5 ? "server-bottleneck" : a < 0.5 ? "cache-limited" : "boundary";
            break;
        case Scenario::grid_ring:
            v.exponent = std::max(-0.5, -a / 2.0);
            v.label = a > 1.0 ? "server-bottleneck" : a < 1.0 ? "cache-limited" : "boundary";
            break;
        case Scenario::random_path:
            v.exponent = std::min(2.0 * b - 1.0, std::max(b - 1.0, -a));
            if (a > 1.0 - b) v.label = "server-bottleneck";
            else if (a < 1.0 - 2.0 * b) v.label = "saturated";
            else if (a == 1.0 - b || a == 1.0 - 2.0 * b) v.label = "boundary";
            else v.label = "cache-limited";
            break;
    }
    return v;
}

/// Predicted growth exponent of gamma_max in n for rho ~ n^{-a}, r ~ n^{-b}.
inline RegimeVerdict capacity_order(Scenario s, double rho_exponent, double r_exponent = 0.0) {
    const double a = std::max(0.0, rho_exponent);
    const double b = r_exponent;
    RegimeVerdict v;
    v.scenario = s;
    switch (s) {
        case Scenario::grid_path:
            v.exponent = std::max(-1.0, -2.0 * a);
            v.label = a > 0.5 ? "server-bottleneck" : a < 0.5 ? "cache-limited" : "boundary";
            break;
        case Scenario::grid_ring:
            v.exponent = std::max(-1.0, -a);
            v.label = a > 1.0 ? "server-bottleneck" : a < 1.0 ? "cache-limited" : "boundary";
            break;
        case Scenario::random_path:
            v.exponent = std::max(-1.0, std::min(2.0 * b - 1.0, 1.0 - 2.0 * a - 2.0 * b));
            if (a > 1.0 - b) v.label = "server-bottleneck";
            else if (a < 1.0 - 2.0 * b) v.label = "saturated";
            else if (a == 1.0 - b || a == 1.0 - 2.0 * b) v.label = "boundary";
            else v.label = "cache-limited";
            break;
    }
    return v;
}

/// Network-wide rate of requests that are not absorbed by the requester's
/// own cache: n (1 - rho) lambda.
inline double total_request_rate(double n, double rho, double lambda) {
    detail::check_rho(rho);
    if (n < 0.0 || lambda < 0.0) throw std::invalid_argument("inputs must be nonnegative");
    return n * (1.0 - rho) * lambda;
}

/// Bits moved per second for one item: request rate times size times hops.
inline double total_traffic(double n, double rho, double lambda, double size_bits,
                            double mean_hops) {
    if (size_bits < 0.0 || mean_hops < 0.0)
        throw std::invalid_argument("inputs must be nonnegative");
    return total_request_rate(n, rho, lambda) * size_bits * mean_hops;
}

struct TrafficReport {
    std::vector<double> request_rate;  // per content
    std::vector<double> traffic;       // per content
    double total_request_rate = 0.0;
    double total_traffic = 0.0;
};

inline TrafficReport traffic_report(double n, std::span<const double> rho,
                                    std::span<const double> lambda,
                                    std::span<const double> size_bits,
                                    std::span<const double> mean_hops) {
    const std::size_t m = rho.size();
    if (lambda.size() != m || size_bits.size() != m || mean_hops.size() != m)
        throw std::invalid_argument("traffic report inputs must share one length");
    TrafficReport rep;
    rep.request_rate.resize(m);
    rep.traffic.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        rep.request_rate[k] = total_request_rate(n, rho[k], lambda[k]);
        rep.traffic[k] = total_traffic(n, rho[k], lambda[k], size_bits[k], mean_hops[k]);
        rep.total_request_rate += rep.request_rate[k];
        rep.total_traffic += rep.traffic[k];
    }
    return rep;
}

}  // namespace icnlab
