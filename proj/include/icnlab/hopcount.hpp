#pragma once

// Serving-probability and expected-hop analytics for the three studied
// setups: grid with path-wise discovery, grid with expanding-ring discovery,
// and the random cell network with path-wise discovery.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icnlab/content.hpp"

namespace icnlab {

enum class Scenario { grid_path, grid_ring, random_path };

inline const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::grid_path: return "grid-path";
        case Scenario::grid_ring: return "grid-ring";
        case Scenario::random_path: return "random-path";
    }
    return "?";
}

/// Hop sums come in two flavors: `exact` keeps the 4-nodes-per-ring factor so
/// the closed forms coincide with the level-wise sum identically; `order`
/// drops that constant, which only matters for growth-rate comparisons.
enum class HopNorm { exact, order };

/// Probability that a request from level i is served by the cache met at
/// level j of the descent (j = i is a local hit, j = 0 the server).
inline double serve_probability(const OccupancyProfile& profile, std::size_t content,
                                int i, int j) {
    if (j > i || j < 0 || i > profile.levels())
        throw std::invalid_argument("serving level must satisfy 0 <= j <= i <= L");
    double p = profile.rho(content, j);
    for (int l = j + 1; l <= i; ++l) p *= 1.0 - profile.rho(content, l);
    return p;
}

/// Exact expected hops for path-wise discovery under an arbitrary per-level
/// profile: (1/N) sum_i 4i sum_{j<i} (i-j) P_{i,j} with N = 2L(L+1).
inline double expected_hops_levelwise(const OccupancyProfile& profile, std::size_t content) {
    const int levels = profile.levels();
    double acc = 0.0;
    for (int i = 1; i <= levels; ++i) {
        double miss_run = 1.0;  // prod_{l=j+1}^{i} (1 - rho_l)
        double per_node = 0.0;
        for (int j = i - 1; j >= 0; --j) {
            miss_run *= 1.0 - profile.rho(content, j + 1);
            per_node += (i - j) * profile.rho(content, j) * miss_run;
        }
        acc += 4.0 * i * per_node;
    }
    return acc / (2.0 * levels * (levels + 1));
}

/// Full serving distribution plus the catalog-average hop count.
struct HopDistribution {
    int levels = 0;
    // serve[k][i][j], j in 0..i; row i sums to one since the server always holds.
    std::vector<std::vector<std::vector<double>>> serve;
    std::vector<double> hops_per_content;
    double mean_hops = 0.0;
};

inline double catalog_expected_hops(std::span<const double> alpha,
                                    std::span<const double> hops_per_content) {
    if (alpha.size() != hops_per_content.size())
        throw std::invalid_argument("popularity and hop vectors must have equal length");
    double s = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) s += alpha[k] * hops_per_content[k];
    return s;
}

inline HopDistribution hop_distribution(const OccupancyProfile& profile,
                                        std::span<const double> alpha) {
    if (alpha.size() != profile.contents())
        throw std::invalid_argument("popularity vector must match profile contents");
    HopDistribution out;
    out.levels = profile.levels();
    out.serve.resize(profile.contents());
    out.hops_per_content.resize(profile.contents());
    for (std::size_t k = 0; k < profile.contents(); ++k) {
        auto& rows = out.serve[k];
        rows.resize(static_cast<std::size_t>(out.levels) + 1);
        for (int i = 0; i <= out.levels; ++i) {
            auto& row = rows[static_cast<std::size_t>(i)];
            row.resize(static_cast<std::size_t>(i) + 1);
            for (int j = 0; j <= i; ++j)
                row[static_cast<std::size_t>(j)] = serve_probability(profile, k, i, j);
        }
        out.hops_per_content[k] = expected_hops_levelwise(profile, k);
    }
    out.mean_hops = catalog_expected_hops(alpha, out.hops_per_content);
    return out;
}

namespace detail {
inline void check_rho(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
}
}  // namespace detail

/// Closed form for path-wise discovery on the grid under uniform occupancy:
/// requests either ride all the way to the server or stop at the first
/// on-path copy. Coincides with expected_hops_levelwise under HopNorm::exact.
inline double expected_hops_grid_pathwise(int levels, double rho, HopNorm norm = HopNorm::exact) {
    detail::check_rho(rho);
    const double q = 1.0 - rho;
    double server_term = 0.0;  // sum i^2 q^i
    double cache_term = 0.0;   // sum_i i * sum_{l<i} l q^l
    double qpow = 1.0, prefix = 0.0;
    for (int i = 1; i <= levels; ++i) {
        cache_term += static_cast<double>(i) * prefix;
        qpow *= q;
        server_term += static_cast<double>(i) * i * qpow;
        prefix += static_cast<double>(i) * qpow;
    }
    const double scale = (norm == HopNorm::exact) ? 4.0 : 1.0;
    return scale * (server_term + rho * cache_term) / (2.0 * levels * (levels + 1));
}

/// Closed form for expanding-ring discovery on the grid under uniform
/// occupancy, using interior ring populations 2l^2-2l+1 (no boundary
/// clipping; the simulator measures the clipped truth).
inline double expected_hops_grid_ring(int levels, double rho, HopNorm norm = HopNorm::exact) {
    detail::check_rho(rho);
    const double q = 1.0 - rho;
    double server_term = 0.0;
    double cache_term = 0.0;
    double prefix = 0.0;  // sum_{l<i} l q^{2l^2-2l+1} (1 - q^{4l})
    for (int i = 1; i <= levels; ++i) {
        cache_term += static_cast<double>(i) * prefix;
        const double ball = std::pow(q, 2.0 * i * i - 2.0 * i + 1.0);
        server_term += static_cast<double>(i) * i * ball;
        prefix += static_cast<double>(i) * ball * (1.0 - std::pow(q, 4.0 * i));
    }
    const double scale = (norm == HopNorm::exact) ? 4.0 : 1.0;
    return scale * (server_term + cache_term) / (2.0 * levels * (levels + 1));
}

/// Cell-network expected hops for path-wise discovery under uniform
/// occupancy, fluid approximation with n r^2 caches per cell. Includes the
/// O(r^2) level-one term from the exact accounting.
inline double expected_hops_random_pathwise(double n, double r, double rho) {
    detail::check_rho(rho);
    if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("range must be in (0, 1]");
    if (!(n >= 1.0)) throw std::invalid_argument("need at least one node");
    const double q = 1.0 - rho;
    const double per_cell = n * r * r;
    const int max_dist = static_cast<int>(std::floor(1.0 / r));
    const double qc = std::pow(q, per_cell);

    double server_term = 0.0;
    double cache_term = 0.0;
    double qpow = qc;          // qc^i
    double prefix = 0.0;       // sum_{l<i} l qc^l
    for (int i = 2; i <= max_dist; ++i) {
        prefix += (i - 1.0) * qpow;
        qpow *= qc;
        cache_term += i * prefix;
        server_term += static_cast<double>(i) * i * qpow;
    }
    return r * r * (q + server_term + (1.0 - qc) * cache_term);
}

/// Asymptotic regime classification. rho_exponent is a in rho ~ n^{-a};
/// r_exponent is b in r ~ n^{-b} (cell scenario only; logarithmic factors
/// count as exponent zero). Returns the predicted growth exponent of the
/// expected hop count in n; ties between regimes land on the boundary label.
struct RegimeVerdict {
    Scenario scenario = Scenario::grid_path;
    std::string label;
    double exponent = 0.0;
};

inline RegimeVerdict latency_regime(Scenario s, double rho_exponent, double r_exponent = 0.0) {
    const double a = std::max(0.0, rho_exponent);
    const double b = r_exponent;
    RegimeVerdict v;
    v.scenario = s;
    switch (s) {
        case Scenario::grid_path:
            v.exponent = std::min(0.5, a);
            v.label = a > 0.5 ? "server-dominated" : a < 0.5 ? "cache-dominated" : "boundary";
            break;
        case Scenario::grid_ring:
            v.exponent = std::min(0.5, a / 2.0);
            v.label = a > 1.0 ? "server-dominated" : a < 1.0 ? "cache-dominated" : "boundary";
            break;
        case Scenario::random_path:
            v.exponent = std::max(0.0, std::min(b, a - 1.0 + 2.0 * b));
            if (a > 1.0 - b) v.label = "server-dominated";
            else if (a < 1.0 - 2.0 * b) v.label = "saturated";
            else if (a == 1.0 - b || a == 1.0 - 2.0 * b) v.label = "boundary";
            else v.label = "cache-dominated";
            break;
    }
    return v;
}

}  // namespace icnlab
