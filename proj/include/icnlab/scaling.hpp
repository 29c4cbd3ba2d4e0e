#pragma once

// Numerical stand-in for order notation: evaluate a metric across network
// sizes, fit the log-log slope, and compare against the predicted exponent.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "icnlab/capacity.hpp"
#include "icnlab/content.hpp"
#include "icnlab/hopcount.hpp"

namespace icnlab {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

/// Ordinary least squares on (log size, log value). All inputs must be
/// positive. A constant series fits exactly with slope zero.
inline SlopeFit fit_loglog_slope(std::span<const double> sizes,
                                 std::span<const double> values) {
    if (sizes.size() != values.size())
        throw std::invalid_argument("size and value vectors must have equal length");
    if (sizes.size() < 2) throw std::invalid_argument("need at least two points");
    const std::size_t n = sizes.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(sizes[i] > 0.0) || !(values[i] > 0.0))
            throw std::invalid_argument("log-log fit needs positive points");
        sx += std::log(sizes[i]);
        sy += std::log(values[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(sizes[i]) - mx;
        const double dy = std::log(values[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("sizes must not be all equal");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy <= 1e-24) {
        fit.r_squared = 1.0;  // flat series, fit is exact
    } else {
        const double ss_res = syy - fit.slope * sxy;
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

enum class ScalingMetric { mean_hops, gamma_max };

inline const char* scaling_metric_name(ScalingMetric m) {
    return m == ScalingMetric::mean_hops ? "E_h" : "gamma_max";
}

/// rho(n) = coefficient * n^{-exponent}, clamped into [0, 1].
struct RhoLaw {
    double exponent = 0.0;
    double coefficient = 1.0;

    double operator()(double n) const {
        return std::clamp(coefficient * std::pow(n, -exponent), 0.0, 1.0);
    }
    static RhoLaw constant(double rho) { return {0.0, rho}; }
};

/// r(n) = coefficient * n^{-exponent}; the connectivity default uses
/// sqrt(log n / n), whose polynomial exponent is 0.5.
struct RangeLaw {
    double exponent = 0.5;
    double coefficient = 1.0;
    bool connectivity = true;

    double operator()(double n) const {
        if (connectivity) return std::sqrt(std::log(n) / n);
        return coefficient * std::pow(n, -exponent);
    }
};

struct ScalingVerdict {
    ScalingMetric metric = ScalingMetric::mean_hops;
    Scenario scenario = Scenario::grid_path;
    RhoLaw rho_law;
    std::vector<double> sizes;
    std::vector<double> values;
    double fitted_slope = 0.0;
    double r_squared = 0.0;
    double predicted_exponent = 0.0;
    std::string regime;
    double tolerance = 0.05;
    bool straddles_regimes = false;
    bool pass = false;
};

namespace detail {

inline double grid_metric(ScalingMetric metric, Scenario s, int levels, double rho) {
    const auto catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    const auto profile = OccupancyProfile::uniform_single(levels, rho);
    if (metric == ScalingMetric::mean_hops) {
        return s == Scenario::grid_path ? expected_hops_grid_pathwise(levels, rho)
                                        : expected_hops_grid_ring(levels, rho);
    }
    return throughput_capacity(s, catalog, profile, TopoParams::grid(levels)).gamma_max;
}

inline double random_metric(ScalingMetric metric, double n, double r, double rho) {
    if (metric == ScalingMetric::mean_hops) return expected_hops_random_pathwise(n, r, rho);
    const auto catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    const auto profile = OccupancyProfile::uniform_single(1, rho);
    return throughput_capacity(Scenario::random_path, catalog, profile,
                               TopoParams::random(n, r))
        .gamma_max;
}

/// Numeric straddle check: does rho(n) sit on different sides of a regime
/// threshold at the two ends of the size grid?
inline bool straddles(Scenario s, const RhoLaw& law, const RangeLaw& rl, double n_lo,
                      double n_hi) {
    auto side = [&](double n) {
        const double rho = law(n);
        std::vector<int> signs;
        switch (s) {
            case Scenario::grid_path:
                signs.push_back(rho * std::sqrt(n) < 1.0 ? -1 : 1);
                break;
            case Scenario::grid_ring:
                signs.push_back(rho * n < 1.0 ? -1 : 1);
                break;
            case Scenario::random_path: {
                const double r = rl(n);
                signs.push_back(rho * n * r < 1.0 ? -1 : 1);
                signs.push_back(rho * n * r * r < 1.0 ? -1 : 1);
                break;
            }
        }
        return signs;
    };
    return side(n_lo) != side(n_hi);
}

}  // namespace detail

/// Evaluate the analytic metric along the size grid, fit the slope, and
/// compare with the regime prediction. Grid scenarios take level counts as
/// sizes (node count 2L(L+1) is what gets fitted); the cell scenario takes
/// node counts with r from the range law.
inline ScalingVerdict verify_order(ScalingMetric metric, Scenario s, const RhoLaw& rho_law,
                                   std::span<const int> grid_levels,
                                   std::span<const double> random_sizes,
                                   const RangeLaw& range_law, double tolerance) {
    ScalingVerdict v;
    v.metric = metric;
    v.scenario = s;
    v.rho_law = rho_law;
    v.tolerance = tolerance;

    if (s == Scenario::random_path) {
        if (random_sizes.size() < 4) throw std::invalid_argument("need at least four sizes");
        for (double n : random_sizes) {
            const double r = range_law(n);
            const double rho = rho_law(n);
            v.sizes.push_back(n);
            v.values.push_back(detail::random_metric(metric, n, r, rho));
        }
    } else {
        if (grid_levels.size() < 4) throw std::invalid_argument("need at least four sizes");
        for (int levels : grid_levels) {
            const double n = 2.0 * levels * (levels + 1);
            v.sizes.push_back(n);
            v.values.push_back(detail::grid_metric(metric, s, levels, rho_law(n)));
        }
    }
    for (std::size_t i = 1; i < v.sizes.size(); ++i)
        if (!(v.sizes[i] > v.sizes[i - 1]))
            throw std::invalid_argument("sizes must be strictly increasing");

    const double b = (s == Scenario::random_path)
                         ? (range_law.connectivity ? 0.5 : range_law.exponent)
                         : 0.0;
    // a vanishing coefficient means rho is identically zero: decays faster
    // than any power, so classify with an unbounded exponent
    const double rho_exponent = rho_law.coefficient == 0.0
                                    ? std::numeric_limits<double>::infinity()
                                    : rho_law.exponent;
    const auto predicted = (metric == ScalingMetric::mean_hops)
                               ? latency_regime(s, rho_exponent, b)
                               : capacity_order(s, rho_exponent, b);
    v.predicted_exponent = predicted.exponent;
    v.regime = predicted.label;

    v.straddles_regimes =
        detail::straddles(s, rho_law, range_law, v.sizes.front(), v.sizes.back());

    const auto fit = fit_loglog_slope(v.sizes, v.values);
    v.fitted_slope = fit.slope;
    v.r_squared = fit.r_squared;
    v.pass = !v.straddles_regimes &&
             std::abs(v.fitted_slope - v.predicted_exponent) <= tolerance;
    return v;
}

inline ScalingVerdict verify_order_grid(ScalingMetric metric, Scenario s,
                                        const RhoLaw& rho_law,
                                        std::span<const int> grid_levels,
                                        double tolerance = 0.05) {
    return verify_order(metric, s, rho_law, grid_levels, {}, RangeLaw{}, tolerance);
}

inline ScalingVerdict verify_order_random(ScalingMetric metric, const RhoLaw& rho_law,
                                          std::span<const double> sizes,
                                          const RangeLaw& range_law,
                                          double tolerance = 0.15) {
    return verify_order(metric, Scenario::random_path, rho_law, {}, sizes, range_law,
                        tolerance);
}

}  // namespace icnlab
