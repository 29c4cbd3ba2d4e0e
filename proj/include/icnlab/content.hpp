#pragma once

// Content catalog and steady-state cache-occupancy analytics.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace icnlab {

enum class TtlLaw { exponential, fixed_duration };

struct TtlSpec {
    TtlLaw law = TtlLaw::exponential;
    double eta = 1.0;       // expiry rate, exponential law
    double duration = 1.0;  // timer length, fixed law
    bool refresh_on_hit = false;

    static TtlSpec exponential(double eta) { return {TtlLaw::exponential, eta, 0.0, false}; }
    static TtlSpec fixed(double duration, bool refresh_on_hit = false) {
        return {TtlLaw::fixed_duration, 0.0, duration, refresh_on_hit};
    }
};

struct ContentItem {
    double size_bits = 1.0;    // B_k
    double popularity = 1.0;   // alpha_k
    double request_rate = 1.0; // beta_k, per node, requests/sec
    TtlSpec ttl;
};

/// Catalog of m items. Popularities must sum to one; sizes positive; rates
/// nonnegative. The catalog is independent of network size.
class ContentCatalog {
public:
    ContentCatalog() = default;

    explicit ContentCatalog(std::vector<ContentItem> items) : items_(std::move(items)) {
        if (items_.empty()) throw std::invalid_argument("catalog must hold at least one item");
        double alpha_sum = 0.0;
        for (const auto& it : items_) {
            if (!(it.size_bits > 0.0)) throw std::invalid_argument("content size must be positive");
            if (it.popularity < 0.0) throw std::invalid_argument("popularity must be nonnegative");
            if (it.request_rate < 0.0) throw std::invalid_argument("request rate must be nonnegative");
            if (it.ttl.law == TtlLaw::exponential && it.ttl.eta < 0.0)
                throw std::invalid_argument("expiry rate must be nonnegative");
            if (it.ttl.law == TtlLaw::fixed_duration && !(it.ttl.duration > 0.0))
                throw std::invalid_argument("ttl duration must be positive");
            alpha_sum += it.popularity;
        }
        if (std::abs(alpha_sum - 1.0) > 1e-12)
            throw std::invalid_argument("popularities must sum to 1, got " + std::to_string(alpha_sum));
    }

    /// Convenience: single item with popularity one.
    static ContentCatalog single(double beta, TtlSpec ttl, double size_bits = 1.0) {
        return ContentCatalog({ContentItem{size_bits, 1.0, beta, ttl}});
    }

    std::size_t size() const { return items_.size(); }
    const ContentItem& item(std::size_t k) const { return items_[k]; }
    const std::vector<ContentItem>& items() const { return items_; }

    std::vector<double> popularities() const {
        std::vector<double> a;
        a.reserve(items_.size());
        for (const auto& it : items_) a.push_back(it.popularity);
        return a;
    }

private:
    std::vector<ContentItem> items_;
};

/// Per-content, per-level presence probability. Level 0 is the server and is
/// pinned to 1. The uniform variant stores one value per content and expands
/// it across levels 1..L.
class OccupancyProfile {
public:
    static OccupancyProfile uniform(int levels, std::vector<double> rho_per_content) {
        check_levels(levels);
        for (double r : rho_per_content) check_prob(r);
        OccupancyProfile p;
        p.levels_ = levels;
        p.uniform_ = std::move(rho_per_content);
        p.is_uniform_ = true;
        return p;
    }

    static OccupancyProfile uniform_single(int levels, double rho) {
        return uniform(levels, std::vector<double>{rho});
    }

    /// rows[k][j] for j in 0..L; rows[k][0] must be 1.
    static OccupancyProfile per_level(std::vector<std::vector<double>> rows) {
        if (rows.empty()) throw std::invalid_argument("profile needs at least one content");
        OccupancyProfile p;
        p.levels_ = static_cast<int>(rows.front().size()) - 1;
        check_levels(p.levels_);
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != p.levels_ + 1)
                throw std::invalid_argument("profile rows must share one level count");
            if (row[0] != 1.0)
                throw std::invalid_argument("server level of a profile must be 1");
            for (double r : row) check_prob(r);
        }
        p.rows_ = std::move(rows);
        p.is_uniform_ = false;
        return p;
    }

    int levels() const { return levels_; }
    std::size_t contents() const { return is_uniform_ ? uniform_.size() : rows_.size(); }
    bool is_uniform() const { return is_uniform_; }

    double rho(std::size_t content, int level) const {
        if (level == 0) return 1.0;
        return is_uniform_ ? uniform_[content]
                           : rows_[content][static_cast<std::size_t>(level)];
    }

    double uniform_rho(std::size_t content) const {
        if (!is_uniform_) throw std::logic_error("profile is not uniform");
        return uniform_[content];
    }

private:
    static void check_levels(int levels) {
        if (levels < 1) throw std::invalid_argument("profile needs at least one level");
    }
    static void check_prob(double r) {
        if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("occupancy must lie in [0, 1]");
    }

    int levels_ = 0;
    bool is_uniform_ = true;
    std::vector<double> uniform_;
    std::vector<std::vector<double>> rows_;
};

/// Steady-state presence probability of an on/off cache slot with mean on
/// time 1/mu and mean off time 1/lambda: lambda / (lambda + mu).
inline double rho_steady(double lambda, double mu) {
    if (lambda < 0.0 || mu < 0.0) throw std::invalid_argument("rates must be nonnegative");
    if (mu == 0.0) return lambda > 0.0 ? 1.0 : 0.0;  // never expires
    return lambda / (lambda + mu);
}

/// Edge caching with exponential timers: requests at rate beta, expiries at
/// rate eta.
inline double rho_edge_ttl(double beta, double eta) { return rho_steady(beta, eta); }

/// Fixed timer of length `ttl` refreshed by a Poisson stream of rate
/// `total_rate`: present iff some arrival happened within the last ttl.
/// An infinite ttl pins the slot present (the server convention).
inline double rho_fixed_ttl(double total_rate, double ttl) {
    if (total_rate < 0.0) throw std::invalid_argument("rate must be nonnegative");
    if (std::isinf(ttl)) return 1.0;
    if (!(ttl > 0.0)) throw std::invalid_argument("ttl must be positive");
    return -std::expm1(-ttl * total_rate);
}

/// Characteristic time D solving sum_k (1 - e^{-rate_k D}) = capacity, the
/// fixed-TTL surrogate for an LRU cache of the given item capacity. The left
/// side is strictly increasing in D, so the root is unique; found by
/// bracketing bisection to 1e-12 relative width.
inline double che_characteristic_time(std::span<const double> request_rates, double capacity) {
    const double m = static_cast<double>(request_rates.size());
    if (request_rates.empty()) throw std::invalid_argument("need at least one request rate");
    for (double r : request_rates)
        if (!(r > 0.0)) throw std::invalid_argument("request rates must be positive");
    if (!(capacity > 0.0)) throw std::invalid_argument("cache capacity must be positive");
    if (capacity >= m)
        throw std::domain_error("cache fits everything: no finite characteristic time");

    auto filled = [&](double d) {
        double s = 0.0;
        for (double r : request_rates) s += -std::expm1(-r * d);
        return s;
    };

    double lo = 0.0, hi = 1.0;
    while (filled(hi) < capacity) {
        hi *= 2.0;
        if (hi > 1e300) throw std::runtime_error("characteristic time bracket overflow");
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (filled(mid) < capacity ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// External arrival rates and induced occupancies across grid levels.
struct LevelRateProfile {
    int levels = 0;
    std::vector<double> beta_prime;  // index 1..L, edge boundary is 0
    std::vector<double> total_rate;  // beta + beta_prime per level
    std::vector<double> rho;         // index 0..L, rho[0] = 1

    std::vector<double> occupancy_row() const { return rho; }
};

/// Backward sweep for on-path caching with fixed per-level timers: the edge
/// level sees only local requests, and a level-i node receives the leftover
/// stream of level i+1 scaled by (i+1)/i.
inline LevelRateProfile beta_prime_profile(int levels, double beta,
                                           std::span<const double> ttl_per_level) {
    if (levels < 1) throw std::invalid_argument("need at least one level");
    if (beta < 0.0) throw std::invalid_argument("request rate must be nonnegative");
    if (ttl_per_level.size() != static_cast<std::size_t>(levels))
        throw std::invalid_argument("need one ttl per level 1..L");
    for (double d : ttl_per_level)
        if (!(d > 0.0) || std::isinf(d)) throw std::invalid_argument("level ttls must be finite and positive");

    LevelRateProfile out;
    out.levels = levels;
    out.beta_prime.assign(static_cast<std::size_t>(levels) + 1, 0.0);
    out.total_rate.assign(static_cast<std::size_t>(levels) + 1, 0.0);
    out.rho.assign(static_cast<std::size_t>(levels) + 1, 0.0);
    out.rho[0] = 1.0;

    auto ttl = [&](int i) { return ttl_per_level[static_cast<std::size_t>(i - 1)]; };

    out.beta_prime[static_cast<std::size_t>(levels)] = 0.0;
    out.total_rate[static_cast<std::size_t>(levels)] = beta;
    out.rho[static_cast<std::size_t>(levels)] = rho_fixed_ttl(beta, ttl(levels));
    for (int i = levels - 1; i >= 1; --i) {
        const auto up = static_cast<std::size_t>(i + 1);
        const double leftover = (1.0 - out.rho[up]) * out.total_rate[up];
        out.beta_prime[static_cast<std::size_t>(i)] = leftover * (i + 1) / i;
        out.total_rate[static_cast<std::size_t>(i)] = beta + out.beta_prime[static_cast<std::size_t>(i)];
        out.rho[static_cast<std::size_t>(i)] =
            rho_fixed_ttl(out.total_rate[static_cast<std::size_t>(i)], ttl(i));
    }
    return out;
}

inline LevelRateProfile beta_prime_profile(int levels, double beta, double ttl) {
    std::vector<double> per_level(static_cast<std::size_t>(levels), ttl);
    return beta_prime_profile(levels, beta, per_level);
}

enum class UniformOccupancyMode { edge_exponential, edge_fixed_ttl };

/// Uniform per-content occupancy from edge caching: every cache sees only
/// local requests, so the presence probability is the same at every level.
inline OccupancyProfile occupancy_uniform(const ContentCatalog& catalog, int levels,
                                          UniformOccupancyMode mode) {
    std::vector<double> rho;
    rho.reserve(catalog.size());
    for (const auto& it : catalog.items()) {
        switch (mode) {
            case UniformOccupancyMode::edge_exponential:
                if (it.ttl.law != TtlLaw::exponential)
                    throw std::invalid_argument("edge-exponential occupancy needs exponential ttl items");
                rho.push_back(rho_edge_ttl(it.request_rate, it.ttl.eta));
                break;
            case UniformOccupancyMode::edge_fixed_ttl:
                if (it.ttl.law != TtlLaw::fixed_duration)
                    throw std::invalid_argument("edge-fixed occupancy needs fixed ttl items");
                rho.push_back(rho_fixed_ttl(it.request_rate, it.ttl.duration));
                break;
        }
    }
    return OccupancyProfile::uniform(levels, std::move(rho));
}

}  // namespace icnlab
