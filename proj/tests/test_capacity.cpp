#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "icnlab/capacity.hpp"
#include "icnlab/rng.hpp"
#include "oracles.hpp"

using namespace icnlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const double kOneAlpha[] = {1.0};

// sum_{x=1}^{M} x a^x by the closed-form series identity
double geometric_weighted_sum(double a, int M) {
    return (std::pow(a, M + 1) * (M * a - M - 1.0) + a) / ((a - 1.0) * (a - 1.0));
}
}  // namespace

TEST_CASE("exact capacity index, hand values", "[capacity]") {
    CHECK(capacity_index_exact(OccupancyProfile::uniform_single(3, 1.0), kOneAlpha) ==
          kInfiniteRate);
    // L=2, no caching: denominator sum_i 4i*i = 20, index 12/20
    CHECK_THAT(capacity_index_exact(OccupancyProfile::uniform_single(2, 0.0), kOneAlpha),
               WithinAbs(0.6, 1e-15));
}

TEST_CASE("capacity index is the reciprocal of the level-wise hops", "[capacity]") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int levels = 1 + static_cast<int>(rng.index(40));
        std::vector<double> row{1.0};
        for (int j = 1; j <= levels; ++j) row.push_back(rng.uniform());
        const auto profile = OccupancyProfile::per_level({row});
        const double hops = expected_hops_levelwise(profile, 0);
        const double index = capacity_index_exact(profile, kOneAlpha);
        CHECK_THAT(index * hops, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("capacity index stays flat at fixed occupancy", "[capacity]") {
    double lo = kInfiniteRate, hi = 0.0;
    for (int L : {10, 20, 40, 80}) {
        const double idx =
            capacity_index_exact(OccupancyProfile::uniform_single(L, 0.875), kOneAlpha);
        lo = std::min(lo, idx);
        hi = std::max(hi, idx);
    }
    CHECK(hi / lo < 2.0);
}

TEST_CASE("interference bound", "[capacity]") {
    CHECK_THAT(interference_bound(Scenario::grid_path, 5.0 / 3.0, TopoParams::grid(2)),
               WithinAbs(0.6, 1e-15));
    CHECK_THAT(interference_bound(Scenario::random_path, 1.0, TopoParams::random(1e4, 0.01)),
               WithinAbs(1.0, 1e-12));
    CHECK(interference_bound(Scenario::grid_ring, 0.0, TopoParams::grid(4)) == kInfiniteRate);
}

TEST_CASE("server link load, hand values", "[capacity]") {
    const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    CHECK(server_link_load(Scenario::grid_path, cat, OccupancyProfile::uniform_single(5, 1.0),
                           1.0, TopoParams::grid(5)) == 0.0);
    CHECK_THAT(server_link_load(Scenario::grid_path, cat,
                                OccupancyProfile::uniform_single(2, 0.0), 1.0,
                                TopoParams::grid(2)),
               WithinAbs(3.0, 1e-15));
    const double psi_half = server_link_load(Scenario::grid_path, cat,
                                             OccupancyProfile::uniform_single(10, 0.5), 1.0,
                                             TopoParams::grid(10));
    CHECK_THAT(psi_half, WithinRel(geometric_weighted_sum(0.5, 10), 1e-12));
    CHECK_THAT(psi_half, WithinAbs(1.98828125, 1e-10));
}

TEST_CASE("server link load for ring discovery and cell networks", "[capacity]") {
    const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    // ring discovery, empty caches: every exponent term is one, so the sum
    // keeps its own level-one term plus sum_i i
    CHECK_THAT(server_link_load(Scenario::grid_ring, cat,
                                OccupancyProfile::uniform_single(2, 0.0), 1.0,
                                TopoParams::grid(2)),
               WithinAbs(4.0, 1e-15));
    CHECK(server_link_load(Scenario::grid_ring, cat, OccupancyProfile::uniform_single(6, 1.0),
                           1.0, TopoParams::grid(6)) == 0.0);
    // cell network, empty caches: n r^2 (1 + sum_{i=2..1/r} i)
    const double n = 1e4, r = 0.1;
    const double per_cell = n * r * r;
    double expect = 1.0;
    for (int i = 2; i <= 10; ++i) expect += i;
    CHECK_THAT(server_link_load(Scenario::random_path, cat,
                                OccupancyProfile::uniform_single(1, 0.0), 1.0,
                                TopoParams::random(n, r)),
               WithinAbs(per_cell * expect, 1e-9));
    CHECK(server_link_load(Scenario::random_path, cat,
                           OccupancyProfile::uniform_single(1, 1.0), 1.0,
                           TopoParams::random(n, r)) == 0.0);
}

TEST_CASE("capacity index averages contents by popularity", "[capacity]") {
    const double alphas[] = {0.25, 0.75};
    const auto profile = OccupancyProfile::uniform(30, {0.2, 0.7});
    const double h0 = expected_hops_levelwise(profile, 0);
    const double h1 = expected_hops_levelwise(profile, 1);
    const double idx = capacity_index_exact(profile, alphas);
    CHECK_THAT(idx, WithinRel(1.0 / (0.25 * h0 + 0.75 * h1), 1e-12));
}

TEST_CASE("server link load is linear in gamma", "[capacity]") {
    const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    const auto profile = OccupancyProfile::uniform_single(12, 0.3);
    const auto tp = TopoParams::grid(12);
    for (Scenario s : {Scenario::grid_path, Scenario::grid_ring}) {
        const double base = server_link_load(s, cat, profile, 1.0, tp);
        for (double gamma : {0.25, 2.0, 17.0})
            CHECK_THAT(server_link_load(s, cat, profile, gamma, tp),
                       WithinAbs(gamma * base, 1e-12 * std::max(1.0, gamma * base)));
    }
    const auto rp = TopoParams::random(1e4, 0.05);
    const double base = server_link_load(Scenario::random_path, cat, profile, 1.0, rp);
    CHECK_THAT(server_link_load(Scenario::random_path, cat, profile, 3.0, rp),
               WithinAbs(3.0 * base, 1e-12 * std::max(1.0, 3.0 * base)));
}

TEST_CASE("server load equals per-node flow accumulation", "[capacity]") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const int levels = 1 + static_cast<int>(rng.index(50));
        std::vector<double> row{1.0};
        for (int j = 1; j <= levels; ++j) row.push_back(rng.uniform());
        const auto profile = OccupancyProfile::per_level({row});
        const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
        const GridTopology topo(levels);
        const double formula = server_link_load(Scenario::grid_path, cat, profile, 1.0,
                                                TopoParams::grid(levels));
        const double brute = oracles::server_crossings_per_link(topo, profile, 0);
        CHECK_THAT(formula, WithinAbs(brute, 1e-12 * std::max(1.0, brute)));
    }
}

TEST_CASE("per-level profiles are a grid-path extension only", "[capacity]") {
    const auto profile = OccupancyProfile::per_level({{1.0, 0.4, 0.3}});
    const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    CHECK_THROWS_AS(server_link_load(Scenario::grid_ring, cat, profile, 1.0,
                                     TopoParams::grid(2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(server_link_load(Scenario::random_path, cat, profile, 1.0,
                                     TopoParams::random(100, 0.5)),
                    std::invalid_argument);
    CHECK_NOTHROW(server_link_load(Scenario::grid_path, cat, profile, 1.0,
                                   TopoParams::grid(2)));
}

TEST_CASE("supportable rate", "[capacity]") {
    const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    CHECK_THAT(supportable_rate(Scenario::grid_path, cat,
                                OccupancyProfile::uniform_single(2, 0.0), TopoParams::grid(2)),
               WithinAbs(1.0 / 3.0, 1e-15));
    CHECK(supportable_rate(Scenario::grid_path, cat, OccupancyProfile::uniform_single(9, 1.0),
                           TopoParams::grid(9)) == kInfiniteRate);
    CHECK_THAT(supportable_rate(Scenario::grid_path, cat,
                                OccupancyProfile::uniform_single(50, 0.875),
                                TopoParams::grid(50)),
               WithinRel(1.0 / geometric_weighted_sum(0.125, 50), 1e-12));
}

TEST_CASE("combined capacity takes the binding bottleneck", "[capacity]") {
    const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    SECTION("no caching: the server links bind") {
        const auto rep = throughput_capacity(Scenario::grid_path, cat,
                                             OccupancyProfile::uniform_single(2, 0.0),
                                             TopoParams::grid(2));
        CHECK_THAT(rep.interference_bound, WithinAbs(0.6, 1e-12));
        CHECK_THAT(rep.supportable_rate, WithinAbs(1.0 / 3.0, 1e-12));
        CHECK_THAT(rep.gamma_max, WithinAbs(1.0 / 3.0, 1e-12));
        CHECK(rep.regime == "server-bottleneck");
    }
    SECTION("all-local degeneracy yields sentinels") {
        const auto rep = throughput_capacity(Scenario::grid_path, cat,
                                             OccupancyProfile::uniform_single(4, 1.0),
                                             TopoParams::grid(4));
        CHECK(rep.interference_bound == kInfiniteRate);
        CHECK(rep.supportable_rate == kInfiniteRate);
        CHECK(rep.gamma_max == kInfiniteRate);
    }
    SECTION("fixed occupancy keeps gamma_max within a constant across sizes") {
        double lo = kInfiniteRate, hi = 0.0;
        for (int L : {10, 20, 40, 80, 160, 320}) {
            const auto rep = throughput_capacity(Scenario::grid_path, cat,
                                                 OccupancyProfile::uniform_single(L, 0.875),
                                                 TopoParams::grid(L));
            lo = std::min(lo, rep.gamma_max);
            hi = std::max(hi, rep.gamma_max);
            // rho^2-scale bottleneck: 1/psi with psi -> (1-rho)/rho^2
            CHECK_THAT(rep.gamma_max,
                       WithinRel(1.0 / geometric_weighted_sum(0.125, L), 1e-9));
        }
        CHECK(hi / lo < 2.0);
    }
}

TEST_CASE("gamma_max grows with occupancy", "[capacity]") {
    const auto cat = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    double prev = -1.0;
    for (double rho = 0.0; rho < 1.0; rho += 0.01) {
        const auto rep = throughput_capacity(Scenario::grid_path, cat,
                                             OccupancyProfile::uniform_single(12, rho),
                                             TopoParams::grid(12));
        CHECK(rep.gamma_max >= prev - 1e-12);
        prev = rep.gamma_max;
    }
}

TEST_CASE("capacity order exponents", "[capacity]") {
    CHECK(capacity_order(Scenario::grid_path, 0.0).exponent == 0.0);
    CHECK(capacity_order(Scenario::grid_path, 1.0).exponent == -1.0);
    CHECK_THAT(capacity_order(Scenario::grid_ring, 0.5).exponent, WithinAbs(-0.5, 1e-15));
    // connectivity range, constant rho: saturates at the cell-population log
    const auto random = capacity_order(Scenario::random_path, 0.0, 0.5);
    CHECK(random.exponent == 0.0);
}

TEST_CASE("interference-only order exponents", "[capacity]") {
    // the interference ceiling alone is looser than the combined bound:
    // no caching costs only 1/sqrt(n) here, not the 1/n of the server links
    CHECK(interference_order(Scenario::grid_path, 1.0).exponent == -0.5);
    CHECK(interference_order(Scenario::grid_path, 0.25).exponent == -0.25);
    CHECK(interference_order(Scenario::grid_ring, 0.5).exponent == -0.25);
    // cell network at connectivity range, constant rho: pinned by 1/(n r^2)
    CHECK(interference_order(Scenario::random_path, 0.0, 0.5).exponent == 0.0);
    // wider range and vanishing rho: the relay term b-1 binds
    CHECK_THAT(interference_order(Scenario::random_path, 2.0, 0.4).exponent,
               WithinAbs(-0.6, 1e-15));
    for (double a : {0.0, 0.3, 0.7, 1.2})
        CHECK(interference_order(Scenario::grid_path, a).exponent >=
              capacity_order(Scenario::grid_path, a).exponent);
}

TEST_CASE("traffic metrics", "[capacity]") {
    CHECK(total_request_rate(100, 0.5, 1.0) == 50.0);
    CHECK(total_request_rate(80, 1.0, 3.0) == 0.0);
    // large request rate saturates at n * mu
    const double lambda = 1e6, mu = 1.0, n = 100;
    const double rho = lambda / (lambda + mu);
    CHECK_THAT(total_request_rate(n, rho, lambda), WithinRel(n * mu, 1e-4));

    CHECK(total_traffic(100, 0.5, 1.0, 8.0, 0.0) == 0.0);
    CHECK(total_traffic(100, 0.5, 1.0, 8.0, 2.0) == 800.0);
}

TEST_CASE("traffic against request rate is unimodal", "[capacity]") {
    const int L = 16;
    const double n = 2.0 * L * (L + 1);
    std::vector<double> traffic;
    for (double e = -2.0; e <= 2.0 + 1e-9; e += 0.1) {
        const double lambda = std::pow(10.0, e);
        const double rho = lambda / (lambda + 1.0);
        traffic.push_back(
            total_traffic(n, rho, lambda, 1.0, expected_hops_grid_pathwise(L, rho)));
    }
    const auto peak = std::max_element(traffic.begin(), traffic.end());
    CHECK(peak != traffic.begin());
    CHECK(peak != traffic.end() - 1);
    CHECK(*peak > traffic.front());
    CHECK(*peak > traffic.back());
}

TEST_CASE("edge and on-path profiles sit within a constant factor", "[capacity]") {
    const double D = std::log(2.0), beta = 1.0;
    const double rho_edge = 1.0 - std::exp(-D * beta);
    for (int L : {50, 100, 150, 200}) {
        const auto edge = OccupancyProfile::uniform_single(L, rho_edge);
        const auto onpath =
            OccupancyProfile::per_level({beta_prime_profile(L, beta, D).rho});
        const double edge_idx = capacity_index_exact(edge, kOneAlpha);
        const double onpath_idx = capacity_index_exact(onpath, kOneAlpha);
        const double ratio = onpath_idx / edge_idx;
        CHECK(ratio > 1.0 / 3.0);
        CHECK(ratio < 3.0);
    }
    // the closed form for the edge profile
    const double closed = (1.0 - std::exp(-D * beta)) / std::exp(-D * beta);
    const double idx200 =
        capacity_index_exact(OccupancyProfile::uniform_single(200, rho_edge), kOneAlpha);
    CHECK(std::abs(idx200 - closed) / closed < 0.02);
}

TEST_CASE("traffic report aggregates per-content products", "[capacity]") {
    const double rho[] = {0.5, 0.2};
    const double lambda[] = {1.0, 2.0};
    const double sizes[] = {8.0, 1.0};
    const double hops[] = {2.0, 3.0};
    const auto rep = traffic_report(100.0, rho, lambda, sizes, hops);
    CHECK_THAT(rep.request_rate[0], WithinAbs(50.0, 1e-12));
    CHECK_THAT(rep.request_rate[1], WithinAbs(160.0, 1e-12));
    CHECK_THAT(rep.traffic[0], WithinAbs(800.0, 1e-12));
    CHECK_THAT(rep.traffic[1], WithinAbs(480.0, 1e-12));
    CHECK_THAT(rep.total_traffic, WithinAbs(1280.0, 1e-12));
}
