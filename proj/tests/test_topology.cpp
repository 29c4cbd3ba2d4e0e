#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>

#include "icnlab/topology.hpp"
#include "oracles.hpp"

using namespace icnlab;

TEST_CASE("grid node counts follow 2L(L+1)", "[topology]") {
    CHECK(GridTopology(1).node_count() == 4);
    CHECK(GridTopology(2).node_count() == 12);
    CHECK(GridTopology(10).node_count() == 220);
    CHECK_THROWS_AS(GridTopology(0), std::invalid_argument);
}

TEST_CASE("grid levels match exhaustive lattice enumeration", "[topology]") {
    for (int L = 1; L <= 50; ++L) {
        GridTopology topo(L);
        REQUIRE(topo.node_count() == oracles::count_diamond_nodes(L));
        std::map<int, long> by_level;
        for (const auto& c : topo.nodes()) by_level[c.level()]++;
        for (int i = 1; i <= L; ++i) {
            CHECK(by_level[i] == 4 * i);
            CHECK(by_level[i] == oracles::count_at_level(L, i));
        }
    }
}

TEST_CASE("ring population closed form and clipping", "[topology]") {
    GridTopology topo(12);
    CHECK(topo.ring_population({0, 1}, 0) == 1);
    CHECK(topo.ring_population({0, 1}, 1) == 5);
    CHECK(topo.ring_population({1, 1}, 2) == 13);
    CHECK(GridTopology::interior_ring_population(2) == 13);

    SECTION("interior formula matches enumeration") {
        for (int l = 0; l <= 10; ++l) {
            const GridCoord center{1, 1};
            if (center.level() + l <= topo.levels())
                CHECK(topo.ring_population(center, l) ==
                      GridTopology::interior_ring_population(l));
        }
    }
    SECTION("clipped counts match enumeration everywhere") {
        for (const GridCoord center : {GridCoord{12, 0}, GridCoord{6, 6}, GridCoord{-3, 9}}) {
            for (int l = 0; l <= 2 * topo.levels(); l += 3)
                CHECK(topo.ring_population(center, l) ==
                      oracles::ball_population(topo.levels(), center, l));
        }
    }
}

TEST_CASE("descent paths drop one level per hop and end at the server", "[topology]") {
    GridTopology topo(7);
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const GridCoord start = topo.node_at(static_cast<int>(rng.index(
            static_cast<std::size_t>(topo.node_count()))));
        const auto path = topo.sample_descent_path(start, rng);
        REQUIRE(static_cast<int>(path.size()) == start.level() + 1);
        for (std::size_t i = 1; i < path.size(); ++i)
            CHECK(path[i].level() == path[i - 1].level() - 1);
        CHECK(path.back().is_server());
    }
}

TEST_CASE("axis nodes have a unique descent", "[topology]") {
    GridTopology topo(4);
    Rng rng(1);
    const auto path = topo.sample_descent_path({0, 3}, rng);
    REQUIRE(path.size() == 4);
    CHECK(path[1] == GridCoord{0, 2});
    CHECK(path[2] == GridCoord{0, 1});
    CHECK(path[3] == GridCoord{0, 0});
}

TEST_CASE("off-axis first hops split evenly", "[topology]") {
    GridTopology topo(3);
    Rng rng(7);
    int via_x = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const GridCoord step = topo.sample_descent_step({1, 1}, rng);
        REQUIRE((step == GridCoord{0, 1} || step == GridCoord{1, 0}));
        if (step == GridCoord{0, 1}) ++via_x;
    }
    CHECK(std::abs(via_x / static_cast<double>(trials) - 0.5) < 0.02);
}

TEST_CASE("random topology placement is reproducible", "[topology]") {
    RandomTopology a(500, 0.2, 99);
    RandomTopology b(500, 0.2, 99);
    REQUIRE(a.positions().size() == b.positions().size());
    for (std::size_t i = 0; i < a.positions().size(); ++i) {
        CHECK(a.positions()[i].x == b.positions()[i].x);
        CHECK(a.positions()[i].y == b.positions()[i].y);
    }
    RandomTopology c(500, 0.2, 100);
    bool identical = true;
    for (std::size_t i = 0; i < a.positions().size(); ++i)
        if (a.positions()[i].x != c.positions()[i].x) identical = false;
    CHECK_FALSE(identical);
}

TEST_CASE("cell occupancy looks binomial", "[topology]") {
    RandomTopology topo(1000, 0.1, 7);
    REQUIRE(topo.cells_per_side() == 10);
    long total = 0;
    long max_cell = 0;
    for (int cx = 0; cx < 10; ++cx)
        for (int cy = 0; cy < 10; ++cy) {
            const long sz = static_cast<long>(topo.members({cx, cy}).size());
            total += sz;
            max_cell = std::max(max_cell, sz);
        }
    CHECK(total == 1000);  // mean occupancy is exactly 10 over 100 cells
    const double sigma = std::sqrt(1000 * 0.01 * 0.99);
    CHECK(max_cell <= 10 + 5 * sigma);
}

TEST_CASE("connectivity flag follows the range threshold", "[topology]") {
    CHECK_FALSE(RandomTopology(100, 0.05, 1).connectivity_flag());
    CHECK(RandomTopology(100, 0.25, 1).connectivity_flag());
    CHECK(RandomTopology(100, 1.0, 1).connectivity_flag());
    CHECK_THROWS_AS(RandomTopology(100, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(RandomTopology(100, 1.5, 1), std::invalid_argument);
}

TEST_CASE("single cell when range covers the square", "[topology]") {
    RandomTopology topo(100, 1.0, 3);
    CHECK(topo.cells_per_side() == 1);
    CHECK(topo.members({0, 0}).size() == 100);
    CHECK(topo.server_cell() == CellCoord{0, 0});
}

TEST_CASE("cell ring distance is Manhattan on cell coordinates", "[topology]") {
    CHECK(cell_ring_distance({3, 3}, {3, 3}) == 0);
    CHECK(cell_ring_distance({3, 3}, {4, 3}) == 1);
    CHECK(cell_ring_distance({1, 2}, {3, 5}) == 5);
}
