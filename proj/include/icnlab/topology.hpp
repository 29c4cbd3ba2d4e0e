#pragma once

// Network geometries: a diamond grid of Manhattan rings around a central
// server node, and a random unit-square network partitioned into cells.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "icnlab/rng.hpp"

namespace icnlab {

/// Integer lattice offset from the server at the origin.
struct GridCoord {
    int x = 0;
    int y = 0;

    int level() const { return std::abs(x) + std::abs(y); }
    bool is_server() const { return x == 0 && y == 0; }

    friend bool operator==(const GridCoord& a, const GridCoord& b) {
        return a.x == b.x && a.y == b.y;
    }
};

inline int manhattan(GridCoord a, GridCoord b) {
    return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

/// Concentric-ring grid: the server sits at the origin and level i holds the
/// 4i requester nodes at Manhattan distance i, up to the outermost level L.
/// Total requester count is N = 2L(L+1).
class GridTopology {
public:
    explicit GridTopology(int levels) : levels_(levels) {
        if (levels < 1) throw std::invalid_argument("grid topology needs at least one level");
        const int side = 2 * levels + 1;
        index_.assign(static_cast<std::size_t>(side) * side, -1);
        nodes_.reserve(static_cast<std::size_t>(node_count_for(levels)));
        for (int d = 1; d <= levels; ++d) {
            for (int x = -d; x <= d; ++x) {
                const int rest = d - std::abs(x);
                if (rest == 0) {
                    push_node({x, 0});
                } else {
                    push_node({x, rest});
                    push_node({x, -rest});
                }
            }
        }
    }

    int levels() const { return levels_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    static int nodes_at_level(int i) { return 4 * i; }
    static long node_count_for(int levels) { return 2L * levels * (levels + 1); }

    const std::vector<GridCoord>& nodes() const { return nodes_; }
    GridCoord node_at(int idx) const { return nodes_[static_cast<std::size_t>(idx)]; }

    /// True for requester nodes; the server at the origin is excluded.
    bool contains(GridCoord c) const {
        const int lvl = c.level();
        return lvl >= 1 && lvl <= levels_;
    }

    /// True for any lattice point of the deployment, server included.
    bool in_region(GridCoord c) const { return c.level() <= levels_; }

    int node_index(GridCoord c) const {
        if (!contains(c)) return -1;
        return index_[flat(c)];
    }

    /// Closed-form count of lattice points within `radius` hops of an
    /// interior point (one whose ball does not touch the boundary).
    static long interior_ring_population(long radius) {
        if (radius < 0) throw std::invalid_argument("radius must be nonnegative");
        return 2 * radius * radius + 2 * radius + 1;
    }

    /// Exact count of lattice points of the deployment (server included)
    /// within `radius` hops of `center`, clipped to the diamond boundary.
    long ring_population(GridCoord center, int radius) const {
        if (radius < 0 || radius > 2 * levels_)
            throw std::invalid_argument("radius outside [0, 2L]");
        if (!in_region(center)) throw std::invalid_argument("center outside topology");
        if (center.level() + radius <= levels_) return interior_ring_population(radius);
        long count = 0;
        for (int d = 0; d <= radius; ++d) count += ring_size(center, d);
        return count;
    }

    /// Requester nodes at exactly `dist` hops from `center` (server excluded,
    /// clipped at the boundary). dist = 0 yields the center itself when it is
    /// a requester node.
    std::vector<GridCoord> ring(GridCoord center, int dist) const {
        std::vector<GridCoord> out;
        if (dist == 0) {
            if (contains(center)) out.push_back(center);
            return out;
        }
        out.reserve(static_cast<std::size_t>(4) * dist);
        for (int dx = -dist; dx <= dist; ++dx) {
            const int rest = dist - std::abs(dx);
            const GridCoord a{center.x + dx, center.y + rest};
            if (contains(a)) out.push_back(a);
            if (rest != 0) {
                const GridCoord b{center.x + dx, center.y - rest};
                if (contains(b)) out.push_back(b);
            }
        }
        return out;
    }

    /// Neighbors of `from` exactly one level closer to the server. Axis nodes
    /// have a single descent, off-axis nodes have two.
    std::vector<GridCoord> descent_options(GridCoord from) const {
        std::vector<GridCoord> opts;
        if (from.is_server()) return opts;
        if (from.x != 0) opts.push_back({from.x > 0 ? from.x - 1 : from.x + 1, from.y});
        if (from.y != 0) opts.push_back({from.x, from.y > 0 ? from.y - 1 : from.y + 1});
        return opts;
    }

    GridCoord sample_descent_step(GridCoord from, Rng& rng) const {
        const auto opts = descent_options(from);
        if (opts.size() == 1) return opts[0];
        return opts[rng.index(opts.size())];
    }

    /// Shortest path from a requester to the server, one uniformly random
    /// one-level descent per hop. Returns the full node sequence including
    /// both endpoints; length is level(from) hops.
    std::vector<GridCoord> sample_descent_path(GridCoord from, Rng& rng) const {
        if (!contains(from)) throw std::invalid_argument("descent path needs a requester node");
        std::vector<GridCoord> path;
        path.reserve(static_cast<std::size_t>(from.level()) + 1);
        GridCoord cur = from;
        path.push_back(cur);
        while (!cur.is_server()) {
            cur = sample_descent_step(cur, rng);
            path.push_back(cur);
        }
        return path;
    }

private:
    std::size_t flat(GridCoord c) const {
        const int side = 2 * levels_ + 1;
        return static_cast<std::size_t>(c.y + levels_) * side + (c.x + levels_);
    }

    void push_node(GridCoord c) {
        index_[flat(c)] = static_cast<int>(nodes_.size());
        nodes_.push_back(c);
    }

    long ring_size(GridCoord center, int dist) const {
        if (dist == 0) return in_region(center) ? 1 : 0;
        long count = 0;
        for (int dx = -dist; dx <= dist; ++dx) {
            const int rest = dist - std::abs(dx);
            if (in_region({center.x + dx, center.y + rest})) ++count;
            if (rest != 0 && in_region({center.x + dx, center.y - rest})) ++count;
        }
        return count;
    }

    int levels_;
    std::vector<GridCoord> nodes_;
    std::vector<int> index_;
};

struct Point2 {
    double x = 0;
    double y = 0;
};

struct CellCoord {
    int cx = 0;
    int cy = 0;

    friend bool operator==(const CellCoord& a, const CellCoord& b) {
        return a.cx == b.cx && a.cy == b.cy;
    }
};

inline int cell_ring_distance(CellCoord a, CellCoord b) {
    return std::abs(a.cx - b.cx) + std::abs(a.cy - b.cy);
}

/// n nodes placed uniformly on the unit square, partitioned into square cells
/// of side r. The server lives in the cell containing the square's center.
/// Placement is deterministic in (n, r, seed).
class RandomTopology {
public:
    RandomTopology(int n, double r, std::uint64_t seed, double connectivity_c = 1.0)
        : n_(n), r_(r), seed_(seed) {
        if (n < 1) throw std::invalid_argument("random topology needs at least one node");
        if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("transmission range must be in (0, 1]");

        cells_per_side_ = cells_for_range(r);
        cell_members_.assign(static_cast<std::size_t>(cells_per_side_) * cells_per_side_, {});

        Rng rng(seed);
        pos_.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Point2 p{rng.uniform(), rng.uniform()};
            pos_.push_back(p);
            cell_members_[flat(cell_of(p))].push_back(i);
        }
        server_cell_ = cell_of({0.5, 0.5});
        connected_ = r >= connectivity_c * std::sqrt(std::log(static_cast<double>(n)) / n);
    }

    int node_count() const { return n_; }
    double range() const { return r_; }
    std::uint64_t seed() const { return seed_; }
    int cells_per_side() const { return cells_per_side_; }
    bool connectivity_flag() const { return connected_; }
    CellCoord server_cell() const { return server_cell_; }
    const std::vector<Point2>& positions() const { return pos_; }

    CellCoord cell_of(Point2 p) const {
        auto clampi = [this](int v) { return std::clamp(v, 0, cells_per_side_ - 1); };
        return {clampi(static_cast<int>(p.x / r_)), clampi(static_cast<int>(p.y / r_))};
    }

    CellCoord cell_of_node(int node) const { return cell_of(pos_[static_cast<std::size_t>(node)]); }

    const std::vector<int>& members(CellCoord c) const { return cell_members_[flat(c)]; }

    int distance_to_server(CellCoord c) const { return cell_ring_distance(c, server_cell_); }

    /// Cells one Manhattan step closer to the server cell.
    std::vector<CellCoord> descent_options(CellCoord from) const {
        std::vector<CellCoord> opts;
        if (from.cx != server_cell_.cx)
            opts.push_back({from.cx + (server_cell_.cx > from.cx ? 1 : -1), from.cy});
        if (from.cy != server_cell_.cy)
            opts.push_back({from.cx, from.cy + (server_cell_.cy > from.cy ? 1 : -1)});
        return opts;
    }

    CellCoord sample_descent_step(CellCoord from, Rng& rng) const {
        const auto opts = descent_options(from);
        if (opts.size() == 1) return opts[0];
        return opts[rng.index(opts.size())];
    }

    static int cells_for_range(double r) {
        const double inv = 1.0 / r;
        const double rounded = std::round(inv);
        // 1/r that is an integer up to roundoff must not gain a phantom cell
        if (std::abs(inv - rounded) < 1e-9 * inv) return static_cast<int>(rounded);
        return static_cast<int>(std::ceil(inv));
    }

private:
    std::size_t flat(CellCoord c) const {
        return static_cast<std::size_t>(c.cy) * cells_per_side_ + c.cx;
    }

    int n_;
    double r_;
    std::uint64_t seed_;
    int cells_per_side_ = 1;
    std::vector<Point2> pos_;
    std::vector<std::vector<int>> cell_members_;
    CellCoord server_cell_;
    bool connected_ = false;
};

}  // namespace icnlab
