// Acceptance suite: end-to-end checks of the analytic engine, the Monte
// Carlo simulator, and the CLI, each printed as one pass/fail line.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "icnlab/capacity.hpp"
#include "icnlab/content.hpp"
#include "icnlab/experiment.hpp"
#include "icnlab/hopcount.hpp"
#include "icnlab/report.hpp"
#include "icnlab/scaling.hpp"
#include "icnlab/simulator.hpp"
#include "icnlab/topology.hpp"
#include "oracles.hpp"

using namespace icnlab;
namespace fs = std::filesystem;

namespace {

struct Check {
    std::string name;
    double budget_seconds;
    std::function<bool(std::ostream&)> run;
};

bool close_rel(double a, double b, double tol) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale <= tol;
}

// 1. The level-wise hop sum and the uniform closed form agree to 1e-12
// relative for every L <= 100 and rho on a 0.1 grid.
bool criterion_oracle_equality(std::ostream& log) {
    double worst = 0.0;
    for (int L = 1; L <= 100; ++L) {
        for (int step = 0; step <= 10; ++step) {
            const double rho = step / 10.0;
            const double a =
                expected_hops_levelwise(OccupancyProfile::uniform_single(L, rho), 0);
            const double b = expected_hops_grid_pathwise(L, rho);
            const double rel = std::abs(a - b) / std::max(1.0, std::abs(a));
            worst = std::max(worst, rel);
        }
    }
    log << "worst relative gap " << worst;
    return worst <= 1e-12;
}

// 2. Snapshot Monte Carlo vs analytics at L=20, 1e5 samples: path-wise
// against the level-wise sum, ring against the clipped enumeration oracle,
// with the interior-formula clipping gap reported.
bool criterion_snapshot_vs_analytic(std::ostream& log) {
    const int levels = 20;
    const GridTopology topo(levels);
    bool ok = true;
    for (double rho : {0.1, 0.5, 0.9}) {
        SimConfig cfg;
        cfg.topology.levels = levels;
        cfg.catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
        cfg.mode = SimMode::iid_snapshot;
        cfg.snapshot_profile = OccupancyProfile::uniform_single(levels, rho);
        cfg.snapshot_samples = 100000;
        cfg.seed = 7000 + static_cast<std::uint64_t>(rho * 10);

        const auto path = run_occupancy_snapshot(cfg);
        const double expect_path = expected_hops_levelwise(*cfg.snapshot_profile, 0);
        const double dev_path = std::abs(path.mean_hops.mean - expect_path);
        ok = ok && dev_path <= 3.0 * path.mean_hops.stderr;

        cfg.discovery = DiscoveryMode::expanding_ring;
        cfg.seed += 13;
        const auto ring = run_occupancy_snapshot(cfg);
        const double clipped =
            oracles::ring_discovery_expected_hops(topo, *cfg.snapshot_profile, 0);
        const double interior = expected_hops_grid_ring(levels, rho);
        const double dev_ring = std::abs(ring.mean_hops.mean - clipped);
        ok = ok && dev_ring <= 3.0 * ring.mean_hops.stderr;

        log << "rho=" << rho << ": path dev " << dev_path << " (3se "
            << 3.0 * path.mean_hops.stderr << "), ring dev " << dev_ring << " (3se "
            << 3.0 * ring.mean_hops.stderr << "), clipping gap "
            << (clipped - interior) / clipped * 100 << "%; ";
    }
    return ok;
}

// 3. Edge caching with exponential timers at beta = eta = 1: the timers see
// the raw request stream, so node-averaged presence sits at 1/2 within 2%.
bool criterion_ttl_occupancy(std::ostream& log) {
    SimConfig cfg;
    cfg.topology.levels = 10;
    cfg.catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    cfg.mode = SimMode::ttl_dynamics;
    cfg.horizon = 5000.0;
    cfg.warmup = 500.0;
    cfg.seed = 99;
    const auto res = run_ttl_simulation(cfg);
    double avg = 0.0, nodes = 0.0;
    for (int j = 1; j <= res.levels; ++j) {
        avg += res.occupancy[0][static_cast<std::size_t>(j)].mean *
               res.level_node_counts[static_cast<std::size_t>(j)];
        nodes += res.level_node_counts[static_cast<std::size_t>(j)];
    }
    avg /= nodes;
    log << "node-averaged occupancy " << avg << " vs 0.5";
    return std::abs(avg - 0.5) / 0.5 <= 0.02;
}

// 4. Server-link flow conservation: snapshot crossing rate against the
// per-link load sum at unit rate, within 5%.
bool criterion_server_load(std::ostream& log) {
    bool ok = true;
    for (double rho : {0.0, 0.5}) {
        SimConfig cfg;
        cfg.topology.levels = 10;
        cfg.catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
        cfg.mode = SimMode::iid_snapshot;
        cfg.snapshot_profile = OccupancyProfile::uniform_single(10, rho);
        cfg.snapshot_samples = 400000;
        cfg.seed = 4040 + static_cast<std::uint64_t>(rho * 2);
        const auto res = run_occupancy_snapshot(cfg);
        double expect = 0.0;
        for (int i = 1; i <= 10; ++i) expect += i * std::pow(1.0 - rho, i);
        const double measured = measure_server_load(res);
        log << "rho=" << rho << ": per-link " << measured << " vs " << expect << "; ";
        ok = ok && close_rel(measured, expect, 0.05);
    }
    return ok;
}

// 5. Analytic scaling slopes across L in {10..320}.
bool criterion_scaling_slopes(std::ostream& log) {
    const int levels[] = {10, 20, 40, 80, 160, 320};
    bool ok = true;

    const auto hops_flat = verify_order_grid(ScalingMetric::mean_hops, Scenario::grid_path,
                                             RhoLaw::constant(0.875), levels, 0.05);
    log << "hops slope @rho=7/8: " << hops_flat.fitted_slope << "; ";
    ok = ok && hops_flat.pass;

    const auto gamma_flat = verify_order_grid(ScalingMetric::gamma_max, Scenario::grid_path,
                                              RhoLaw::constant(0.875), levels, 0.05);
    log << "gamma slope @rho=7/8: " << gamma_flat.fitted_slope << "; ";
    ok = ok && gamma_flat.pass;

    const auto hops_root = verify_order_grid(ScalingMetric::mean_hops, Scenario::grid_path,
                                             RhoLaw{1.0, 1.0}, levels, 0.1);
    log << "hops slope @rho=1/N: " << hops_root.fitted_slope << " vs 0.5; ";
    ok = ok && hops_root.pass;

    const auto gamma_bare = verify_order_grid(ScalingMetric::gamma_max, Scenario::grid_path,
                                              RhoLaw::constant(0.0), levels, 0.05);
    log << "gamma slope @rho=0: " << gamma_bare.fitted_slope << " vs -1";
    ok = ok && gamma_bare.pass;
    return ok;
}

// 6. Request-rate sweep: unimodal traffic over the preset grid, and the
// total request rate saturating at N*mu within 1% at lambda = 1e4.
bool criterion_traffic_shape(std::ostream& log) {
    const auto req = parse_sweep_request(preset_fig3());
    const auto rows = run_sweep(req, 1);
    std::vector<double> traffic;
    for (const auto& row : rows)
        if (row.content == 0 && !std::isnan(row.total_traffic))
            traffic.push_back(row.total_traffic);
    if (traffic.size() != 41) {
        log << "expected 41 sweep points, got " << traffic.size();
        return false;
    }
    const auto peak = std::max_element(traffic.begin(), traffic.end());
    const bool unimodal =
        peak != traffic.begin() && peak != traffic.end() - 1 && *peak > traffic.front() &&
        *peak > traffic.back();
    log << "traffic endpoints " << traffic.front() << " / " << traffic.back() << ", peak "
        << *peak << " at index " << (peak - traffic.begin()) << "; ";

    const double n = 2.0 * 16 * 17;
    const double lambda = 1e4, mu = 1.0;
    const double rho = lambda / (lambda + mu);
    const double rate = total_request_rate(n, rho, lambda);
    log << "rate@lambda=1e4: " << rate << " vs N*mu " << n * mu;
    return unimodal && close_rel(rate, n * mu, 0.01);
}

// 7. Nearest-copy dominance, closed forms pointwise and paired snapshots
// per sample.
bool criterion_discovery_dominance(std::ostream& log) {
    for (int L = 1; L <= 50; ++L)
        for (int step = 0; step <= 20; ++step) {
            const double rho = step / 20.0;
            if (expected_hops_grid_ring(L, rho) >
                expected_hops_grid_pathwise(L, rho) + 1e-12) {
                log << "closed-form dominance broken at L=" << L << " rho=" << rho;
                return false;
            }
        }
    SimConfig cfg;
    cfg.topology.levels = 20;
    cfg.catalog = ContentCatalog::single(1.0, TtlSpec::exponential(1.0));
    cfg.mode = SimMode::iid_snapshot;
    cfg.snapshot_profile = OccupancyProfile::uniform_single(20, 0.3);
    cfg.snapshot_samples = 20000;
    cfg.seed = 777;
    const auto paired = run_paired_snapshot(cfg);
    log << "paired means ring " << paired.ring_hops.mean << " <= path "
        << paired.path_hops.mean << ", per-sample dominance "
        << (paired.ring_le_path_everywhere ? "holds" : "broken");
    return paired.ring_le_path_everywhere;
}

// 8. Edge-cached fixed timers: the exact index matches the geometric closed
// form 1 / sum_k alpha_k e^{-D beta_k} / (1 - e^{-D beta_k}) within 2% at
// L=200, and on-path occupancy moves it by less than a factor of three.
bool criterion_fixed_ttl_consistency(std::ostream& log) {
    const double D = std::log(2.0);
    const std::vector<double> alphas = {0.5, 0.3, 0.2};
    const std::vector<double> betas = {1.0, 2.0, 0.5};
    std::vector<double> rhos;
    double closed_denom = 0.0;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        rhos.push_back(1.0 - std::exp(-D * betas[k]));
        closed_denom += alphas[k] * std::exp(-D * betas[k]) / (1.0 - std::exp(-D * betas[k]));
    }
    const double closed = 1.0 / closed_denom;
    const double idx =
        capacity_index_exact(OccupancyProfile::uniform(200, rhos), alphas);
    log << "index " << idx << " vs closed form " << closed << " (gap "
        << std::abs(idx - closed) / closed * 100 << "%); ";
    bool ok = std::abs(idx - closed) / closed <= 0.02;

    const double alpha[] = {1.0};
    const double beta = 1.0;
    const double rho = 1.0 - std::exp(-D * beta);
    for (int L : {50, 100, 150, 200}) {
        const double edge =
            capacity_index_exact(OccupancyProfile::uniform_single(L, rho), alpha);
        const double onpath = capacity_index_exact(
            OccupancyProfile::per_level({beta_prime_profile(L, beta, D).rho}), alpha);
        const double ratio = onpath / edge;
        if (!(ratio > 1.0 / 3.0 && ratio < 3.0)) {
            log << "edge/on-path ratio out of range at L=" << L << ": " << ratio;
            ok = false;
        }
    }
    log << "edge vs on-path within factor 3 across L in {50..200}";
    return ok;
}

// 9. The simulate command is byte-deterministic in its seed, including
// across worker counts.
bool criterion_cli_determinism(std::ostream& log) {
    const char* cli = std::getenv("ICNLAB_CLI");
    if (!cli) {
        log << "ICNLAB_CLI not set";
        return false;
    }
    const fs::path dir =
        fs::temp_directory_path() / ("icnlab_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);

    const fs::path trace_path = dir / "trace.csv";
    nlohmann::json cfg = {
        {"experiment", "determinism"},
        {"topology", {{"kind", "grid"}, {"levels", 6}}},
        {"catalog",
         {{"items",
           {{{"size", 2.0}, {"alpha", 1.0}, {"beta", 1.0},
             {"ttl", {{"law", "exponential"}, {"eta", 1.0}}}}}}}},
        {"mode", "ttl"},
        {"ttl", {{"horizon", 300.0}, {"warmup", 30.0}}},
        {"replicas", 3},
        {"trace", trace_path.string()},
        {"seed", 20240615}};
    const fs::path cfg_path = dir / "sim.json";
    std::ofstream(cfg_path) << cfg.dump(2);

    auto run_once = [&](const fs::path& out, const std::string& fmt, int workers) {
        std::ostringstream cmd;
        cmd << '"' << cli << '"' << " simulate --config " << cfg_path << " --out " << out
            << " --format " << fmt << " --workers " << workers << " 2>/dev/null";
        return std::system(cmd.str().c_str()) == 0;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    bool ok = true;
    std::string first_trace;
    for (const std::string fmt : {"csv", "json"}) {
        const fs::path a = dir / ("a." + fmt), b = dir / ("b." + fmt),
                       c = dir / ("c." + fmt);
        ok = ok && run_once(a, fmt, 1);
        const std::string trace_a = slurp(trace_path);
        ok = ok && run_once(b, fmt, 1) && run_once(c, fmt, 3);
        const std::string trace_c = slurp(trace_path);
        const std::string sa = slurp(a), sb = slurp(b), sc = slurp(c);
        ok = ok && !sa.empty() && sa == sb && sa == sc;
        ok = ok && !trace_a.empty() && trace_a == trace_c;
        if (first_trace.empty()) first_trace = trace_a;
        ok = ok && trace_a == first_trace;
        log << fmt << ": " << sa.size() << " bytes, repeat "
            << (sa == sb ? "identical" : "DIFFERS") << ", workers=3 "
            << (sa == sc ? "identical" : "DIFFERS") << ", trace "
            << (trace_a == trace_c ? "identical" : "DIFFERS") << "; ";
    }

    // config errors must exit nonzero with a diagnostic naming the field
    {
        const fs::path bad_cfg = dir / "bad.json";
        std::ofstream(bad_cfg) << R"({"topology": {"kind": "grid", "levels": 3}})";
        const fs::path err_file = dir / "stderr.txt";
        std::ostringstream cmd;
        cmd << '"' << cli << '"' << " simulate --config " << bad_cfg << " 2> " << err_file
            << " > /dev/null";
        const int rc = std::system(cmd.str().c_str());
        const std::string diag = slurp(err_file);
        const bool named = diag.find("catalog") != std::string::npos &&
                           diag.find("\"field\"") != std::string::npos;
        log << "bad config exit=" << WEXITSTATUS(rc) << ", diagnostic "
            << (named ? "names the field" : "MISSING FIELD NAME");
        ok = ok && WEXITSTATUS(rc) == 2 && named;
    }
    fs::remove_all(dir);
    return ok;
}

}  // namespace

int main() {
    const std::vector<Check> checks = {
        {"oracle equality of hop sums", 5.0, criterion_oracle_equality},
        {"snapshot Monte Carlo vs analytics", 60.0, criterion_snapshot_vs_analytic},
        {"ttl occupancy vs steady-state ratio", 120.0, criterion_ttl_occupancy},
        {"server-link flow conservation", 60.0, criterion_server_load},
        {"analytic scaling slopes", 10.0, criterion_scaling_slopes},
        {"traffic saturation and hump", 10.0, criterion_traffic_shape},
        {"nearest-copy dominance", 30.0, criterion_discovery_dominance},
        {"fixed-ttl capacity consistency", 10.0, criterion_fixed_ttl_consistency},
        {"simulate determinism (CLI)", 30.0, criterion_cli_determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        std::ostringstream note;
        bool ok = false;
        const auto start = std::chrono::steady_clock::now();
        try {
            ok = checks[i].run(note);
        } catch (const std::exception& e) {
            note << "exception: " << e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = elapsed < checks[i].budget_seconds;
        if (!in_budget) note << " [over budget " << checks[i].budget_seconds << "s]";
        const bool pass = ok && in_budget;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " ("
                  << checks[i].name << ", " << elapsed << "s): " << note.str() << '\n';
        if (!pass) ++failures;
    }
    std::cout << (failures == 0 ? "all criteria passed" : "some criteria failed") << '\n';
    return failures;
}
