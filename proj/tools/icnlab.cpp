// Command-line front end: analyze / simulate / sweep / scaling over JSON
// experiment configs, emitting plot-ready CSV or JSON tables.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "icnlab/experiment.hpp"
#include "icnlab/report.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_path;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_preset) {
    cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
    if (with_preset)
        cmd->add_option("--preset", opts.preset, "built-in experiment (fig3|fig4|fig5)");
    cmd->add_option("--out", opts.out_path, "output path (default: stdout)");
    cmd->add_option("--format", opts.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--workers", opts.workers, "worker thread count");
}

json load_config(const CommonOpts& opts, const std::string& command) {
    if (!opts.preset.empty()) {
        auto [preset_command, cfg] = icnlab::preset_config(opts.preset);
        if (preset_command != command)
            throw icnlab::ConfigError("preset", "preset '" + opts.preset + "' belongs to the '" +
                                                    preset_command + "' command");
        return cfg;
    }
    if (opts.config_path.empty())
        throw icnlab::ConfigError("config", "either --config or --preset is required");
    std::ifstream in(opts.config_path);
    if (!in) throw icnlab::ConfigError("config", "cannot open '" + opts.config_path + "'");
    json cfg;
    try {
        in >> cfg;
    } catch (const json::parse_error& e) {
        throw icnlab::ConfigError("config", std::string("JSON parse error: ") + e.what());
    }
    return cfg;
}

unsigned resolve_workers(const CommonOpts& opts, const json& cfg) {
    if (opts.workers) return std::max(1u, *opts.workers);
    if (cfg.contains("workers")) return std::max(1u, cfg["workers"].get<unsigned>());
    return icnlab::default_worker_count();
}

void apply_overrides(json& cfg, const CommonOpts& opts) {
    if (opts.seed) cfg["seed"] = *opts.seed;
}

template <class Row>
void emit(const CommonOpts& opts, const std::string& command, const json& cfg,
          const std::vector<Row>& rows) {
    std::uint64_t seed = 0;
    if (cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
    std::string experiment = command;
    if (cfg.contains("experiment")) experiment = cfg["experiment"].get<std::string>();

    std::ostringstream body;
    if (opts.format == "csv") {
        icnlab::write_csv(body, rows);
    } else {
        body << icnlab::make_report_json(command, experiment, seed, rows).dump(2) << '\n';
    }
    if (opts.out_path.empty()) {
        std::cout << body.str() << std::flush;
    } else {
        std::ofstream out(opts.out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + opts.out_path + "'");
        out << body.str();
    }
}

int run(int argc, char** argv) {
    CLI::App app{"cache-network capacity laboratory"};
    app.require_subcommand(1);

    CommonOpts analyze_opts, simulate_opts, sweep_opts, scaling_opts;
    auto* analyze = app.add_subcommand("analyze", "closed-form hop/capacity/load tables");
    add_common(analyze, analyze_opts, true);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo runs with merged replicas");
    add_common(simulate, simulate_opts, false);
    auto* sweep = app.add_subcommand("sweep", "evaluate a config across parameter grids");
    add_common(sweep, sweep_opts, true);
    auto* scaling = app.add_subcommand("scaling", "log-log slope checks against predictions");
    add_common(scaling, scaling_opts, false);

    CLI11_PARSE(app, argc, argv);

    if (analyze->parsed()) {
        json cfg = load_config(analyze_opts, "analyze");
        apply_overrides(cfg, analyze_opts);
        const auto rows = icnlab::run_analyze_config(cfg, resolve_workers(analyze_opts, cfg));
        emit(analyze_opts, "analyze", cfg, rows);
        return 0;
    }
    if (simulate->parsed()) {
        json cfg = load_config(simulate_opts, "simulate");
        apply_overrides(cfg, simulate_opts);
        auto req = icnlab::parse_simulate_request(cfg);
        const auto merged =
            icnlab::run_simulate_merged(req, resolve_workers(simulate_opts, cfg));
        const auto rows = icnlab::simulate_rows(req, merged);
        emit(simulate_opts, "simulate", cfg, rows);
        if (!req.trace_path.empty()) {
            std::ofstream trace(req.trace_path, std::ios::binary);
            if (!trace) throw std::runtime_error("cannot write '" + req.trace_path + "'");
            icnlab::write_trace_csv(trace, merged.trace);
        }
        std::cerr << "simulate: " << merged.request_events << " requests, "
                  << merged.expiry_events << " expiries, " << merged.wall_seconds
                  << "s wall" << (merged.truncated ? " [truncated]" : "") << '\n';
        return 0;
    }
    if (sweep->parsed()) {
        json cfg = load_config(sweep_opts, "sweep");
        apply_overrides(cfg, sweep_opts);
        const auto req = icnlab::parse_sweep_request(cfg);
        const auto rows = icnlab::run_sweep(req, resolve_workers(sweep_opts, cfg));
        emit(sweep_opts, "sweep", cfg, rows);
        return 0;
    }
    if (scaling->parsed()) {
        json cfg = load_config(scaling_opts, "scaling");
        apply_overrides(cfg, scaling_opts);
        const auto rows = icnlab::run_scaling_config(cfg, resolve_workers(scaling_opts, cfg));
        emit(scaling_opts, "scaling", cfg, rows);
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const icnlab::ConfigError& e) {
        nlohmann::json diag = {{"error", {{"field", e.field()}, {"message", e.what()}}}};
        std::cerr << diag.dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        nlohmann::json diag = {{"error", {{"message", e.what()}}}};
        std::cerr << diag.dump() << '\n';
        return 1;
    }
}
