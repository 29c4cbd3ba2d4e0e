#pragma once

// Result rows and their CSV/JSON serialization. Output is plot-ready
// long-format data; JSON files round-trip losslessly back into rows.

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icnlab/scaling.hpp"
#include "icnlab/simulator.hpp"

namespace icnlab {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

namespace detail {
/// Field equality where two missing values (NaN) count as equal.
inline bool same_field(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}
}  // namespace detail

/// One analysis or simulation data point. `level = -1` marks aggregate rows;
/// `content = -1` marks catalog-level aggregates. Missing columns hold NaN
/// and serialize as empty CSV fields / JSON nulls.
struct MetricRow {
    std::string experiment;
    std::string scenario;
    int levels = 0;
    double n = kMissing;
    double r = kMissing;
    int content = -1;
    int level = -1;
    double rho = kMissing;
    double mean_hops = kMissing;
    double gamma_interference = kMissing;
    double psi = kMissing;
    double gamma_supportable = kMissing;
    double gamma_max = kMissing;
    double total_request_rate = kMissing;
    double total_traffic = kMissing;
    double lambda = kMissing;
    double mu = kMissing;
    std::string source = "analytic";
    double stderr_value = kMissing;
    std::string regime;

    friend bool operator==(const MetricRow& a, const MetricRow& b) {
        using detail::same_field;
        return a.experiment == b.experiment && a.scenario == b.scenario &&
               a.levels == b.levels && same_field(a.n, b.n) && same_field(a.r, b.r) &&
               a.content == b.content && a.level == b.level && same_field(a.rho, b.rho) &&
               same_field(a.mean_hops, b.mean_hops) &&
               same_field(a.gamma_interference, b.gamma_interference) &&
               same_field(a.psi, b.psi) &&
               same_field(a.gamma_supportable, b.gamma_supportable) &&
               same_field(a.gamma_max, b.gamma_max) &&
               same_field(a.total_request_rate, b.total_request_rate) &&
               same_field(a.total_traffic, b.total_traffic) &&
               same_field(a.lambda, b.lambda) && same_field(a.mu, b.mu) &&
               a.source == b.source && same_field(a.stderr_value, b.stderr_value) &&
               a.regime == b.regime;
    }
};

struct ScalingRow {
    std::string experiment;
    std::string metric;
    std::string scenario;
    double rho_exponent = 0.0;
    double rho_coefficient = 1.0;
    double r_exponent = kMissing;
    std::vector<double> sizes;
    double fitted_slope = 0.0;
    double r_squared = 0.0;
    double predicted_exponent = 0.0;
    std::string regime;
    double tolerance = 0.0;
    bool straddled = false;
    bool pass = false;

    friend bool operator==(const ScalingRow& a, const ScalingRow& b) {
        using detail::same_field;
        return a.experiment == b.experiment && a.metric == b.metric &&
               a.scenario == b.scenario && a.rho_exponent == b.rho_exponent &&
               a.rho_coefficient == b.rho_coefficient &&
               same_field(a.r_exponent, b.r_exponent) && a.sizes == b.sizes &&
               a.fitted_slope == b.fitted_slope && a.r_squared == b.r_squared &&
               a.predicted_exponent == b.predicted_exponent && a.regime == b.regime &&
               a.tolerance == b.tolerance && a.straddled == b.straddled && a.pass == b.pass;
    }
};

namespace detail {

inline std::string format_double(double v) {
    if (std::isnan(v)) return {};
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    if (s.empty()) return kMissing;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// JSON has no literal for non-finite numbers; missing values serialize as
// null and the infinite-rate sentinels as strings.
inline void json_set(nlohmann::json& j, const char* key, double v) {
    if (std::isnan(v)) j[key] = nullptr;
    else if (std::isinf(v)) j[key] = v > 0 ? "inf" : "-inf";
    else j[key] = v;
}

inline double json_get_double(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return kMissing;
    if (j[key].is_string()) {
        const auto s = j[key].get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::invalid_argument("unexpected string in numeric field: " + s);
    }
    return j[key].get<double>();
}

}  // namespace detail

inline const std::vector<std::string>& metric_row_columns() {
    static const std::vector<std::string> cols = {
        "experiment", "scenario", "L", "n", "r", "content", "level", "rho", "E_h",
        "gamma_interference", "psi", "gamma_supportable", "gamma_max",
        "total_request_rate", "total_traffic", "lambda", "mu", "source", "stderr",
        "regime"};
    return cols;
}

inline void write_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
    using detail::csv_escape;
    using detail::format_double;
    const auto& cols = metric_row_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        os << (i ? "," : "") << cols[i];
    os << "\r\n";
    for (const auto& row : rows) {
        os << csv_escape(row.experiment) << ',' << csv_escape(row.scenario) << ','
           << (row.levels > 0 ? std::to_string(row.levels) : std::string{}) << ','
           << format_double(row.n) << ',' << format_double(row.r) << ','
           << (row.content >= 0 ? std::to_string(row.content) : std::string{}) << ','
           << (row.level >= 0 ? std::to_string(row.level) : std::string{}) << ','
           << format_double(row.rho) << ',' << format_double(row.mean_hops) << ','
           << format_double(row.gamma_interference) << ',' << format_double(row.psi) << ','
           << format_double(row.gamma_supportable) << ',' << format_double(row.gamma_max)
           << ',' << format_double(row.total_request_rate) << ','
           << format_double(row.total_traffic) << ',' << format_double(row.lambda) << ','
           << format_double(row.mu) << ',' << csv_escape(row.source) << ','
           << format_double(row.stderr_value) << ',' << csv_escape(row.regime) << "\r\n";
    }
}

inline void write_csv(std::ostream& os, const std::vector<ScalingRow>& rows) {
    using detail::csv_escape;
    using detail::format_double;
    os << "experiment,metric,scenario,rho_exponent,rho_coefficient,r_exponent,sizes,"
          "fitted_slope,r_squared,predicted_exponent,regime,tolerance,straddled,pass\r\n";
    for (const auto& row : rows) {
        std::string sizes;
        for (std::size_t i = 0; i < row.sizes.size(); ++i) {
            if (i) sizes += ';';
            sizes += format_double(row.sizes[i]);
        }
        os << csv_escape(row.experiment) << ',' << csv_escape(row.metric) << ','
           << csv_escape(row.scenario) << ',' << format_double(row.rho_exponent) << ','
           << format_double(row.rho_coefficient) << ',' << format_double(row.r_exponent)
           << ',' << csv_escape(sizes) << ',' << format_double(row.fitted_slope) << ','
           << format_double(row.r_squared) << ',' << format_double(row.predicted_exponent)
           << ',' << csv_escape(row.regime) << ',' << format_double(row.tolerance) << ','
           << (row.straddled ? "true" : "false") << ',' << (row.pass ? "true" : "false")
           << "\r\n";
    }
}

inline void to_json(nlohmann::json& j, const MetricRow& row) {
    j = nlohmann::json::object();
    j["experiment"] = row.experiment;
    j["scenario"] = row.scenario;
    j["L"] = row.levels;
    detail::json_set(j, "n", row.n);
    detail::json_set(j, "r", row.r);
    j["content"] = row.content;
    j["level"] = row.level;
    detail::json_set(j, "rho", row.rho);
    detail::json_set(j, "E_h", row.mean_hops);
    detail::json_set(j, "gamma_interference", row.gamma_interference);
    detail::json_set(j, "psi", row.psi);
    detail::json_set(j, "gamma_supportable", row.gamma_supportable);
    detail::json_set(j, "gamma_max", row.gamma_max);
    detail::json_set(j, "total_request_rate", row.total_request_rate);
    detail::json_set(j, "total_traffic", row.total_traffic);
    detail::json_set(j, "lambda", row.lambda);
    detail::json_set(j, "mu", row.mu);
    j["source"] = row.source;
    detail::json_set(j, "stderr", row.stderr_value);
    j["regime"] = row.regime;
}

inline void from_json(const nlohmann::json& j, MetricRow& row) {
    row.experiment = j.at("experiment").get<std::string>();
    row.scenario = j.at("scenario").get<std::string>();
    row.levels = j.at("L").get<int>();
    row.n = detail::json_get_double(j, "n");
    row.r = detail::json_get_double(j, "r");
    row.content = j.at("content").get<int>();
    row.level = j.at("level").get<int>();
    row.rho = detail::json_get_double(j, "rho");
    row.mean_hops = detail::json_get_double(j, "E_h");
    row.gamma_interference = detail::json_get_double(j, "gamma_interference");
    row.psi = detail::json_get_double(j, "psi");
    row.gamma_supportable = detail::json_get_double(j, "gamma_supportable");
    row.gamma_max = detail::json_get_double(j, "gamma_max");
    row.total_request_rate = detail::json_get_double(j, "total_request_rate");
    row.total_traffic = detail::json_get_double(j, "total_traffic");
    row.lambda = detail::json_get_double(j, "lambda");
    row.mu = detail::json_get_double(j, "mu");
    row.source = j.at("source").get<std::string>();
    row.stderr_value = detail::json_get_double(j, "stderr");
    row.regime = j.at("regime").get<std::string>();
}

inline void to_json(nlohmann::json& j, const ScalingRow& row) {
    j = nlohmann::json::object();
    j["experiment"] = row.experiment;
    j["metric"] = row.metric;
    j["scenario"] = row.scenario;
    j["rho_exponent"] = row.rho_exponent;
    j["rho_coefficient"] = row.rho_coefficient;
    detail::json_set(j, "r_exponent", row.r_exponent);
    j["sizes"] = row.sizes;
    j["fitted_slope"] = row.fitted_slope;
    j["r_squared"] = row.r_squared;
    j["predicted_exponent"] = row.predicted_exponent;
    j["regime"] = row.regime;
    j["tolerance"] = row.tolerance;
    j["straddled"] = row.straddled;
    j["pass"] = row.pass;
}

inline void from_json(const nlohmann::json& j, ScalingRow& row) {
    row.experiment = j.at("experiment").get<std::string>();
    row.metric = j.at("metric").get<std::string>();
    row.scenario = j.at("scenario").get<std::string>();
    row.rho_exponent = j.at("rho_exponent").get<double>();
    row.rho_coefficient = j.at("rho_coefficient").get<double>();
    row.r_exponent = detail::json_get_double(j, "r_exponent");
    row.sizes = j.at("sizes").get<std::vector<double>>();
    row.fitted_slope = j.at("fitted_slope").get<double>();
    row.r_squared = j.at("r_squared").get<double>();
    row.predicted_exponent = j.at("predicted_exponent").get<double>();
    row.regime = j.at("regime").get<std::string>();
    row.tolerance = j.at("tolerance").get<double>();
    row.straddled = j.at("straddled").get<bool>();
    row.pass = j.at("pass").get<bool>();
}

template <class Row>
nlohmann::json make_report_json(const std::string& command, const std::string& experiment,
                                std::uint64_t seed, const std::vector<Row>& rows) {
    nlohmann::json doc;
    doc["meta"] = {{"command", command}, {"experiment", experiment}, {"seed", seed}};
    doc["rows"] = rows;
    return doc;
}

template <class Row>
std::vector<Row> rows_from_report_json(const nlohmann::json& doc) {
    return doc.at("rows").get<std::vector<Row>>();
}

/// Event trace dump: one line per service event.
inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
    os << "sim_time,requester,content,serving_level,hops\r\n";
    for (const auto& t : trace)
        os << detail::format_double(t.time) << ',' << t.requester << ',' << t.content << ','
           << t.serving_level << ',' << t.hops << "\r\n";
}

}  // namespace icnlab
