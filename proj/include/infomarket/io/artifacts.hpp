#pragma once

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <system_error>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "infomarket/analytics.hpp"
#include "infomarket/config.hpp"
#include "infomarket/error.hpp"
#include "infomarket/io/config_file.hpp"
#include "infomarket/market.hpp"
#include "infomarket/stats.hpp"
#include "infomarket/sweep.hpp"

namespace infomarket::io {

inline constexpr std::string_view kSeriesFormat = "infomarket-series v1";
inline constexpr std::string_view kCcdfFormat = "infomarket-ccdf v1";
inline constexpr std::string_view kAcfFormat = "infomarket-acf v1";
inline constexpr std::string_view kGridFormat = "infomarket-grid v1";
inline constexpr std::string_view kRunsFormat = "infomarket-runs v1";
inline constexpr std::string_view kScanFormat = "infomarket-alpha-scan v1";
inline constexpr std::string_view kBoundsFormat = "infomarket-bounds v1";
inline constexpr std::string_view kCompareCcdfFormat = "infomarket-compare-ccdf v1";
inline constexpr std::string_view kCompareAcfFormat = "infomarket-compare-acf v1";
inline constexpr std::string_view kSummaryFormat = "infomarket-summary v1";

enum class Format { csv, json };

[[nodiscard]] inline std::string_view extension(Format f) { return f == Format::csv ? ".csv" : ".json"; }

using Cell = std::variant<std::monostate, double, std::string>;

/// Flat table with a format tag and the hash of the configuration it came from.
struct Table {
    std::string format;
    std::string config_hash;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    [[nodiscard]] std::size_t column(std::string_view name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw FormatError("missing column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }
};

namespace detail {

inline std::string cell_text(const Cell& c) {
    if (std::holds_alternative<std::monostate>(c)) return {};
    if (const auto* d = std::get_if<double>(&c)) return exact_number(*d);
    return std::get<std::string>(c);
}

inline nlohmann::json cell_json(const Cell& c) {
    if (std::holds_alternative<std::monostate>(c)) return nullptr;
    if (const auto* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) return exact_number(*d);
        return *d;
    }
    return std::get<std::string>(c);
}

inline Cell parse_cell(std::string_view s) {
    if (s.empty()) return std::monostate{};
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
    return std::string(s);
}

inline Cell json_cell(const nlohmann::json& j) {
    if (j.is_null()) return std::monostate{};
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_cell(j.get<std::string>());
    throw FormatError("unexpected JSON cell " + j.dump());
}

}  // namespace detail

inline std::optional<double> number(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return *d;
    return std::nullopt;
}

[[nodiscard]] inline std::string render(const Table& t, Format f) {
    if (f == Format::json) {
        nlohmann::json j;
        j["format"] = t.format;
        j["config_hash"] = t.config_hash;
        j["columns"] = t.columns;
        auto rows = nlohmann::json::array();
        for (const auto& row : t.rows) {
            auto r = nlohmann::json::array();
            for (const auto& c : row) r.push_back(detail::cell_json(c));
            rows.push_back(std::move(r));
        }
        j["rows"] = std::move(rows);
        return j.dump(1) + "\n";
    }
    std::string out;
    out += "# " + t.format + "\n";
    out += "# config_hash " + t.config_hash + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += detail::cell_text(row[i]);
        }
        out += "\n";
    }
    return out;
}

/// Parses a table written by render(). Throws FormatError unless the format
/// tag equals `expected_format`.
[[nodiscard]] inline Table parse_table(std::string_view text, std::string_view expected_format) {
    Table t;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("invalid JSON: ") + e.what());
        }
        if (!j.contains("format") || j["format"] != expected_format) {
            throw FormatError("unsupported format version '" + (j.contains("format") ? j["format"].dump() : "") +
                              "', expected '" + std::string(expected_format) + "'");
        }
        t.format = j["format"].get<std::string>();
        t.config_hash = j.value("config_hash", "");
        t.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& r : j.at("rows")) {
            std::vector<Cell> row;
            for (const auto& c : r) row.push_back(detail::json_cell(c));
            if (row.size() != t.columns.size()) throw FormatError("row width differs from header");
            t.rows.push_back(std::move(row));
        }
        return t;
    }

    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const std::string_view body = std::string_view(line).substr(std::min<std::size_t>(2, line.size()));
            if (line_no == 1) {
                if (body != expected_format) {
                    throw FormatError("unsupported format version '" + std::string(body) + "', expected '" +
                                          std::string(expected_format) + "'",
                                      line_no);
                }
                t.format = std::string(body);
            } else if (body.starts_with("config_hash ")) {
                t.config_hash = std::string(body.substr(12));
            }
            continue;
        }
        if (t.format.empty()) throw FormatError("missing format tag, expected '# " + std::string(expected_format) + "'", 1);
        std::vector<std::string_view> parts;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            parts.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!header) {
            for (auto p : parts) t.columns.emplace_back(p);
            header = true;
            continue;
        }
        if (parts.size() != t.columns.size()) {
            throw FormatError("expected " + std::to_string(t.columns.size()) + " fields, got " +
                                  std::to_string(parts.size()),
                              line_no);
        }
        std::vector<Cell> row;
        for (auto p : parts) row.push_back(detail::parse_cell(p));
        t.rows.push_back(std::move(row));
    }
    if (!header) throw FormatError("missing header row");
    return t;
}

[[nodiscard]] inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw ResourceError("cannot create '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ResourceError("write failed for '" + path.string() + "'");
}

inline std::filesystem::path write_table(const std::filesystem::path& dir, std::string_view stem, const Table& t,
                                         Format f) {
    auto path = dir / (std::string(stem) + std::string(extension(f)));
    write_text(path, render(t, f));
    return path;
}

[[nodiscard]] inline Table read_table(const std::filesystem::path& path, std::string_view expected_format) {
    const auto text = read_text(path);
    try {
        return parse_table(text, expected_format);
    } catch (const FormatError& e) {
        throw FormatError(path.filename().string() + ": " + e.what(), 0);
    }
}

// ---- tables ---------------------------------------------------------------

/// Series rows (t, mu, tau, p, r); r and tau are empty where undefined.
[[nodiscard]] inline Table series_table(const SimulationRecord& rec, const std::string& hash) {
    Table t{std::string(kSeriesFormat), hash, {"t", "mu", "tau", "p", "r"}, {}};
    t.rows.reserve(rec.prices.size());
    for (std::size_t s = 0; s < rec.prices.size(); ++s) {
        std::vector<Cell> row;
        row.emplace_back(static_cast<double>(s));
        row.emplace_back(static_cast<double>(rec.mus[s]));
        if (rec.taus[s]) {
            row.emplace_back(static_cast<double>(*rec.taus[s]));
        } else {
            row.emplace_back(std::monostate{});
        }
        row.emplace_back(rec.prices[s]);
        if (s > 0) {
            row.emplace_back(rec.returns[s - 1]);
        } else {
            row.emplace_back(std::monostate{});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Defined returns of a series table, in time order.
[[nodiscard]] inline std::vector<double> series_returns(const Table& t) {
    const std::size_t c = t.column("r");
    std::vector<double> r;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& cell = t.rows[i][c];
        if (std::holds_alternative<std::monostate>(cell)) continue;
        const auto v = number(cell);
        if (!v) throw FormatError("non-numeric return in row " + std::to_string(i + 1));
        r.push_back(*v);
    }
    return r;
}

[[nodiscard]] inline Table ccdf_table(const stats::CcdfCurve& c, const std::string& hash) {
    Table t{std::string(kCcdfFormat), hash, {"x", "p"}, {}};
    for (std::size_t i = 0; i < c.x.size(); ++i) t.rows.push_back({c.x[i], c.p[i]});
    return t;
}

[[nodiscard]] inline Table acf_table(std::span<const double> acf, const std::string& hash) {
    Table t{std::string(kAcfFormat), hash, {"lag", "acf"}, {}};
    for (std::size_t i = 0; i < acf.size(); ++i) t.rows.push_back({static_cast<double>(i), acf[i]});
    return t;
}

/// Long-format grid rows (axis1, axis2, metric, value, n_runs, ...).
[[nodiscard]] inline Table grid_table(const sweep::SweepResult& r) {
    Table t{std::string(kGridFormat),
            hex64(r.config_hash),
            {"axis1", "axis2", "metric", "value", "n_runs", "geometric_mean", "arithmetic_mean", "log_domain"},
            {}};
    for (const auto& node : r.nodes) {
        for (std::size_t m = 0; m < r.metrics.size(); ++m) {
            const auto& agg = node.aggregate.metrics[m];
            std::vector<Cell> row;
            for (std::size_t a = 0; a < 2; ++a) {
                if (a < node.coordinates.size()) {
                    row.emplace_back(node.coordinates[a]);
                } else {
                    row.emplace_back(std::monostate{});
                }
            }
            row.emplace_back(std::string(sweep::to_string(r.metrics[m])));
            row.emplace_back(agg.value);
            row.emplace_back(static_cast<double>(agg.n_values));
            row.emplace_back(agg.geometric_mean);
            row.emplace_back(agg.arithmetic_mean);
            row.emplace_back(agg.log_domain ? 1.0 : 0.0);
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

/// Per-repetition records: node, repetition, seed, ok, one column per metric, error.
[[nodiscard]] inline Table runs_table(const sweep::SweepResult& r) {
    Table t{std::string(kRunsFormat), hex64(r.config_hash), {"node", "repetition", "seed", "ok"}, {}};
    for (auto m : r.metrics) t.columns.emplace_back(sweep::to_string(m));
    t.columns.emplace_back("error");
    for (const auto& node : r.nodes) {
        for (std::size_t k = 0; k < node.runs.size(); ++k) {
            const auto& run = node.runs[k];
            std::vector<Cell> row{static_cast<double>(node.index), static_cast<double>(k), std::to_string(run.seed),
                                  run.ok ? 1.0 : 0.0};
            for (double v : run.values) row.emplace_back(v);
            std::string error = run.error;
            std::replace_if(error.begin(), error.end(), [](char ch) { return ch == ',' || ch == '\n'; }, ';');
            row.emplace_back(std::move(error));
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

[[nodiscard]] inline Table alpha_scan_table(std::span<const sweep::AlphaScanRow> rows, const std::string& hash) {
    Table t{std::string(kScanFormat), hash, {"variant", "alpha", "variance", "kurtosis", "income", "gini", "n_runs"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back({std::string(sweep::to_string(r.variant)), r.alpha, r.variance, r.kurtosis, r.income, r.gini,
                          static_cast<double>(r.n_runs)});
    }
    return t;
}

[[nodiscard]] inline Table bounds_table(std::span<const analytics::VarianceBounds> b, std::size_t dimension,
                                        const std::string& hash) {
    Table t{std::string(kBoundsFormat), hash, {"alpha", "dimension", "n_speculators", "lower", "heuristic", "upper"}, {}};
    for (const auto& v : b) {
        t.rows.push_back({v.alpha, static_cast<double>(dimension), static_cast<double>(v.n_speculators), v.lower,
                          v.heuristic, v.upper});
    }
    return t;
}

// ---- analysis -------------------------------------------------------------

/// The analysed slice: the final `window` returns, or the final half.
[[nodiscard]] inline std::span<const double> analysis_window(std::span<const double> returns,
                                                             const AnalysisSettings& a) {
    const std::size_t n = a.window == 0 ? returns.size() / 2 : std::min(a.window, returns.size());
    return returns.last(n);
}

[[nodiscard]] inline stats::AnalysisOptions analysis_options(const AnalysisSettings& a) {
    return {a.max_lag, a.head};
}

[[nodiscard]] inline nlohmann::json to_json(const stats::TailFit& f) {
    return {{"exponent", f.exponent}, {"cutoff", f.cutoff}, {"ks_distance", f.ks_distance}, {"n_tail", f.n_tail}};
}

[[nodiscard]] inline nlohmann::json nullable(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

/// JSON summary of a return-statistics bundle (CCDF and ACF go to their own files).
[[nodiscard]] inline nlohmann::json to_json(const stats::ReturnStats& s) {
    nlohmann::json j;
    j["n"] = s.n;
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
    j["kurtosis"] = s.kurtosis;
    j["reduction"] = s.reduction ? nullable(*s.reduction) : nlohmann::json(nullptr);
    j["tail"] = s.tail ? to_json(*s.tail) : nlohmann::json(nullptr);
    if (!s.tail) j["tail_error"] = s.tail_error;
    j["heavy_tail"] = s.heavy_tail;
    j["acf_abs"] = s.acf_abs;
    return j;
}

[[nodiscard]] inline nlohmann::json to_json(const stats::SurpriseStats& s) {
    nlohmann::json j;
    j["n"] = s.series.tau.size();
    j["log_correlation"] = nullable(s.log_correlation);
    j["tau_tail"] = to_json(s.tau_tail);
    j["tau_density_exponent"] = s.tau_density_exponent();
    auto bins = nlohmann::json::array();
    for (const auto& b : s.bins) {
        bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"center", b.center},
                        {"mean_magnitude", b.mean_magnitude}, {"count", b.count}});
    }
    j["bins"] = std::move(bins);
    return j;
}

/// Statistics of `returns` through the shared pipeline, as JSON. Errors from
/// degenerate input are reported in the document instead of thrown.
[[nodiscard]] inline nlohmann::json analyze_to_json(std::span<const double> returns, const AnalysisSettings& a,
                                                    std::optional<stats::ReturnStats>& out) {
    nlohmann::json j;
    const auto window = analysis_window(returns, a);
    j["window"] = window.size();
    try {
        out = stats::analyze_returns(window, analysis_options(a));
        j["returns"] = to_json(*out);
    } catch (const DegenerateInputError& e) {
        j["returns"] = nullptr;
        j["error"] = std::string("degenerate: ") + e.what();
    } catch (const SampleSizeError& e) {
        j["returns"] = nullptr;
        j["error"] = std::string("sample size: ") + e.what();
    }
    return j;
}

[[nodiscard]] inline std::string render_json(const nlohmann::json& j) { return j.dump(1) + "\n"; }

}  // namespace infomarket::io
