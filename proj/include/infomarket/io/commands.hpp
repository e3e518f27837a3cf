#pragma once

#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "infomarket/analytics.hpp"
#include "infomarket/config.hpp"
#include "infomarket/error.hpp"
#include "infomarket/io/artifacts.hpp"
#include "infomarket/io/config_file.hpp"
#include "infomarket/io/empirical.hpp"
#include "infomarket/market.hpp"
#include "infomarket/stats.hpp"
#include "infomarket/sweep.hpp"

namespace infomarket::io {

inline constexpr std::string_view kToolVersion = "infomarket 1.0.0";

/// Options common to every command.
struct CommonOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "out";
    Format format = Format::csv;
};

/// Config from file (or defaults) with the seed override applied.
[[nodiscard]] inline ResolvedConfig resolve(const CommonOptions& o) {
    ResolvedConfig c = o.config ? parse_config(*o.config) : ResolvedConfig{};
    if (o.seed) c.market.seed = *o.seed;
    return c;
}

/// Thrown when a command wrote its outputs but the analysed data was degenerate.
class DegenerateResult : public DegenerateInputError {
public:
    using DegenerateInputError::DegenerateInputError;
};

namespace detail {

inline nlohmann::json summary_header(std::string_view command, const std::string& hash) {
    nlohmann::json j;
    j["format"] = kSummaryFormat;
    j["tool"] = kToolVersion;
    j["command"] = command;
    j["config_hash"] = hash;
    return j;
}

inline void write_return_stats(const std::filesystem::path& dir, const stats::ReturnStats& s, const std::string& hash,
                               Format f) {
    write_table(dir, "ccdf", ccdf_table(s.ccdf, hash), f);
    write_table(dir, "acf", acf_table(s.acf_abs, hash), f);
}

}  // namespace detail

/// `simulate`: one run; writes config.ini, series, ccdf, acf and summary.json.
inline nlohmann::json simulate(const CommonOptions& o) {
    const ResolvedConfig c = resolve(o);
    const std::string hash = hex64(config_hash(c));
    const SimulationRecord rec = run(c.market);

    write_text(o.out / "config.ini", to_ini(c));
    write_table(o.out, "series", series_table(rec, hash), o.format);

    auto summary = detail::summary_header("simulate", hash);
    summary["seed"] = c.market.seed;
    summary["horizon"] = c.market.horizon;
    summary["alpha"] = c.market.alpha();
    std::optional<stats::ReturnStats> rs;
    summary["statistics"] = analyze_to_json(rec.returns, c.analysis, rs);
    if (rs) detail::write_return_stats(o.out, *rs, hash, o.format);

    const std::size_t window = analysis_window(rec.returns, c.analysis).size();
    try {
        summary["surprise"] = to_json(stats::surprise_stats(rec, c.market.horizon - window));
    } catch (const std::exception& e) {
        summary["surprise"] = {{"error", e.what()}};
    }
    write_text(o.out / "summary.json", render_json(summary));
    if (!rs) throw DegenerateResult(summary["statistics"]["error"].get<std::string>());
    return summary;
}

/// `stats`: re-analyses a stored series file with the shared pipeline.
inline nlohmann::json analyze_series_file(const CommonOptions& o, const std::filesystem::path& input) {
    const ResolvedConfig c = resolve(o);
    const Table series = read_table(input, kSeriesFormat);
    const auto returns = series_returns(series);

    auto summary = detail::summary_header("stats", series.config_hash);
    summary["input"] = input.filename().string();
    std::optional<stats::ReturnStats> rs;
    summary["statistics"] = analyze_to_json(returns, c.analysis, rs);
    if (rs) detail::write_return_stats(o.out, *rs, series.config_hash, o.format);
    write_text(o.out / "summary.json", render_json(summary));
    if (!rs) throw DegenerateResult(summary["statistics"]["error"].get<std::string>());
    return summary;
}

/// `sweep`: grid (or alpha scan when [sweep] variants is set).
inline nlohmann::json run_sweep_command(const CommonOptions& o, std::size_t threads) {
    const ResolvedConfig c = resolve(o);
    write_text(o.out / "config.ini", to_ini(c));
    auto summary = detail::summary_header("sweep", hex64(config_hash(c)));
    summary["base_seed"] = c.market.seed;
    if (!c.sweep.variants.empty()) {
        const auto rows = sweep::alpha_scan(alpha_scan_spec(c), threads);
        write_table(o.out, "alpha_scan", alpha_scan_table(rows, hex64(config_hash(c))), o.format);
        summary["rows"] = rows.size();
    } else {
        const auto result = sweep::run_sweep(sweep_spec(c), threads);
        write_table(o.out, "grid", grid_table(result), o.format);
        write_table(o.out, "runs", runs_table(result), o.format);
        summary["version"] = result.version;
        summary["sweep_hash"] = hex64(result.config_hash);
        summary["nodes"] = result.nodes.size();
        std::size_t failed = 0, invalid = 0;
        for (const auto& n : result.nodes) {
            invalid += n.aggregate.valid ? 0 : 1;
            for (const auto& r : n.runs) failed += r.ok ? 0 : 1;
        }
        summary["failed_runs"] = failed;
        summary["invalid_nodes"] = invalid;
    }
    write_text(o.out / "summary.json", render_json(summary));
    return summary;
}

struct BoundsOptions {
    std::optional<std::size_t> dimension;  // default: states of the config
    double alpha_min = 1.0 / 32.0;
    double alpha_max = 8.0;
    std::size_t per_octave = 1;
};

/// `bounds`: lower / heuristic / upper variance curves on a log2 alpha grid.
inline nlohmann::json bounds(const CommonOptions& o, const BoundsOptions& b) {
    const ResolvedConfig c = resolve(o);
    const std::size_t d = b.dimension.value_or(c.market.states());
    if (!(b.alpha_min > 0.0) || !(b.alpha_max >= b.alpha_min)) {
        throw ConfigError("alpha", "need 0 < alpha_min <= alpha_max");
    }
    if (b.per_octave < 1) throw ConfigError("per_octave", "must be at least 1");
    std::vector<double> alphas;
    const double step = 1.0 / static_cast<double>(b.per_octave);
    const double lo = std::log2(b.alpha_min);
    const double hi = std::log2(b.alpha_max);
    for (std::size_t k = 0; lo + static_cast<double>(k) * step <= hi + 1e-9; ++k) {
        alphas.push_back(std::exp2(lo + static_cast<double>(k) * step));
    }
    const auto curve = analytics::variance_curve(d, alphas);
    const std::string hash = hex64(fnv1a64("bounds;dimension=" + std::to_string(d) + ";alpha_min=" +
                                           exact_number(b.alpha_min) + ";alpha_max=" + exact_number(b.alpha_max) +
                                           ";per_octave=" + std::to_string(b.per_octave)));
    write_table(o.out, "bounds", bounds_table(curve, d, hash), o.format);
    auto summary = detail::summary_header("bounds", hash);
    summary["dimension"] = d;
    summary["points"] = curve.size();
    write_text(o.out / "summary.json", render_json(summary));
    return summary;
}

/// `compare`: a model run and an empirical series through the same
/// estimators. Unless [analysis] window is set, the model window matches the
/// number of empirical returns.
inline nlohmann::json compare(const CommonOptions& o, const std::filesystem::path& empirical_path) {
    ResolvedConfig c = resolve(o);
    const EmpiricalSeries emp = load_empirical(empirical_path);
    const auto emp_returns = log10_returns(emp);
    AnalysisSettings model_analysis = c.analysis;
    AnalysisSettings emp_analysis = c.analysis;
    emp_analysis.window = emp_returns.size();
    if (model_analysis.window == 0) model_analysis.window = emp_returns.size();
    if (c.market.horizon < model_analysis.window + 1) {
        throw ConfigError("market.horizon", "must exceed the comparison window of " +
                                                std::to_string(model_analysis.window) + " returns");
    }
    emp_analysis.head = 0;

    const std::string hash = hex64(config_hash(c));
    const SimulationRecord rec = run(c.market);
    write_text(o.out / "config.ini", to_ini(c));

    auto summary = detail::summary_header("compare", hash);
    summary["empirical"] = {{"file", empirical_path.filename().string()},
                            {"first_date", emp.dates.front()},
                            {"last_date", emp.dates.back()},
                            {"n_prices", emp.closes.size()}};
    std::optional<stats::ReturnStats> model, data;
    summary["model"] = analyze_to_json(rec.returns, model_analysis, model);
    summary["data"] = analyze_to_json(emp_returns, emp_analysis, data);

    Table ccdf{std::string(kCompareCcdfFormat), hash, {"rank", "model_x", "model_p", "empirical_x", "empirical_p"}, {}};
    const std::size_t nm = model ? model->ccdf.x.size() : 0;
    const std::size_t nd = data ? data->ccdf.x.size() : 0;
    for (std::size_t k = 0; k < std::max(nm, nd); ++k) {
        std::vector<Cell> row{static_cast<double>(k + 1)};
        for (const auto* s : {&model, &data}) {
            if (*s && k < (*s)->ccdf.x.size()) {
                row.emplace_back((*s)->ccdf.x[k]);
                row.emplace_back((*s)->ccdf.p[k]);
            } else {
                row.emplace_back(std::monostate{});
                row.emplace_back(std::monostate{});
            }
        }
        ccdf.rows.push_back(std::move(row));
    }
    write_table(o.out, "compare_ccdf", ccdf, o.format);

    Table acf{std::string(kCompareAcfFormat), hash, {"lag", "model", "empirical"}, {}};
    const std::size_t lm = model ? model->acf_abs.size() : 0;
    const std::size_t ld = data ? data->acf_abs.size() : 0;
    for (std::size_t k = 0; k < std::max(lm, ld); ++k) {
        std::vector<Cell> row{static_cast<double>(k)};
        row.emplace_back(k < lm ? Cell(model->acf_abs[k]) : Cell(std::monostate{}));
        row.emplace_back(k < ld ? Cell(data->acf_abs[k]) : Cell(std::monostate{}));
        acf.rows.push_back(std::move(row));
    }
    write_table(o.out, "compare_acf", acf, o.format);
    write_text(o.out / "summary.json", render_json(summary));
    if (!model) throw DegenerateResult("model: " + summary["model"]["error"].get<std::string>());
    if (!data) throw DegenerateResult("empirical: " + summary["data"]["error"].get<std::string>());
    return summary;
}

}  // namespace infomarket::io
