#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "infomarket/config.hpp"
#include "infomarket/error.hpp"
#include "infomarket/market.hpp"
#include "infomarket/rng.hpp"
#include "infomarket/stats.hpp"

namespace infomarket::sweep {

inline constexpr std::string_view kVersion = "infomarket-sweep 1";

/// Per-run observables. Return metrics use the final half of the series; the
/// reduction compares the first 10 returns with that final half.
enum class Metric { reduction, kurtosis, variance, income, gini, tail_exponent };

inline constexpr Metric kAllMetrics[] = {Metric::reduction, Metric::kurtosis, Metric::variance,
                                         Metric::income,    Metric::gini,     Metric::tail_exponent};

[[nodiscard]] inline std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::reduction: return "reduction";
        case Metric::kurtosis: return "kurtosis";
        case Metric::variance: return "variance";
        case Metric::income: return "income";
        case Metric::gini: return "gini";
        default: return "tail_exponent";
    }
}

[[nodiscard]] inline Metric metric_from_string(std::string_view name) {
    for (Metric m : kAllMetrics) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("metrics", "unknown metric '" + std::string(name) + "'");
}

/// Grid axis. Names: alpha (D = alpha * N_s at fixed N_s), alpha_ns
/// (N_s = D / alpha at fixed D), gamma, n_producers, n_speculators,
/// memory_bits.
struct Axis {
    std::string name;
    std::vector<double> values;
    friend bool operator==(const Axis&, const Axis&) = default;
};

inline constexpr std::string_view kAxisNames[] = {"alpha", "alpha_ns", "gamma", "n_producers", "n_speculators",
                                                  "memory_bits"};

struct SweepSpec {
    std::vector<Axis> axes;  // zero, one or two axes
    std::size_t repetitions = 50;
    MarketConfig base;
    std::vector<Metric> metrics{kAllMetrics, kAllMetrics + 6};
    std::size_t head = 10;  // returns in the reduction numerator

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

namespace detail {

[[nodiscard]] inline std::size_t as_count(double v, const std::string& field) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) throw ConfigError(field, "must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

/// Replaces the number of information states, keeping the information kind.
inline void set_states(MarketConfig& c, std::size_t states, const std::string& axis) {
    if (states < 1) throw ConfigError(axis, "yields fewer than one information state");
    if (auto* e = std::get_if<Endogenous>(&c.info)) {
        if (!std::has_single_bit(states)) {
            throw ConfigError(axis, "endogenous information needs a power-of-two state count, got " +
                                        std::to_string(states));
        }
        e->memory_bits = std::countr_zero(states);
    } else if (auto* x = std::get_if<Exogenous>(&c.info)) {
        if (!x->is_uniform()) throw ConfigError(axis, "only uniform exogenous weights can be resized");
        *x = Exogenous::uniform(states);
    } else {
        throw ConfigError(axis, "cannot vary the state count of mixed information");
    }
}

}  // namespace detail

/// Applies one axis value to `c`.
inline void apply_axis(MarketConfig& c, const std::string& name, double value) {
    if (name == "alpha") {
        if (!(value > 0.0)) throw ConfigError(name, "must be positive");
        const double d = std::round(value * static_cast<double>(c.n_speculators));
        detail::set_states(c, static_cast<std::size_t>(std::max(1.0, d)), name);
    } else if (name == "alpha_ns") {
        if (!(value > 0.0)) throw ConfigError(name, "must be positive");
        const double n = std::round(static_cast<double>(c.states()) / value);
        c.n_speculators = static_cast<std::size_t>(std::max(1.0, n));
    } else if (name == "gamma") {
        c.use_param = value;
    } else if (name == "n_producers") {
        c.n_producers = detail::as_count(value, name);
    } else if (name == "n_speculators") {
        c.n_speculators = detail::as_count(value, name);
    } else if (name == "memory_bits") {
        detail::set_states(c, std::size_t{1} << detail::as_count(value, name), name);
    } else {
        throw ConfigError("axis", "unknown axis '" + name + "'");
    }
}

/// Number of grid nodes (1 for an axis-free spec).
[[nodiscard]] inline std::size_t node_count(const SweepSpec& spec) {
    std::size_t n = 1;
    for (const auto& a : spec.axes) n *= a.values.size();
    return n;
}

/// Axis coordinates of node `index`; the first axis varies slowest.
[[nodiscard]] inline std::vector<double> node_coordinates(const SweepSpec& spec, std::size_t index) {
    std::vector<double> coords(spec.axes.size());
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
        const auto& values = spec.axes[a].values;
        coords[a] = values[index % values.size()];
        index /= values.size();
    }
    return coords;
}

[[nodiscard]] inline MarketConfig node_config(const SweepSpec& spec, std::size_t index) {
    MarketConfig c = spec.base;
    const auto coords = node_coordinates(spec, index);
    for (std::size_t a = 0; a < coords.size(); ++a) apply_axis(c, spec.axes[a].name, coords[a]);
    return c;
}

[[nodiscard]] inline std::uint64_t run_seed(std::uint64_t base_seed, std::size_t node, std::size_t repetition) {
    return derive_seed(base_seed, node, repetition);
}

inline void validate(const SweepSpec& spec) {
    if (spec.repetitions < 1) throw ConfigError("repetitions", "must be at least 1");
    if (spec.axes.size() > 2) throw ConfigError("axes", "at most two axes are supported");
    if (spec.metrics.empty()) throw ConfigError("metrics", "need at least one metric");
    for (const auto& a : spec.axes) {
        if (std::find(std::begin(kAxisNames), std::end(kAxisNames), a.name) == std::end(kAxisNames)) {
            throw ConfigError("axis", "unknown axis '" + a.name + "'");
        }
        if (a.values.empty()) throw ConfigError(a.name, "axis has no values");
    }
    for (std::size_t i = 0; i < node_count(spec); ++i) {
        MarketConfig c = node_config(spec, i);
        try {
            infomarket::validate(c);
        } catch (const ConfigError& e) {
            throw ConfigError(e.field(), std::string("grid node ") + std::to_string(i) + ": " + e.what());
        }
        if (c.horizon <= 2 * spec.head) throw ConfigError("horizon", "too short for the reduction head");
    }
}

/// All (node, repetition) seeds, checked for collisions.
[[nodiscard]] inline std::vector<std::uint64_t> derive_seeds(const SweepSpec& spec) {
    const std::size_t nodes = node_count(spec);
    std::vector<std::uint64_t> seeds;
    seeds.reserve(nodes * spec.repetitions);
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t n = 0; n < nodes; ++n) {
        for (std::size_t r = 0; r < spec.repetitions; ++r) {
            const std::uint64_t s = run_seed(spec.base.seed, n, r);
            if (!seen.insert(s).second) {
                throw ConfigError("seed", "derived seed collision at node " + std::to_string(n) + ", repetition " +
                                              std::to_string(r));
            }
            seeds.push_back(s);
        }
    }
    return seeds;
}

/// One repetition. `values` is parallel to SweepSpec::metrics; a metric that
/// is undefined for this run (zero variance, too few tail points, ...) is NaN.
struct RunRecord {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<double> values;
};

/// Log-domain mean per metric over successful runs. When a metric has a
/// non-positive value the log-domain mean is undefined; `value` then falls
/// back to the arithmetic mean and `log_domain` is false.
struct MetricAggregate {
    double value = std::numeric_limits<double>::quiet_NaN();
    double geometric_mean = std::numeric_limits<double>::quiet_NaN();
    double arithmetic_mean = std::numeric_limits<double>::quiet_NaN();
    bool log_domain = false;
    std::size_t n_values = 0;
};

struct NodeAggregate {
    bool valid = false;
    std::size_t n_runs = 0;  // successful runs
    std::vector<MetricAggregate> metrics;
};

/// Aggregates the finite values of one metric. Sums run over sorted values,
/// so the result is independent of the record order.
[[nodiscard]] inline MetricAggregate aggregate_values(std::vector<double> values) {
    MetricAggregate out;
    std::erase_if(values, [](double v) { return std::isnan(v); });
    out.n_values = values.size();
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    out.arithmetic_mean = sum / static_cast<double>(values.size());
    if (values.front() > 0.0) {
        double log_sum = 0.0;
        for (double v : values) log_sum += std::log(v);
        out.geometric_mean = std::exp(log_sum / static_cast<double>(values.size()));
        out.value = out.geometric_mean;
        out.log_domain = true;
    } else {
        out.value = out.arithmetic_mean;
    }
    return out;
}

[[nodiscard]] inline NodeAggregate aggregate(std::span<const RunRecord> records, std::size_t n_metrics) {
    NodeAggregate out;
    for (const auto& r : records) out.n_runs += r.ok ? 1 : 0;
    out.valid = out.n_runs > 0;
    out.metrics.resize(n_metrics);
    if (!out.valid) return out;
    for (std::size_t m = 0; m < n_metrics; ++m) {
        std::vector<double> values;
        for (const auto& r : records) {
            if (r.ok) values.push_back(r.values[m]);
        }
        out.metrics[m] = aggregate_values(std::move(values));
    }
    return out;
}

/// Metrics of one simulation record.
[[nodiscard]] inline std::vector<double> compute_metrics(const SimulationRecord& rec, std::span<const Metric> metrics,
                                                         std::size_t head) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::span<const double> r(rec.returns);
    const std::size_t half = r.size() / 2;
    const auto late = r.last(half);
    std::vector<double> out;
    out.reserve(metrics.size());
    for (Metric m : metrics) {
        double v = nan;
        try {
            switch (m) {
                case Metric::reduction: {
                    const auto mags = stats::magnitudes(r);
                    v = stats::reduction_ratio(mags, head, half);
                    break;
                }
                case Metric::kurtosis: v = stats::kurtosis(late); break;
                case Metric::variance: v = stats::variance(late); break;
                case Metric::income:
                    v = stats::income_factor(rec.mean_spec_capital, rec.mean_spec_capital.size() / 2);
                    break;
                case Metric::gini: v = stats::gini(rec.final_spec_capitals); break;
                case Metric::tail_exponent: {
                    const auto z = stats::normalize_by_std(late);
                    v = stats::hill_fit_ks(stats::magnitudes(z)).exponent;
                    break;
                }
            }
        } catch (const std::exception&) {
            v = nan;
        }
        out.push_back(v);
    }
    return out;
}

struct NodeResult {
    std::size_t index = 0;
    std::vector<double> coordinates;
    MarketConfig config;
    std::vector<RunRecord> runs;
    NodeAggregate aggregate;
};

struct SweepResult {
    std::vector<Axis> axes;
    std::vector<Metric> metrics;
    std::vector<NodeResult> nodes;
    std::string version{kVersion};
    std::uint64_t config_hash = 0;
    std::uint64_t base_seed = 0;
};

[[nodiscard]] inline std::string canonical_string(const SweepSpec& spec) {
    std::string s = infomarket::canonical_string(spec.base);
    s += ";repetitions=" + std::to_string(spec.repetitions) + ";head=" + std::to_string(spec.head);
    for (const auto& a : spec.axes) {
        s += ";axis=" + a.name + ":";
        for (std::size_t i = 0; i < a.values.size(); ++i) s += (i ? "," : "") + exact_number(a.values[i]);
    }
    s += ";metrics=";
    for (std::size_t i = 0; i < spec.metrics.size(); ++i) s += (i ? "," : "") + std::string(to_string(spec.metrics[i]));
    return s;
}

/// Simulates every (node, repetition) pair on `threads` workers. Results are
/// written into fixed slots, so the output does not depend on scheduling.
/// Failed runs are recorded with their error; they never abort the sweep.
[[nodiscard]] inline SweepResult run_sweep(const SweepSpec& spec, std::size_t threads = 1) {
    validate(spec);
    const auto seeds = derive_seeds(spec);
    const std::size_t nodes = node_count(spec);

    SweepResult result;
    result.axes = spec.axes;
    result.metrics = spec.metrics;
    result.config_hash = fnv1a64(canonical_string(spec));
    result.base_seed = spec.base.seed;
    result.nodes.resize(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        auto& node = result.nodes[n];
        node.index = n;
        node.coordinates = node_coordinates(spec, n);
        node.config = node_config(spec, n);
        node.runs.resize(spec.repetitions);
    }

    const std::size_t tasks = nodes * spec.repetitions;
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t task = next++; task < tasks; task = next++) {
            const std::size_t n = task / spec.repetitions;
            const std::size_t r = task % spec.repetitions;
            RunRecord& slot = result.nodes[n].runs[r];
            MarketConfig c = result.nodes[n].config;
            c.seed = seeds[task];
            slot.seed = c.seed;
            try {
                const auto rec = run(c);
                slot.values = compute_metrics(rec, spec.metrics, spec.head);
                slot.ok = true;
            } catch (const std::exception& e) {
                slot.ok = false;
                slot.error = e.what();
                slot.values.assign(spec.metrics.size(), std::numeric_limits<double>::quiet_NaN());
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, tasks));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    for (auto& node : result.nodes) node.aggregate = aggregate(node.runs, spec.metrics.size());
    return result;
}

/// Model variants compared along alpha; each changes one thing relative to
/// the base configuration.
enum class Variant { reference, deterministic_producers, random_producers, endogenous };

inline constexpr Variant kAllVariants[] = {Variant::reference, Variant::deterministic_producers,
                                           Variant::random_producers, Variant::endogenous};

[[nodiscard]] inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::reference: return "reference";
        case Variant::deterministic_producers: return "deterministic_producers";
        case Variant::random_producers: return "random_producers";
        default: return "endogenous";
    }
}

[[nodiscard]] inline Variant variant_from_string(std::string_view name) {
    for (Variant v : kAllVariants) {
        if (to_string(v) == name) return v;
    }
    throw ConfigError("variants", "unknown variant '" + std::string(name) + "'");
}

struct AlphaScanSpec {
    MarketConfig base;  // the reference variant
    std::vector<double> alphas;
    std::size_t repetitions = 5;
    std::vector<Variant> variants{kAllVariants, kAllVariants + 4};
    std::size_t variant_producers = 16;  // N_p for the producer variants
};

/// One table row; metric values are node aggregates (`MetricAggregate::value`).
struct AlphaScanRow {
    Variant variant = Variant::reference;
    double alpha = 0.0;
    double variance = 0.0;
    double kurtosis = 0.0;
    double income = 0.0;
    double gini = 0.0;
    std::size_t n_runs = 0;
};

[[nodiscard]] inline MarketConfig variant_config(const AlphaScanSpec& spec, Variant v) {
    MarketConfig c = spec.base;
    switch (v) {
        case Variant::reference: break;
        case Variant::deterministic_producers:
            c.n_producers = spec.variant_producers;
            c.producer_kind = ProducerKind::deterministic;
            break;
        case Variant::random_producers:
            c.n_producers = spec.variant_producers;
            c.producer_kind = ProducerKind::random;
            break;
        case Variant::endogenous: {
            const std::size_t d = c.states();
            if (!std::has_single_bit(d)) throw ConfigError("states", "endogenous variant needs a power-of-two D");
            c.info = Endogenous{std::countr_zero(d)};
            break;
        }
    }
    return c;
}

/// Variance, kurtosis, income factor and Gini index against alpha, per variant.
/// Each variant runs as an alpha-axis sweep with its own derived seed.
[[nodiscard]] inline std::vector<AlphaScanRow> alpha_scan(const AlphaScanSpec& spec, std::size_t threads = 1) {
    std::vector<AlphaScanRow> rows;
    for (Variant v : spec.variants) {
        SweepSpec s;
        s.base = variant_config(spec, v);
        s.base.seed = derive_seed(spec.base.seed, static_cast<std::uint64_t>(v));
        s.axes = {Axis{"alpha", spec.alphas}};
        s.repetitions = spec.repetitions;
        s.metrics = {Metric::variance, Metric::kurtosis, Metric::income, Metric::gini};
        const auto result = run_sweep(s, threads);
        for (const auto& node : result.nodes) {
            AlphaScanRow row;
            row.variant = v;
            row.alpha = node.coordinates[0];
            row.n_runs = node.aggregate.n_runs;
            row.variance = node.aggregate.metrics[0].value;
            row.kurtosis = node.aggregate.metrics[1].value;
            row.income = node.aggregate.metrics[2].value;
            row.gini = node.aggregate.metrics[3].value;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace infomarket::sweep
