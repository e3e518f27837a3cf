#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infomarket/error.hpp"
#include "infomarket/market.hpp"

namespace infomarket::stats {

[[nodiscard]] inline double mean(std::span<const double> x) {
    if (x.empty()) throw SampleSizeError("mean of empty sequence");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population variance (1/n).
[[nodiscard]] inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size());
}

/// Population standard deviation (1/n).
[[nodiscard]] inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Divides by the (population) standard deviation; the mean is not removed.
[[nodiscard]] inline std::vector<double> normalize_by_std(std::span<const double> x) {
    if (x.size() < 2) throw SampleSizeError("normalize_by_std needs at least 2 values");
    const double sd = stddev(x);
    if (!(sd > 0.0) || !std::isfinite(sd)) throw DegenerateInputError("normalize_by_std: zero variance");
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [sd](double v) { return v / sd; });
    return out;
}

/// Non-excess kurtosis m4 / m2^2 (3 for a Gaussian).
[[nodiscard]] inline double kurtosis(std::span<const double> x) {
    if (x.size() < 4) throw SampleSizeError("kurtosis needs at least 4 values");
    const double m = mean(x);
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d2 = (v - m) * (v - m);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    if (!(m2 > 0.0)) throw DegenerateInputError("kurtosis: zero variance");
    return m4 / (m2 * m2);
}

[[nodiscard]] inline std::vector<double> magnitudes(std::span<const double> x) {
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](double v) { return std::abs(v); });
    return out;
}

/// Empirical complementary CDF by rank ordering: the k-th largest value is
/// paired with k/n.
struct CcdfCurve {
    std::vector<double> x;  // non-increasing
    std::vector<double> p;  // k/n, strictly increasing to 1
};

[[nodiscard]] inline CcdfCurve ccdf_rank_ordered(std::span<const double> values) {
    if (values.empty()) throw SampleSizeError("ccdf of empty sequence");
    CcdfCurve c;
    c.x.assign(values.begin(), values.end());
    std::sort(c.x.begin(), c.x.end(), std::greater<>());
    const double n = static_cast<double>(c.x.size());
    c.p.resize(c.x.size());
    for (std::size_t k = 0; k < c.x.size(); ++k) c.p[k] = static_cast<double>(k + 1) / n;
    return c;
}

/// Fraction of values strictly greater than `threshold`.
[[nodiscard]] inline double exceedance(std::span<const double> values, double threshold) {
    if (values.empty()) throw SampleSizeError("exceedance of empty sequence");
    const auto count = std::count_if(values.begin(), values.end(), [&](double v) { return v > threshold; });
    return static_cast<double>(count) / static_cast<double>(values.size());
}

/// Power-law tail P(X > x) ~ (x / cutoff)^(-exponent) for x >= cutoff.
struct TailFit {
    double exponent = 0.0;
    double cutoff = 0.0;
    double ks_distance = 0.0;
    std::size_t n_tail = 0;
};

inline constexpr std::size_t kMinTailPoints = 10;
inline constexpr std::size_t kMinHillSample = 100;

/// Hill estimator with the cutoff chosen to minimise the Kolmogorov-Smirnov
/// distance between the empirical tail and the fitted power law. Every
/// distinct order statistic leaving at least `kMinTailPoints` points in the
/// tail is a candidate; KS ties go to the larger tail. Non-positive values
/// are ignored.
[[nodiscard]] inline TailFit hill_fit_ks(std::span<const double> values) {
    std::vector<double> x;
    x.reserve(values.size());
    for (double v : values) {
        if (v > 0.0 && std::isfinite(v)) x.push_back(v);
    }
    if (x.size() < kMinHillSample) {
        throw SampleSizeError("hill_fit_ks needs at least " + std::to_string(kMinHillSample) +
                              " positive values, got " + std::to_string(x.size()));
    }
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(x[i]);

    // [group_start[i], group_end[i]) is the run of indices holding the value x[i].
    std::vector<std::size_t> group_end(n);
    std::vector<std::size_t> group_start(n);
    group_end[n - 1] = n;
    for (std::size_t i = n - 1; i-- > 0;) group_end[i] = x[i] == x[i + 1] ? group_end[i + 1] : i + 1;
    group_start[0] = 0;
    for (std::size_t i = 1; i < n; ++i) group_start[i] = x[i] == x[i - 1] ? group_start[i - 1] : i;

    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + logs[i];

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i + kMinTailPoints <= n; ++i) {
        if (i == 0 || x[i] != x[i - 1]) candidates.push_back(i);
    }

    const auto exponent_at = [&](std::size_t i) {
        const double k = static_cast<double>(n - i);
        const double denom = suffix[i] - k * logs[i];
        return denom > 0.0 ? k / denom : std::numeric_limits<double>::infinity();
    };

    // KS distance of the tail starting at i. Returns early with a value above
    // `bound` as soon as the distance is known to exceed it.
    const auto ks_at = [&](std::size_t i, double xi, double bound) {
        const double k = static_cast<double>(n - i);
        const double base = logs[i];
        const auto deviation = [&](std::size_t a) {
            const double model = 1.0 - std::exp(-xi * (logs[a] - base));
            const double before = static_cast<double>(group_start[a] - i) / k;
            const double after = static_cast<double>(group_end[a] - i) / k;
            return std::max(std::abs(model - before), std::abs(after - model));
        };
        const std::size_t probe = std::max<std::size_t>(1, (n - i) / 256);
        for (std::size_t a = i; a < n; a += probe) {
            const double d = deviation(a);
            if (d > bound) return d;
        }
        double worst = 0.0;
        for (std::size_t a = i; a < n; a = group_end[a]) {
            worst = std::max(worst, deviation(a));
            if (worst > bound) return worst;
        }
        return worst;
    };

    TailFit best;
    best.ks_distance = std::numeric_limits<double>::infinity();
    const auto consider = [&](std::size_t i) {
        const double xi = exponent_at(i);
        if (!std::isfinite(xi)) return;
        const double d = ks_at(i, xi, best.ks_distance);
        const std::size_t k = n - i;
        if (d < best.ks_distance || (d == best.ks_distance && k > best.n_tail)) {
            best = {xi, x[i], d, k};
        }
    };
    // A coarse pass tightens the bound so the exhaustive pass can stop early.
    const std::size_t stride = std::max<std::size_t>(1, candidates.size() / 64);
    for (std::size_t c = 0; c < candidates.size(); c += stride) consider(candidates[c]);
    for (std::size_t i : candidates) consider(i);

    if (best.n_tail == 0) throw DegenerateInputError("hill_fit_ks: no tail with spread");
    return best;
}

/// A fitted tail counts as power law when the fourth moment diverges
/// (exponent <= 4) and the tail holds at least 50 points.
inline constexpr double kHeavyTailMaxExponent = 4.0;
inline constexpr std::size_t kHeavyTailMinPoints = 50;

[[nodiscard]] inline bool is_heavy_tail(const TailFit& f) {
    return std::isfinite(f.exponent) && f.exponent <= kHeavyTailMaxExponent && f.n_tail >= kHeavyTailMinPoints;
}

/// Sample autocorrelation with the biased 1/n normalisation, lags 0..max_lag.
[[nodiscard]] inline std::vector<double> autocorr(std::span<const double> x, std::size_t max_lag) {
    if (x.size() <= max_lag + 1) {
        throw SampleSizeError("autocorr: series of length " + std::to_string(x.size()) +
                              " too short for lag " + std::to_string(max_lag));
    }
    const double m = mean(x);
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - m;
    double c0 = 0.0;
    for (double v : d) c0 += v * v;
    if (!(c0 > 0.0)) throw DegenerateInputError("autocorr: zero variance");
    std::vector<double> out(max_lag + 1);
    out[0] = 1.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < d.size(); ++i) c += d[i] * d[i + lag];
        out[lag] = c / c0;
    }
    return out;
}

/// Autocorrelation of |r| (volatility clustering), lag 0 included.
[[nodiscard]] inline std::vector<double> autocorr_abs(std::span<const double> returns, std::size_t max_lag) {
    const auto mags = magnitudes(returns);
    return autocorr(mags, max_lag);
}

/// mean(first `head`) / mean(last `tail`); +infinity if the tail mean is 0.
[[nodiscard]] inline double reduction_ratio(std::span<const double> mags, std::size_t head, std::size_t tail) {
    if (head == 0 || tail == 0 || head + tail > mags.size()) {
        throw SampleSizeError("reduction_ratio: head + tail exceeds series length");
    }
    const double h = mean(mags.first(head));
    const double t = mean(mags.last(tail));
    if (t == 0.0) return std::numeric_limits<double>::infinity();
    return h / t;
}

/// Gini index sum_ij |x_i - x_j| / (2 n^2 mean), via the sorted-rank identity.
[[nodiscard]] inline double gini(std::span<const double> values) {
    if (values.empty()) throw SampleSizeError("gini of empty sequence");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    if (x.front() < 0.0) throw DegenerateInputError("gini: negative value");
    const double total = std::accumulate(x.begin(), x.end(), 0.0);
    if (!(total > 0.0)) throw DegenerateInputError("gini: all values are zero");
    const double n = static_cast<double>(x.size());
    // sum_ij |x_i - x_j| = 2 sum_i (2i - n + 1) x_(i)
    double weighted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) weighted += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
    return std::max(0.0, weighted / (n * total));
}

[[nodiscard]] inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw SampleSizeError("pearson: need two equal-length series");
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0 && sbb > 0.0)) throw DegenerateInputError("pearson: zero variance");
    return sab / std::sqrt(saa * sbb);
}

/// Least-squares slope a of C(t)^2 = C(t0)^2 + a t over t >= t0.
[[nodiscard]] inline double income_factor(std::span<const double> mean_capitals, std::size_t t0) {
    if (t0 >= mean_capitals.size() || mean_capitals.size() - t0 < 10) {
        throw SampleSizeError("income_factor needs at least 10 points after t0");
    }
    const std::size_t n = mean_capitals.size() - t0;
    // Centered time avoids cancellation for large t.
    const double t_mean = static_cast<double>(t0) + static_cast<double>(n - 1) / 2.0;
    double y_mean = 0.0;
    for (std::size_t t = t0; t < mean_capitals.size(); ++t) y_mean += mean_capitals[t] * mean_capitals[t];
    y_mean /= static_cast<double>(n);
    double sty = 0.0, stt = 0.0;
    for (std::size_t t = t0; t < mean_capitals.size(); ++t) {
        const double dt = static_cast<double>(t) - t_mean;
        sty += dt * (mean_capitals[t] * mean_capitals[t] - y_mean);
        stt += dt * dt;
    }
    return sty / stt;
}

/// (tau, |r|) pairs for steps whose information state was seen before.
struct SurpriseSeries {
    std::vector<std::size_t> tau;
    std::vector<double> magnitude;
};

/// Collects (tau, |r|) from steps >= `first_step` (step 0 has no return).
[[nodiscard]] inline SurpriseSeries surprise_series(const SimulationRecord& rec, std::size_t first_step = 1) {
    SurpriseSeries s;
    for (std::size_t t = std::max<std::size_t>(first_step, 1); t < rec.taus.size(); ++t) {
        if (!rec.taus[t]) continue;
        s.tau.push_back(*rec.taus[t]);
        s.magnitude.push_back(std::abs(rec.returns[t - 1]));
    }
    return s;
}

struct TauBin {
    double lower = 0.0;  // inclusive
    double upper = 0.0;  // exclusive
    double center = 0.0;  // geometric
    double mean_magnitude = 0.0;
    std::size_t count = 0;
};

inline constexpr int kTauBinsPerDecade = 10;
inline constexpr std::size_t kMinTauBinCount = 20;

struct SurpriseStats {
    SurpriseSeries series;
    std::vector<TauBin> bins;  // sparse bins dropped
    double log_correlation = 0.0;  // Pearson(log tau, log |r|) over |r| > 0
    CcdfCurve tau_ccdf;
    TailFit tau_tail;
    /// Exponent of the density P(tau) ~ tau^-(1 + xi), from the CCDF fit.
    [[nodiscard]] double tau_density_exponent() const { return tau_tail.exponent + 1.0; }
};

/// Mean |r| in logarithmic tau bins (10 per decade); bins with fewer than
/// kMinTauBinCount samples are dropped.
[[nodiscard]] inline std::vector<TauBin> tau_binned_means(const SurpriseSeries& s) {
    std::vector<TauBin> bins;
    if (s.tau.empty()) return bins;
    const std::size_t max_tau = *std::max_element(s.tau.begin(), s.tau.end());
    const auto bin_of = [](std::size_t tau) {
        return static_cast<std::size_t>(std::floor(std::log10(static_cast<double>(tau)) * kTauBinsPerDecade + 1e-9));
    };
    const std::size_t nbins = bin_of(max_tau) + 1;
    std::vector<double> sums(nbins, 0.0);
    std::vector<std::size_t> counts(nbins, 0);
    for (std::size_t i = 0; i < s.tau.size(); ++i) {
        const std::size_t b = bin_of(s.tau[i]);
        sums[b] += s.magnitude[i];
        ++counts[b];
    }
    for (std::size_t b = 0; b < nbins; ++b) {
        if (counts[b] < kMinTauBinCount) continue;
        TauBin bin;
        bin.lower = std::pow(10.0, static_cast<double>(b) / kTauBinsPerDecade);
        bin.upper = std::pow(10.0, static_cast<double>(b + 1) / kTauBinsPerDecade);
        bin.center = std::sqrt(bin.lower * bin.upper);
        bin.mean_magnitude = sums[b] / static_cast<double>(counts[b]);
        bin.count = counts[b];
        bins.push_back(bin);
    }
    return bins;
}

/// Appends `more` to `into`; pooling several runs of one configuration.
inline void append(SurpriseSeries& into, const SurpriseSeries& more) {
    into.tau.insert(into.tau.end(), more.tau.begin(), more.tau.end());
    into.magnitude.insert(into.magnitude.end(), more.magnitude.begin(), more.magnitude.end());
}

[[nodiscard]] inline SurpriseStats surprise_stats(SurpriseSeries series) {
    SurpriseStats out;
    out.series = std::move(series);
    if (out.series.tau.empty()) throw SampleSizeError("surprise_stats: no step with a defined tau");
    out.bins = tau_binned_means(out.series);

    std::vector<double> log_tau, log_mag;
    for (std::size_t i = 0; i < out.series.tau.size(); ++i) {
        if (out.series.magnitude[i] > 0.0) {
            log_tau.push_back(std::log(static_cast<double>(out.series.tau[i])));
            log_mag.push_back(std::log(out.series.magnitude[i]));
        }
    }
    try {
        out.log_correlation = pearson(log_tau, log_mag);
    } catch (const std::exception&) {
        out.log_correlation = std::numeric_limits<double>::quiet_NaN();
    }

    std::vector<double> taus(out.series.tau.begin(), out.series.tau.end());
    out.tau_ccdf = ccdf_rank_ordered(taus);
    out.tau_tail = hill_fit_ks(taus);
    return out;
}

[[nodiscard]] inline SurpriseStats surprise_stats(const SimulationRecord& rec, std::size_t first_step = 1) {
    return surprise_stats(surprise_series(rec, first_step));
}

/// Kendall rank correlation (tau-b) between two equal-length sequences.
[[nodiscard]] inline double kendall_tau(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw SampleSizeError("kendall_tau: need two equal-length series");
    double concordant = 0.0, ties_a = 0.0, ties_b = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const double da = a[j] - a[i];
            const double db = b[j] - b[i];
            pairs += 1.0;
            if (da == 0.0) ties_a += 1.0;
            if (db == 0.0) ties_b += 1.0;
            if (da * db > 0.0) concordant += 1.0;
            if (da * db < 0.0) concordant -= 1.0;
        }
    }
    const double denom = std::sqrt((pairs - ties_a) * (pairs - ties_b));
    if (!(denom > 0.0)) throw DegenerateInputError("kendall_tau: constant sequence");
    return concordant / denom;
}

/// One-sided z score of an upward monotone trend in `y` (Mann-Kendall test,
/// no-ties variance). z > 2.326 rejects "no trend" at the 1% level.
[[nodiscard]] inline double trend_z(std::span<const double> y) {
    std::vector<double> idx(y.size());
    std::iota(idx.begin(), idx.end(), 0.0);
    const double tau = kendall_tau(idx, y);
    const double n = static_cast<double>(y.size());
    return 3.0 * tau * std::sqrt(n * (n - 1.0)) / std::sqrt(2.0 * (2.0 * n + 5.0));
}

/// Statistics bundle for a return series; model output and empirical data go
/// through this one function.
struct ReturnStats {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double kurtosis = 0.0;
    std::optional<double> reduction;  // first `head` vs the rest
    std::vector<double> normalized;
    CcdfCurve ccdf;  // of |normalized|
    std::optional<TailFit> tail;
    std::string tail_error;  // why `tail` is empty
    bool heavy_tail = false;  // is_heavy_tail(*tail)
    std::vector<double> acf_abs;  // lags 0..max_lag
};

struct AnalysisOptions {
    std::size_t max_lag = 500;
    std::size_t head = 10;  // reduction head; 0 skips the reduction
};

/// Normalises by the standard deviation, then computes kurtosis, CCDF, the
/// Hill/KS tail fit and the |r| autocorrelation. Throws DegenerateInputError
/// for zero variance.
[[nodiscard]] inline ReturnStats analyze_returns(std::span<const double> returns, const AnalysisOptions& opt = {}) {
    if (returns.size() < 4) throw SampleSizeError("analyze_returns: need at least 4 returns");
    ReturnStats out;
    out.n = returns.size();
    out.mean = mean(returns);
    out.stddev = stddev(returns);
    out.normalized = normalize_by_std(returns);
    out.kurtosis = kurtosis(returns);
    const auto mags = magnitudes(out.normalized);
    if (opt.head > 0 && opt.head < returns.size()) {
        out.reduction = reduction_ratio(magnitudes(returns), opt.head, returns.size() - opt.head);
    }
    out.ccdf = ccdf_rank_ordered(mags);
    try {
        out.tail = hill_fit_ks(mags);
        out.heavy_tail = is_heavy_tail(*out.tail);
    } catch (const std::exception& e) {
        out.tail_error = e.what();
    }
    out.acf_abs = autocorr(mags, std::min(opt.max_lag, returns.size() - 2));
    return out;
}

}  // namespace infomarket::stats
