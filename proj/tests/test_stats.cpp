#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "infomarket/error.hpp"
#include "infomarket/market.hpp"
#include "infomarket/rng.hpp"
#include "infomarket/stats.hpp"

using namespace infomarket;
using namespace infomarket::stats;

namespace {

std::vector<double> pareto(double xi, std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, 7);
    std::vector<double> x(n);
    for (auto& v : x) v = std::pow(1.0 - rng.uniform(), -1.0 / xi);
    return x;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> x(n);
    for (auto& v : x) v = d(g);
    return x;
}

// Exhaustive Hill/KS scan written directly from the definition.
TailFit brute_force_hill(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    TailFit best;
    best.ks_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 10 <= n; ++i) {
        if (i > 0 && x[i] == x[i - 1]) continue;
        const double k = static_cast<double>(n - i);
        double denom = 0.0;
        for (std::size_t j = i; j < n; ++j) denom += std::log(x[j] / x[i]);
        if (!(denom > 0.0)) continue;
        const double xi = k / denom;
        double d = 0.0;
        for (std::size_t j = i; j < n; ++j) {
            const double model = 1.0 - std::pow(x[j] / x[i], -xi);
            const double below = static_cast<double>(std::lower_bound(x.begin() + i, x.end(), x[j]) - x.begin() - i);
            const double upto = static_cast<double>(std::upper_bound(x.begin() + i, x.end(), x[j]) - x.begin() - i);
            d = std::max({d, std::abs(model - below / k), std::abs(upto / k - model)});
        }
        if (d < best.ks_distance || (d == best.ks_distance && n - i > best.n_tail)) best = {xi, x[i], d, n - i};
    }
    return best;
}

double pairwise_gini(const std::vector<double>& x) {
    double s = 0.0, total = 0.0;
    for (double a : x) {
        total += a;
        for (double b : x) s += std::abs(a - b);
    }
    const double n = static_cast<double>(x.size());
    return s / (2.0 * n * n * (total / n));
}

}  // namespace

TEST(Normalize, AlternatingSigns) {
    const std::vector<double> x{1, -1, 1, -1};
    EXPECT_EQ(normalize_by_std(x), x);
}

TEST(Normalize, UnitStdAndIdempotent) {
    const auto x = gaussian(1000, 3, 0.37);
    const auto z = normalize_by_std(x);
    EXPECT_NEAR(stddev(z), 1.0, 1e-12);
    const auto zz = normalize_by_std(z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(zz[i], z[i], 1e-12);
}

TEST(Normalize, ConstantIsDegenerate) {
    const std::vector<double> x(5, 2.0);
    EXPECT_THROW((void)normalize_by_std(x), DegenerateInputError);
    EXPECT_THROW((void)normalize_by_std(std::vector<double>{1.0}), SampleSizeError);
}

TEST(Ccdf, RankOrdering) {
    const auto c = ccdf_rank_ordered(std::vector<double>{3, 1, 2});
    EXPECT_EQ(c.x, (std::vector<double>{3, 2, 1}));
    ASSERT_EQ(c.p.size(), 3U);
    EXPECT_DOUBLE_EQ(c.p[0], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.p[1], 2.0 / 3.0);
    EXPECT_EQ(c.p[2], 1.0);
    const auto s = ccdf_rank_ordered(std::vector<double>{5});
    EXPECT_EQ(s.x, (std::vector<double>{5}));
    EXPECT_EQ(s.p, (std::vector<double>{1}));
    EXPECT_THROW((void)ccdf_rank_ordered(std::vector<double>{}), SampleSizeError);
}

TEST(Ccdf, ExactProbabilitiesAndOrder) {
    const auto x = gaussian(777, 5);
    const auto c = ccdf_rank_ordered(magnitudes(x));
    for (std::size_t k = 0; k < c.p.size(); ++k) {
        EXPECT_EQ(c.p[k], static_cast<double>(k + 1) / 777.0);
        if (k > 0) {
            EXPECT_LE(c.x[k], c.x[k - 1]);
            EXPECT_GT(c.p[k], c.p[k - 1]);
        }
    }
    EXPECT_EQ(c.p.back(), 1.0);
}

TEST(Ccdf, ParetoLogLogSlope) {
    const auto x = pareto(3.0, 100000, 11);
    const auto c = ccdf_rank_ordered(x);
    // least squares of log p on log x over the top 10%
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const std::size_t m = 10000;
    for (std::size_t k = 0; k < m; ++k) {
        const double lx = std::log(c.x[k]), ly = std::log(c.p[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    EXPECT_NEAR(slope, -3.0, 0.2);
}

TEST(Hill, RecoversParetoExponents) {
    for (double xi : {1.5, 2.5, 4.0}) {
        const auto fit = hill_fit_ks(pareto(xi, 100000, 42));
        EXPECT_NEAR(fit.exponent, xi, 0.05 * xi) << "xi " << xi;
        EXPECT_GE(fit.n_tail, kMinTailPoints);
        EXPECT_GT(fit.cutoff, 0.0);
    }
    EXPECT_NEAR(hill_fit_ks(pareto(2.5, 100000, 43)).exponent, 2.5, 0.1);
}

TEST(Hill, ExponentialSampleFitsWorseThanPareto) {
    CounterRng rng(9, 1);
    std::vector<double> e(100000);
    for (auto& v : e) v = -std::log(1.0 - rng.uniform());
    const auto fe = hill_fit_ks(e);
    const auto fp = hill_fit_ks(pareto(2.5, 100000, 9));
    EXPECT_GT(fe.ks_distance, fp.ks_distance);
    EXPECT_LT(fe.n_tail, fp.n_tail);
}

TEST(Hill, ScaleEquivariance) {
    const auto x = pareto(2.0, 5000, 3);
    auto y = x;
    for (auto& v : y) v *= 8.0;
    const auto a = hill_fit_ks(x);
    const auto b = hill_fit_ks(y);
    EXPECT_NEAR(a.exponent, b.exponent, 1e-9 * a.exponent);
    EXPECT_NEAR(b.cutoff, 8.0 * a.cutoff, 1e-12 * b.cutoff);
    EXPECT_EQ(a.n_tail, b.n_tail);
}

TEST(Hill, MatchesExhaustiveScan) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto x = seed % 2 ? pareto(2.0 + 0.3 * seed, 600, seed) : magnitudes(gaussian(600, seed));
        if (seed == 4) {
            for (auto& v : x) v = std::round(v * 20.0) / 20.0 + 0.05;  // heavy ties
        }
        const auto fast = hill_fit_ks(x);
        const auto slow = brute_force_hill(x);
        EXPECT_EQ(fast.n_tail, slow.n_tail) << "seed " << seed;
        EXPECT_EQ(fast.cutoff, slow.cutoff) << "seed " << seed;
        EXPECT_NEAR(fast.exponent, slow.exponent, 1e-9 * slow.exponent) << "seed " << seed;
        EXPECT_NEAR(fast.ks_distance, slow.ks_distance, 1e-12) << "seed " << seed;
    }
}

TEST(Hill, TooFewPoints) {
    EXPECT_THROW((void)hill_fit_ks(pareto(2.0, 99, 1)), SampleSizeError);
    std::vector<double> x = pareto(2.0, 99, 1);
    x.push_back(0.0);
    EXPECT_THROW((void)hill_fit_ks(x), SampleSizeError);  // zeros are not tail data
}

TEST(Hill, HeavyTailRule) {
    EXPECT_TRUE(is_heavy_tail(hill_fit_ks(pareto(2.5, 30000, 5))));
    EXPECT_FALSE(is_heavy_tail(hill_fit_ks(magnitudes(gaussian(30000, 5)))));
}

TEST(Autocorr, LagZeroAndBand) {
    const auto x = gaussian(100000, 21);
    const auto acf = autocorr_abs(x, 10);
    ASSERT_EQ(acf.size(), 11U);
    EXPECT_EQ(acf[0], 1.0);
    const double band = 3.0 / std::sqrt(100000.0);
    for (std::size_t k = 1; k <= 10; ++k) EXPECT_LT(std::abs(acf[k]), band) << "lag " << k;
}

TEST(Autocorr, MatchesDirectFormulaAndIsBounded) {
    const auto x = gaussian(300, 2);
    const auto acf = autocorr(x, 40);
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / 300.0;
    double c0 = 0.0;
    for (double v : x) c0 += (v - m) * (v - m);
    for (std::size_t k = 1; k <= 40; ++k) {
        double c = 0.0;
        for (std::size_t i = 0; i + k < 300; ++i) c += (x[i] - m) * (x[i + k] - m);
        EXPECT_NEAR(acf[k], c / c0, 1e-12);
        EXPECT_LE(std::abs(acf[k]), 1.0);
    }
    EXPECT_THROW((void)autocorr(x, 299), SampleSizeError);
    EXPECT_THROW((void)autocorr(std::vector<double>(10, 1.0), 2), DegenerateInputError);
}

TEST(Autocorr, ShuffledClusteredSeriesIsWhite) {
    // GARCH-like clustered series: volatility follows a slow AR process.
    std::mt19937_64 g(17);
    std::normal_distribution<double> n01;
    std::vector<double> r(50000);
    double h = 0.0;
    for (auto& v : r) {
        h = 0.99 * h + 0.1 * n01(g);
        v = std::exp(h) * n01(g);
    }
    const auto clustered = autocorr_abs(r, 50);
    EXPECT_GT(clustered[50], 0.1);
    std::shuffle(r.begin(), r.end(), g);
    const auto white = autocorr_abs(r, 50);
    const double band = 3.0 / std::sqrt(50000.0);
    for (std::size_t k = 1; k <= 50; ++k) EXPECT_LT(std::abs(white[k]), band) << "lag " << k;
}

TEST(Kurtosis, Examples) {
    EXPECT_EQ(kurtosis(std::vector<double>{1, -1, 1, -1}), 1.0);
    EXPECT_NEAR(kurtosis(gaussian(1000000, 8)), 3.0, 0.05);
    EXPECT_THROW((void)kurtosis(std::vector<double>(6, 4.0)), DegenerateInputError);
    EXPECT_THROW((void)kurtosis(std::vector<double>{1, 2, 3}), SampleSizeError);
    // closed form for {0, 0, 0, 1}: m2 = 3/16, m4 = 21/256 -> 7/3
    EXPECT_NEAR(kurtosis(std::vector<double>{0, 0, 0, 1}), 7.0 / 3.0, 1e-14);
}

TEST(Kurtosis, AffineInvariance) {
    const auto x = magnitudes(gaussian(2000, 4));
    for (auto [a, b] : {std::pair{2.5, 1.0}, std::pair{-0.3, 7.0}}) {
        std::vector<double> y(x.size());
        std::transform(x.begin(), x.end(), y.begin(), [&](double v) { return a * v + b; });
        EXPECT_NEAR(kurtosis(y), kurtosis(x), 1e-9);
    }
}

TEST(Reduction, Examples) {
    const std::vector<double> same{1, 2, 1, 2};
    EXPECT_EQ(reduction_ratio(same, 2, 2), 1.0);
    const std::vector<double> drop{0.2, 0.2, 0.002, 0.002, 0.002};
    EXPECT_NEAR(reduction_ratio(drop, 2, 3), 100.0, 1e-12);
    const std::vector<double> zero_tail{1, 0, 0};
    EXPECT_EQ(reduction_ratio(zero_tail, 1, 2), std::numeric_limits<double>::infinity());
    EXPECT_THROW((void)reduction_ratio(same, 3, 2), SampleSizeError);
}

TEST(Gini, Examples) {
    EXPECT_EQ(gini(std::vector<double>(10, 3.0)), 0.0);
    EXPECT_DOUBLE_EQ(gini(std::vector<double>{1, 3}), 0.25);
    std::vector<double> one(100, 0.0);
    one[37] = 5.0;
    EXPECT_NEAR(gini(one), 0.99, 1e-14);
    EXPECT_THROW((void)gini(std::vector<double>(4, 0.0)), DegenerateInputError);
    EXPECT_THROW((void)gini(std::vector<double>{}), SampleSizeError);
}

TEST(Gini, MatchesPairwiseFormulaAndInvariances) {
    auto x = magnitudes(gaussian(400, 12));
    const double g = gini(x);
    EXPECT_NEAR(g, pairwise_gini(x), 1e-12);
    auto scaled = x;
    for (auto& v : scaled) v *= 17.0;
    EXPECT_NEAR(gini(scaled), g, 1e-12);
    std::reverse(x.begin(), x.end());
    EXPECT_NEAR(gini(x), g, 1e-14);
    EXPECT_GE(g, 0.0);
    EXPECT_LT(g, 1.0);
}

TEST(IncomeFactor, ExactOnAffineSquares) {
    std::vector<double> c(5000);
    for (std::size_t t = 0; t < c.size(); ++t) c[t] = std::sqrt(4.0 + 0.001 * static_cast<double>(t));
    EXPECT_NEAR(income_factor(c, 0), 0.001, 1e-15);
    EXPECT_NEAR(income_factor(c, 2500), 0.001, 1e-15);
    EXPECT_EQ(income_factor(std::vector<double>(50, 1.3), 10), 0.0);
    EXPECT_THROW((void)income_factor(std::vector<double>(15, 1.0), 6), SampleSizeError);
    EXPECT_THROW((void)income_factor(std::vector<double>(15, 1.0), 15), SampleSizeError);
}

TEST(IncomeFactor, CrowdedMarketWithProducersIsPositive) {
    MarketConfig c;
    c.n_speculators = 256;
    c.n_producers = 16;
    c.info = Exogenous::uniform(64);  // alpha = 1/4
    c.horizon = 100000;
    c.seed = 3;
    const auto rec = run(c);
    EXPECT_GT(income_factor(rec.mean_spec_capital, rec.mean_spec_capital.size() / 2), 0.0);
}

TEST(Kendall, Examples) {
    const std::vector<double> a{1, 2, 3, 4};
    EXPECT_EQ(kendall_tau(a, a), 1.0);
    EXPECT_EQ(kendall_tau(a, std::vector<double>{4, 3, 2, 1}), -1.0);
    EXPECT_NEAR(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 1.0 / 3.0, 1e-15);
    // z for a perfectly increasing run of n = 10: 3 sqrt(90) / sqrt(50)
    std::vector<double> up(10);
    std::iota(up.begin(), up.end(), 0.0);
    EXPECT_NEAR(trend_z(up), 3.0 * std::sqrt(90.0) / std::sqrt(50.0), 1e-12);
    EXPECT_THROW((void)kendall_tau(std::vector<double>(3, 1.0), std::vector<double>{1, 2, 3}), DegenerateInputError);
}

TEST(Surprise, SeriesAndBins) {
    SimulationRecord rec;
    rec.taus = {std::nullopt, std::nullopt, 1, std::nullopt, 3};
    rec.returns = {0.1, -0.2, 0.3, -0.4};
    const auto s = surprise_series(rec);
    EXPECT_EQ(s.tau, (std::vector<std::size_t>{1, 3}));
    EXPECT_EQ(s.magnitude, (std::vector<double>{0.2, 0.4}));

    SurpriseSeries big;
    for (std::size_t i = 0; i < 100; ++i) {
        big.tau.push_back(1);
        big.magnitude.push_back(1.0);
        big.tau.push_back(100);
        big.magnitude.push_back(3.0);
    }
    big.tau.push_back(10);
    big.magnitude.push_back(9.0);
    const auto bins = tau_binned_means(big);
    ASSERT_EQ(bins.size(), 2U);  // tau = 10 has a single sample
    EXPECT_EQ(bins[0].count, 100U);
    EXPECT_EQ(bins[0].mean_magnitude, 1.0);
    EXPECT_NEAR(bins[1].lower, 100.0, 1e-9);
    EXPECT_EQ(bins[1].mean_magnitude, 3.0);
    EXPECT_THROW((void)surprise_stats(SimulationRecord{}), SampleSizeError);
}

TEST(Surprise, UniformStatesRejectPowerLaw) {
    MarketConfig c;
    c.n_speculators = 1024;
    c.horizon = 200000;
    c.seed = 1;
    c.info = Exogenous::uniform(1024);
    const auto uniform = surprise_stats(run(c), 100000);
    c.info = Exogenous::exponential(1024, 0.02);
    const auto skewed = surprise_stats(run(c), 100000);
    EXPECT_NEAR(skewed.tau_density_exponent(), 2.0, 0.3);
    EXPECT_GT(uniform.tau_tail.ks_distance, 3.0 * skewed.tau_tail.ks_distance);
    EXPECT_GT(uniform.tau_density_exponent(), 4.0);
}

TEST(Pipeline, GaussianRandomWalk) {
    std::mt19937_64 g(77);
    std::normal_distribution<double> n01(0.0, 0.01);
    std::vector<double> p{100.0};
    for (int i = 0; i < 30000; ++i) p.push_back(p.back() * std::pow(10.0, n01(g)));
    std::vector<double> r;
    for (std::size_t i = 1; i < p.size(); ++i) r.push_back(std::log10(p[i]) - std::log10(p[i - 1]));
    const auto s = analyze_returns(r);
    EXPECT_NEAR(s.kurtosis, 3.0, 0.15);
    ASSERT_TRUE(s.tail.has_value());
    EXPECT_FALSE(s.heavy_tail);
    EXPECT_EQ(s.acf_abs.size(), 501U);
    EXPECT_NEAR(stddev(s.normalized), 1.0, 1e-12);
}

TEST(Pipeline, ConstantPricesAreDegenerate) {
    EXPECT_THROW((void)analyze_returns(std::vector<double>(100, 0.0)), DegenerateInputError);
}
