#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "infomarket/error.hpp"
#include "infomarket/io/artifacts.hpp"
#include "infomarket/io/config_file.hpp"
#include "infomarket/io/empirical.hpp"
#include "infomarket/market.hpp"
#include "infomarket/stats.hpp"

using namespace infomarket;
using namespace infomarket::io;

namespace {

std::string config_error_field(const std::string& text) {
    try {
        (void)parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return {};
}

std::string error_message(const std::string& text) {
    try {
        (void)parse_config_text(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

std::string random_walk_file(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> step(0.0, 0.01);
    std::ostringstream o;
    o << "Date,Close\n";
    double p = 100.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int day = static_cast<int>(i);
        char date[16];
        std::snprintf(date, sizeof date, "%04d-%02d-%02d", 1900 + day / 372, 1 + day / 31 % 12, 1 + day % 31);
        o << date << "," << exact_number(p) << "\n";
        p *= std::pow(10.0, step(g));
    }
    return o.str();
}

}  // namespace

TEST(ConfigFile, MinimalConfigGetsDefaults) {
    const auto c = parse_config_text(
        "[market]\nn_speculators = 1024\nuse_param = 0.8\nhorizon = 30000\nseed = 7\n"
        "[information]\nmemory_bits = 9\n");
    EXPECT_EQ(c.market.n_speculators, 1024U);
    EXPECT_EQ(c.market.use_param, 0.8);
    EXPECT_EQ(c.market.horizon, 30000U);
    EXPECT_EQ(c.market.seed, 7U);
    EXPECT_EQ(c.market.epsilon, 1e-10);
    EXPECT_EQ(c.market.n_producers, 0U);
    EXPECT_FALSE(c.market.record_agents);
    EXPECT_EQ(std::get<Endogenous>(c.market.info).memory_bits, 9);
    EXPECT_EQ(c.analysis.max_lag, 500U);
    EXPECT_EQ(c.sweep.repetitions, 50U);
}

TEST(ConfigFile, EmptyTextIsDefaultConfig) {
    EXPECT_EQ(parse_config_text(""), ResolvedConfig{});
}

TEST(ConfigFile, SemanticErrorsNameTheField) {
    EXPECT_EQ(config_error_field("[market]\nuse_param = 1.5\n"), "market.use_param");
    EXPECT_NE(error_message("[market]\nseed = 1\nuse_param = 1.5\n").find("line 3"), std::string::npos);
    EXPECT_EQ(config_error_field("[market]\nepsilon = 0.1\n"), "market.epsilon");
    EXPECT_EQ(config_error_field("[information]\nmode = exogenous\ndistribution = explicit\nweights = 0.5, 0.4\n"),
              "information.weights");
    EXPECT_EQ(config_error_field("[information]\nmode = sideways\n"), "information.mode");
    EXPECT_EQ(config_error_field("[market]\nproducer_kind = lazy\n"), "market.producer_kind");
    EXPECT_EQ(config_error_field("[sweep]\nrepetitions = 0\n"), "sweep.repetitions");
    EXPECT_EQ(config_error_field("[sweep]\nmetrics = kurtosis, colour\n"), "metrics");
    EXPECT_EQ(config_error_field("[sweep]\naxis1_values = 1, 2\n"), "sweep.axis1_values");
}

TEST(ConfigFile, UnknownKeysRejected) {
    EXPECT_EQ(config_error_field("[market]\nn_speculators = 4\ngama = 0.3\n"), "market.gama");
    EXPECT_NE(error_message("[market]\nn_speculators = 4\ngama = 0.3\n").find("line 3"), std::string::npos);
    EXPECT_EQ(config_error_field("[plot]\ncolour = red\n"), "plot");
}

TEST(ConfigFile, BadValues) {
    EXPECT_EQ(config_error_field("[market]\nhorizon = 10k\n"), "market.horizon");
    EXPECT_EQ(config_error_field("[market]\nn_speculators = -3\n"), "market.n_speculators");
    EXPECT_EQ(config_error_field("[market]\nrecord_agents = maybe\n"), "market.record_agents");
}

TEST(ConfigFile, SyntaxErrorCarriesLine) {
    try {
        (void)parse_config_text("[market]\nseed = 1\n[information\n");
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_EQ(e.line(), 3U);
    }
}

TEST(ConfigFile, RoundTrip) {
    const std::string texts[] = {
        "[market]\nn_speculators = 300\nn_producers = 7\nproducer_kind = random\nuse_param = 0.123456789012345\n"
        "horizon = 999\nseed = 18446744073709551615\nrecord_agents = true\n",
        "[information]\nmode = exogenous\nstates = 1024\ndistribution = exponential\nrate = 0.02\n",
        "[information]\nmode = exogenous\nweights = 0.1, 0.2, 0.30000000000000004, 0.39999999999999997\n",
        "[information]\nmode = mixed\nendo_bits = 3\nexo_bits = 1\nweights = 0.25, 0.75\n",
        "[sweep]\nrepetitions = 5\naxis1 = alpha\naxis1_values = 0.03125, 0.5, 8\naxis2 = gamma\n"
        "axis2_values = 0.1, 0.3\nmetrics = kurtosis, gini\n[analysis]\nwindow = 30000\nmax_lag = 100\n",
        "[sweep]\naxis1 = alpha\naxis1_values = 0.25, 1\nvariants = reference, endogenous\nvariant_producers = 4\n",
    };
    for (const auto& text : texts) {
        const auto c = parse_config_text(text);
        const auto again = parse_config_text(to_ini(c));
        EXPECT_EQ(again, c) << to_ini(c);
        EXPECT_EQ(to_ini(again), to_ini(c));
        EXPECT_EQ(config_hash(again), config_hash(c));
    }
}

TEST(ConfigFile, SweepSpecFromConfig) {
    const auto c = parse_config_text(
        "[market]\nn_speculators = 64\n[information]\nmode = exogenous\nstates = 64\n"
        "[sweep]\nrepetitions = 2\naxis1 = gamma\naxis1_values = 0.2, 0.4\n");
    const auto s = sweep_spec(c);
    EXPECT_EQ(s.repetitions, 2U);
    ASSERT_EQ(s.axes.size(), 1U);
    EXPECT_EQ(s.axes[0].values, (std::vector<double>{0.2, 0.4}));
    EXPECT_EQ(s.base, c.market);
    EXPECT_THROW((void)alpha_scan_spec(c), ConfigError);
}

TEST(ConfigFile, BlankSweepKeysMeanUnset) {
    const auto c = parse_config_text("[sweep]\naxis1 = gamma\naxis1_values = 0.5\naxis2 =\naxis2_values =\nmetrics =\n");
    EXPECT_EQ(c.sweep.axes.size(), 1U);
    EXPECT_EQ(c.sweep.metrics, ResolvedConfig{}.sweep.metrics);
}

TEST(Empirical, ParsesWithHeaderAndComments) {
    const auto s = parse_empirical("# source: manual download\nDate,Close\n1900-01-02,100\n\n1900-01-03,110\n"
                                   "1900-01-04\t121\n");
    EXPECT_EQ(s.dates, (std::vector<std::string>{"1900-01-02", "1900-01-03", "1900-01-04"}));
    EXPECT_EQ(s.closes, (std::vector<double>{100, 110, 121}));
    const auto r = log10_returns(s);
    ASSERT_EQ(r.size(), 2U);
    EXPECT_NEAR(r[0], std::log10(1.1), 1e-15);
    EXPECT_NEAR(r[1], std::log10(1.1), 1e-15);
}

TEST(Empirical, RowNumberedErrors) {
    const auto line_of = [](const std::string& text) -> std::size_t {
        try {
            (void)parse_empirical(text);
        } catch (const FormatError& e) {
            return e.line();
        }
        return 0;
    };
    EXPECT_EQ(line_of("Date,Close\n2000-01-02,5\n2000-01-02,6\n"), 3U);
    EXPECT_EQ(line_of("Date,Close\n2000-01-02,5\n2000-01-01,6\n"), 3U);
    EXPECT_EQ(line_of("2000-01-02,5\n2000-01-03,0\n"), 2U);
    EXPECT_EQ(line_of("2000-01-02,5\n2000-01-03,-1\n"), 2U);
    EXPECT_EQ(line_of("2000-01-02,5\n01/04/2000,6\n"), 2U);
    EXPECT_EQ(line_of("2000-01-02,5\n2000-01-03,abc\n"), 2U);
    EXPECT_EQ(line_of("2000-01-02,5\n2000-01-03\n"), 2U);
    EXPECT_THROW((void)parse_empirical("Date,Close\n2000-01-02,5\n"), SampleSizeError);
}

TEST(Empirical, ConstantPriceIsDegenerate) {
    std::string text = "Date,Close\n";
    for (int d = 1; d <= 28; ++d) text += "2001-02-" + std::string(d < 10 ? "0" : "") + std::to_string(d) + ",42.5\n";
    const auto r = log10_returns(parse_empirical(text));
    for (double v : r) EXPECT_EQ(v, 0.0);
    EXPECT_THROW((void)stats::analyze_returns(r), DegenerateInputError);
}

TEST(Empirical, RandomWalkHasNoPowerLawTail) {
    const auto s = parse_empirical(random_walk_file(30001, 99));
    const auto r = log10_returns(s);
    ASSERT_EQ(r.size(), 30000U);
    const auto st = stats::analyze_returns(r);
    EXPECT_NEAR(st.kurtosis, 3.0, 0.15);
    EXPECT_FALSE(st.heavy_tail);
}

TEST(Tables, CsvAndJsonRoundTrip) {
    Table t{"infomarket-test v1", "00ff", {"a", "b", "name"}, {}};
    t.rows.push_back({1.0, std::monostate{}, std::string("x")});
    t.rows.push_back({0.1 + 0.2, -3e-300, std::string("y")});
    for (auto f : {Format::csv, Format::json}) {
        const auto back = parse_table(render(t, f), "infomarket-test v1");
        EXPECT_EQ(back.columns, t.columns);
        EXPECT_EQ(back.config_hash, "00ff");
        ASSERT_EQ(back.rows.size(), 2U);
        EXPECT_EQ(back.rows[1][0], t.rows[1][0]);
        EXPECT_EQ(back.rows[1][1], t.rows[1][1]);
        EXPECT_TRUE(std::holds_alternative<std::monostate>(back.rows[0][1]));
        EXPECT_EQ(back.rows[0][2], Cell(std::string("x")));
    }
}

TEST(Tables, UnknownVersionRefused) {
    Table t{"infomarket-series v2", "", {"r"}, {{1.0}}};
    for (auto f : {Format::csv, Format::json}) {
        EXPECT_THROW((void)parse_table(render(t, f), kSeriesFormat), FormatError);
    }
    EXPECT_THROW((void)parse_table("t,r\n1,2\n", kSeriesFormat), FormatError);
}

TEST(Tables, SeriesReturnsAreExact) {
    MarketConfig c;
    c.n_speculators = 64;
    c.info = Endogenous{4};
    c.horizon = 500;
    const auto rec = run(c);
    for (auto f : {Format::csv, Format::json}) {
        const auto t = parse_table(render(series_table(rec, "ab"), f), kSeriesFormat);
        EXPECT_EQ(series_returns(t), rec.returns);
        EXPECT_EQ(t.rows.size(), 500U);
        EXPECT_TRUE(std::holds_alternative<std::monostate>(t.rows[0][t.column("r")]));
    }
}

TEST(Analysis, WindowSelection) {
    const std::vector<double> r{1, 2, 3, 4, 5, 6, 7};
    AnalysisSettings a;
    EXPECT_EQ(analysis_window(r, a).size(), 3U);
    EXPECT_EQ(analysis_window(r, a).front(), 5.0);
    a.window = 5;
    EXPECT_EQ(analysis_window(r, a).front(), 3.0);
    a.window = 50;
    EXPECT_EQ(analysis_window(r, a).size(), 7U);
}
