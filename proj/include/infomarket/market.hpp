#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "infomarket/config.hpp"
#include "infomarket/error.hpp"
#include "infomarket/rng.hpp"

namespace infomarket {

/// Strategy bits sigma_i^mu packed column-wise: one contiguous bit column per
/// information state, so a step reads a single column of N bits.
class StrategyMatrix {
public:
    StrategyMatrix() = default;
    StrategyMatrix(std::size_t agents, std::size_t states)
        : agents_(agents), states_(states), words_((agents + 63) / 64), bits_(words_ * states, 0) {}

    [[nodiscard]] std::size_t agents() const noexcept { return agents_; }
    [[nodiscard]] std::size_t states() const noexcept { return states_; }
    [[nodiscard]] std::size_t words_per_column() const noexcept { return words_; }

    [[nodiscard]] bool get(std::size_t agent, std::size_t mu) const {
        return ((bits_[mu * words_ + agent / 64] >> (agent % 64)) & 1U) != 0;
    }

    void set(std::size_t agent, std::size_t mu, bool value) {
        std::uint64_t& w = bits_[mu * words_ + agent / 64];
        const std::uint64_t mask = std::uint64_t{1} << (agent % 64);
        w = value ? (w | mask) : (w & ~mask);
    }

    [[nodiscard]] std::span<const std::uint64_t> column(std::size_t mu) const {
        return {bits_.data() + mu * words_, words_};
    }
    [[nodiscard]] std::span<std::uint64_t> column(std::size_t mu) {
        return {bits_.data() + mu * words_, words_};
    }

    /// Number of set bits over the whole matrix.
    [[nodiscard]] std::size_t popcount() const {
        std::size_t n = 0;
        for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    friend bool operator==(const StrategyMatrix&, const StrategyMatrix&) = default;

private:
    std::size_t agents_ = 0;
    std::size_t states_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Full dynamical state. Producers occupy agent indices [0, n_producers).
struct MarketState {
    std::size_t t = 0;
    std::size_t n_producers = 0;
    std::vector<double> money;
    std::vector<double> stocks;
    StrategyMatrix strategies;
    std::size_t mu = 0;
    std::optional<double> last_price;
    std::optional<double> last_return;  // base-10
    std::vector<std::optional<std::size_t>> last_seen;
    CounterRng rng;  // dynamics stream

    [[nodiscard]] std::size_t n_agents() const noexcept { return money.size(); }

    friend bool operator==(const MarketState&, const MarketState&) = default;
};

/// Buy/sell orders of one step. `money[i]` is m_i, `stocks[i]` is s_i.
struct Orders {
    double demand = 0.0;  // delta, includes epsilon
    double supply = 0.0;  // varsigma, includes epsilon
    std::vector<double> money;
    std::vector<double> stocks;
};

struct StepOutput {
    double price = 1.0;
    std::optional<double> ret;  // log10 p(t) - log10 p(t-1)
    std::size_t mu = 0;
    std::optional<std::size_t> tau;
};

/// Samples exogenous states by inverse CDF; uniform weights use an exact
/// integer draw instead.
class StateSampler {
public:
    StateSampler() = default;
    explicit StateSampler(const std::vector<double>& weights) : uniform_(true), size_(weights.size()) {
        for (double w : weights) {
            if (w != weights.front()) uniform_ = false;
        }
        if (!uniform_) {
            cumulative_.resize(weights.size());
            double acc = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                acc += weights[i];
                cumulative_[i] = acc;
            }
            cumulative_.back() = std::max(cumulative_.back(), 1.0);
        }
    }

    [[nodiscard]] std::size_t operator()(CounterRng& rng) const {
        if (uniform_) return static_cast<std::size_t>(rng.below(size_));
        const double u = rng.uniform();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min(static_cast<std::size_t>(it - cumulative_.begin()), size_ - 1);
    }

    [[nodiscard]] std::size_t size() const noexcept { return size_; }

private:
    bool uniform_ = true;
    std::size_t size_ = 1;
    std::vector<double> cumulative_;
};

// RNG stream assignment within one run.
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kDynamicsStream = 1;

/// Fresh market: unit resources, fair random strategy bits, uniform mu(0).
[[nodiscard]] inline MarketState new_market(const MarketConfig& config) {
    validate(config);
    const std::size_t n = config.n_agents();
    const std::size_t d = config.states();
    MarketState s;
    s.n_producers = config.n_producers;
    s.money.assign(n, 1.0);
    s.stocks.assign(n, 1.0);
    s.strategies = StrategyMatrix(n, d);

    CounterRng init(config.seed, kInitStream);
    for (std::size_t mu = 0; mu < d; ++mu) {
        auto col = s.strategies.column(mu);
        for (std::size_t w = 0; w < col.size(); ++w) {
            std::uint64_t bits = init();
            const std::size_t used = std::min<std::size_t>(64, n - w * 64);
            if (used < 64) bits &= (std::uint64_t{1} << used) - 1;
            col[w] = bits;
        }
    }
    s.mu = static_cast<std::size_t>(init.below(d));
    s.last_seen.assign(d, std::nullopt);
    s.rng = CounterRng(config.seed, kDynamicsStream);
    return s;
}

/// Endogenous update mu' = (2 mu + b) mod 2^bits, b = sign bit of r with a
/// fair coin for r == 0 (or an undefined return).
[[nodiscard]] inline std::size_t shift_in_sign(std::size_t mu, std::size_t states,
                                               std::optional<double> r, CounterRng& rng) {
    std::size_t bit;
    if (r && *r > 0.0) {
        bit = 1;
    } else if (r && *r < 0.0) {
        bit = 0;
    } else {
        bit = rng.coin() ? 1 : 0;
    }
    return (2 * mu + bit) % states;
}

/// Generates the information index for the next step from `state`.
class InformationSource {
public:
    InformationSource() = default;
    explicit InformationSource(const InformationMode& mode) : mode_(mode) {
        if (const auto* x = std::get_if<Exogenous>(&mode_)) {
            sampler_ = StateSampler(x->weights);
        } else if (const auto* m = std::get_if<Mixed>(&mode_)) {
            sampler_ = StateSampler(m->exo_weights);
        }
    }

    [[nodiscard]] std::size_t next(MarketState& state) const {
        if (const auto* e = std::get_if<Endogenous>(&mode_)) {
            return shift_in_sign(state.mu, std::size_t{1} << e->memory_bits, state.last_return, state.rng);
        }
        if (std::holds_alternative<Exogenous>(mode_)) {
            return sampler_(state.rng);
        }
        const auto& m = std::get<Mixed>(mode_);
        const std::size_t endo_states = std::size_t{1} << m.endo_bits;
        const std::size_t endo = shift_in_sign(state.mu % endo_states, endo_states, state.last_return, state.rng);
        const std::size_t exo = sampler_(state.rng);
        return exo * endo_states + endo;
    }

    [[nodiscard]] const InformationMode& mode() const noexcept { return mode_; }

private:
    InformationMode mode_ = Endogenous{};
    StateSampler sampler_;
};

/// Convenience form; builds the sampler on every call.
[[nodiscard]] inline std::size_t next_information(MarketState& state, const InformationMode& mode) {
    return InformationSource(mode).next(state);
}

/// Places orders for the current state.mu. Random producers draw a fresh fair
/// decision each call from the dynamics stream (in agent order).
inline void form_orders(MarketState& state, const MarketConfig& config, Orders& out) {
    const std::size_t n = state.n_agents();
    out.money.resize(n);
    out.stocks.resize(n);
    const double gamma = config.use_param;
    const auto column = state.strategies.column(state.mu);
    const bool random_producers = config.producer_kind == ProducerKind::random && state.n_producers > 0;

    double buy = 0.0;
    double sell = 0.0;
    const double* money = state.money.data();
    const double* stocks = state.stocks.data();
    double* m = out.money.data();
    double* s = out.stocks.data();
    for (std::size_t w = 0; w < column.size(); ++w) {
        std::uint64_t bits = column[w];
        const std::size_t base = w * 64;
        if (random_producers && base < state.n_producers) {
            const std::size_t last = std::min(state.n_producers, base + 64);
            for (std::size_t i = base; i < last; ++i) {
                const std::uint64_t mask = std::uint64_t{1} << (i - base);
                bits = state.rng.coin() ? (bits | mask) : (bits & ~mask);
            }
        }
        const std::size_t count = std::min<std::size_t>(64, n - base);
        for (std::size_t j = 0; j < count; ++j) {
            const double b = static_cast<double>((bits >> j) & 1U);
            const std::size_t i = base + j;
            m[i] = b * (gamma * money[i]);
            s[i] = (1.0 - b) * (gamma * stocks[i]);
            buy += m[i];
            sell += s[i];
        }
    }
    out.demand = buy + config.epsilon;
    out.supply = sell + config.epsilon;
}

/// Market-clearing price p = delta / varsigma.
[[nodiscard]] constexpr double clear_price(double demand, double supply) noexcept { return demand / supply; }

/// Executes all orders at price p for speculators; producers keep their
/// resources. Returns the mean speculator capital after trading.
inline double settle(MarketState& state, const Orders& orders, double price) {
    const std::size_t n = state.n_agents();
    double* money = state.money.data();
    double* stocks = state.stocks.data();
    const double* m = orders.money.data();
    const double* s = orders.stocks.data();
    double capital = 0.0;
    for (std::size_t k = state.n_producers; k < n; ++k) {
        money[k] = money[k] - m[k] + s[k] * price;
        stocks[k] = stocks[k] - s[k] + m[k] / price;
        capital += money[k] + stocks[k];
    }
    const std::size_t speculators = n - state.n_producers;
    return capital / (2.0 * static_cast<double>(speculators));
}

/// Sums of money and stocks over all agents (producers included).
struct AssetTotals {
    double money = 0.0;
    double stocks = 0.0;
};

[[nodiscard]] inline AssetTotals asset_totals(const MarketState& s) {
    AssetTotals t;
    for (std::size_t i = 0; i < s.n_agents(); ++i) {
        t.money += s.money[i];
        t.stocks += s.stocks[i];
    }
    return t;
}

[[nodiscard]] inline double mean_speculator_capital(const MarketState& s) {
    double c = 0.0;
    for (std::size_t k = s.n_producers; k < s.n_agents(); ++k) c += s.money[k] + s.stocks[k];
    return c / (2.0 * static_cast<double>(s.n_agents() - s.n_producers));
}

/// Orders-only demand and supply (no epsilon) that state `s` would place under
/// information `mu`, with producer decisions read from the strategy matrix.
[[nodiscard]] inline std::pair<double, double> raw_demand_supply(const MarketState& s, double gamma,
                                                                 std::size_t mu) {
    double buy = 0.0;
    double sell = 0.0;
    for (std::size_t i = 0; i < s.n_agents(); ++i) {
        if (s.strategies.get(i, mu)) {
            buy += gamma * s.money[i];
        } else {
            sell += gamma * s.stocks[i];
        }
    }
    return {buy, sell};
}

/// max over mu of |delta(mu) - p_bar * varsigma(mu)|: distance from the set of
/// states whose price is p_bar under every information state.
[[nodiscard]] inline double manifold_residual(const MarketState& s, double gamma, double p_bar) {
    double worst = 0.0;
    for (std::size_t mu = 0; mu < s.strategies.states(); ++mu) {
        const auto [buy, sell] = raw_demand_supply(s, gamma, mu);
        worst = std::max(worst, std::abs(buy - p_bar * sell));
    }
    return worst;
}

/// Time series of one run. returns[j] belongs to step j + 1, i.e. to mus[j + 1]
/// and taus[j + 1].
struct SimulationRecord {
    std::vector<double> prices;
    std::vector<double> returns;  // base-10 log returns, length horizon - 1
    std::vector<std::uint32_t> mus;
    std::vector<std::optional<std::size_t>> taus;
    std::vector<double> mean_spec_capital;  // after each step
    std::vector<double> final_spec_capitals;  // M_k + S_k per speculator
    std::vector<double> agent_capitals;  // horizon x n_speculators, only if record_agents

    friend bool operator==(const SimulationRecord&, const SimulationRecord&) = default;
};

/// Owns a state together with the per-run machinery (information source,
/// order buffers). Single-threaded; movable between threads.
class Market {
public:
    explicit Market(MarketConfig config)
        : config_(std::move(config)), state_(new_market(config_)), info_(config_.info) {}

    [[nodiscard]] const MarketConfig& config() const noexcept { return config_; }
    [[nodiscard]] const MarketState& state() const noexcept { return state_; }
    [[nodiscard]] MarketState& state() noexcept { return state_; }
    [[nodiscard]] const Orders& last_orders() const noexcept { return orders_; }
    [[nodiscard]] double last_mean_capital() const noexcept { return mean_capital_; }

    /// next_information -> form_orders -> clear_price -> settle. At t = 0 the
    /// initial mu(0) is used.
    StepOutput step() {
        if (state_.t > 0) state_.mu = info_.next(state_);
        return advance();
    }

    /// Step with information clamped to `mu` (bypasses the information source).
    StepOutput step_with(std::size_t mu) {
        state_.mu = mu % state_.strategies.states();
        return advance();
    }

private:
    StepOutput advance() {
        StepOutput out;
        out.mu = state_.mu;
        form_orders(state_, config_, orders_);
        out.price = clear_price(orders_.demand, orders_.supply);
        mean_capital_ = settle(state_, orders_, out.price);

        const double log_price = std::log10(out.price);
        if (state_.last_price) {
            // Difference of logs so that equal prices give an exact zero.
            out.ret = log_price - std::log10(*state_.last_price);
        }
        auto& seen = state_.last_seen[state_.mu];
        if (seen) out.tau = state_.t - *seen;
        seen = state_.t;
        state_.last_price = out.price;
        state_.last_return = out.ret;
        ++state_.t;
        return out;
    }

    MarketConfig config_;
    MarketState state_;
    InformationSource info_;
    Orders orders_;
    double mean_capital_ = 1.0;
};

/// Approximate bytes a run() of `config` will hold in its record.
[[nodiscard]] inline std::size_t estimated_record_bytes(const MarketConfig& config) {
    std::size_t per_step = sizeof(double) * 3 + sizeof(std::uint32_t) + sizeof(std::optional<std::size_t>);
    std::size_t bytes = config.horizon * per_step;
    if (config.record_agents) bytes += config.horizon * config.n_speculators * sizeof(double);
    return bytes;
}

/// Runs `config.horizon` steps from a fresh market.
[[nodiscard]] inline SimulationRecord run(const MarketConfig& config) {
    validate(config);
    if (estimated_record_bytes(config) > config.memory_budget_bytes) {
        throw ResourceError("record needs ~" + std::to_string(estimated_record_bytes(config)) +
                            " bytes, budget is " + std::to_string(config.memory_budget_bytes));
    }
    Market market(config);
    SimulationRecord rec;
    const std::size_t horizon = config.horizon;
    rec.prices.reserve(horizon);
    rec.returns.reserve(horizon > 0 ? horizon - 1 : 0);
    rec.mus.reserve(horizon);
    rec.taus.reserve(horizon);
    rec.mean_spec_capital.reserve(horizon);
    if (config.record_agents) rec.agent_capitals.reserve(horizon * config.n_speculators);

    for (std::size_t t = 0; t < horizon; ++t) {
        const StepOutput out = market.step();
        rec.prices.push_back(out.price);
        if (out.ret) rec.returns.push_back(*out.ret);
        rec.mus.push_back(static_cast<std::uint32_t>(out.mu));
        rec.taus.push_back(out.tau);
        rec.mean_spec_capital.push_back(market.last_mean_capital());
        if (config.record_agents) {
            const auto& s = market.state();
            for (std::size_t k = s.n_producers; k < s.n_agents(); ++k) {
                rec.agent_capitals.push_back(s.money[k] + s.stocks[k]);
            }
        }
    }
    const auto& s = market.state();
    rec.final_spec_capitals.reserve(config.n_speculators);
    for (std::size_t k = s.n_producers; k < s.n_agents(); ++k) {
        rec.final_spec_capitals.push_back(s.money[k] + s.stocks[k]);
    }
    return rec;
}

}  // namespace infomarket
