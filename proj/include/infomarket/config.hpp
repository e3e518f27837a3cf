#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "infomarket/error.hpp"

namespace infomarket {

/// Information is the sign history of the last `memory_bits` log returns.
struct Endogenous {
    int memory_bits = 9;
    friend bool operator==(const Endogenous&, const Endogenous&) = default;
};

/// Information states drawn i.i.d. from `weights` (one entry per state).
struct Exogenous {
    std::vector<double> weights;

    [[nodiscard]] static Exogenous uniform(std::size_t states) {
        return {std::vector<double>(states, 1.0 / static_cast<double>(states))};
    }

    /// Weights proportional to exp(-rate * mu).
    [[nodiscard]] static Exogenous exponential(std::size_t states, double rate) {
        std::vector<double> w(states);
        double total = 0.0;
        for (std::size_t mu = 0; mu < states; ++mu) {
            w[mu] = std::exp(-rate * static_cast<double>(mu));
            total += w[mu];
        }
        for (double& x : w) x /= total;
        return {std::move(w)};
    }

    [[nodiscard]] bool is_uniform() const {
        for (double x : weights) {
            if (x != weights.front()) return false;
        }
        return true;
    }

    friend bool operator==(const Exogenous&, const Exogenous&) = default;
};

/// Composite index exo * 2^endo_bits + endo; each part follows its own rule.
struct Mixed {
    int endo_bits = 6;
    int exo_bits = 3;
    std::vector<double> exo_weights;  // length 2^exo_bits

    friend bool operator==(const Mixed&, const Mixed&) = default;
};

using InformationMode = std::variant<Endogenous, Exogenous, Mixed>;

/// Number of distinct information states D.
[[nodiscard]] inline std::size_t num_states(const InformationMode& mode) {
    struct Visitor {
        std::size_t operator()(const Endogenous& e) const { return std::size_t{1} << e.memory_bits; }
        std::size_t operator()(const Exogenous& e) const { return e.weights.size(); }
        std::size_t operator()(const Mixed& m) const {
            return std::size_t{1} << (m.endo_bits + m.exo_bits);
        }
    };
    return std::visit(Visitor{}, mode);
}

[[nodiscard]] inline std::string_view mode_name(const InformationMode& mode) {
    switch (mode.index()) {
        case 0: return "endogenous";
        case 1: return "exogenous";
        default: return "mixed";
    }
}

enum class ProducerKind { deterministic, random };

[[nodiscard]] inline std::string_view to_string(ProducerKind k) {
    return k == ProducerKind::deterministic ? "deterministic" : "random";
}

// Largest supported memory; keeps the strategy matrix below ~2^30 bits for
// typical agent counts.
inline constexpr int kMaxMemoryBits = 20;

struct MarketConfig {
    std::size_t n_speculators = 1024;
    std::size_t n_producers = 0;
    ProducerKind producer_kind = ProducerKind::deterministic;
    double use_param = 0.5;  // gamma
    double epsilon = 1e-10;
    InformationMode info = Endogenous{9};
    std::size_t horizon = 10000;
    std::uint64_t seed = 0;
    bool record_agents = false;
    std::size_t memory_budget_bytes = std::size_t{1} << 31;

    [[nodiscard]] std::size_t n_agents() const { return n_speculators + n_producers; }
    [[nodiscard]] std::size_t states() const { return num_states(info); }
    [[nodiscard]] double alpha() const {
        return static_cast<double>(states()) / static_cast<double>(n_speculators);
    }

    friend bool operator==(const MarketConfig&, const MarketConfig&) = default;
};

namespace detail {

inline void check_weights(const std::vector<double>& w, std::size_t expected, const char* field) {
    if (w.size() != expected) {
        throw ConfigError(field, "expected " + std::to_string(expected) + " weights, got " +
                                     std::to_string(w.size()));
    }
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(field, "weights must be finite and nonnegative");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError(field, "weights must sum to 1 (got " + std::to_string(total) + ")");
    }
}

inline void check_bits(int bits, const char* field) {
    if (bits < 0 || bits > kMaxMemoryBits) {
        throw ConfigError(field, "must be in [0, " + std::to_string(kMaxMemoryBits) + "]");
    }
}

}  // namespace detail

/// Throws ConfigError naming the first invalid field.
inline void validate(const MarketConfig& c) {
    if (c.n_speculators < 1) throw ConfigError("n_speculators", "must be at least 1");
    if (!(c.use_param > 0.0 && c.use_param <= 1.0)) throw ConfigError("use_param", "must lie in (0, 1]");
    if (!(c.epsilon > 0.0 && c.epsilon < 1e-3)) throw ConfigError("epsilon", "must lie in (0, 1e-3)");
    if (c.horizon < 1) throw ConfigError("horizon", "must be at least 1");
    if (const auto* e = std::get_if<Endogenous>(&c.info)) {
        if (e->memory_bits < 1) throw ConfigError("memory_bits", "must be at least 1");
        detail::check_bits(e->memory_bits, "memory_bits");
    } else if (const auto* x = std::get_if<Exogenous>(&c.info)) {
        if (x->weights.empty()) throw ConfigError("weights", "need at least one information state");
        detail::check_weights(x->weights, x->weights.size(), "weights");
    } else {
        const auto& m = std::get<Mixed>(c.info);
        detail::check_bits(m.endo_bits, "endo_bits");
        detail::check_bits(m.exo_bits, "exo_bits");
        if (m.endo_bits + m.exo_bits > kMaxMemoryBits) {
            throw ConfigError("endo_bits", "endo_bits + exo_bits exceeds " + std::to_string(kMaxMemoryBits));
        }
        detail::check_weights(m.exo_weights, std::size_t{1} << m.exo_bits, "exo_weights");
    }
}

/// 64-bit FNV-1a.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[nodiscard]] inline std::string exact_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Deterministic one-line rendering of every field; the basis of config hashes.
[[nodiscard]] inline std::string canonical_string(const MarketConfig& c) {
    std::string s;
    s += "n_speculators=" + std::to_string(c.n_speculators);
    s += ";n_producers=" + std::to_string(c.n_producers);
    s += ";producer_kind=" + std::string(to_string(c.producer_kind));
    s += ";use_param=" + exact_number(c.use_param);
    s += ";epsilon=" + exact_number(c.epsilon);
    s += ";horizon=" + std::to_string(c.horizon);
    s += ";seed=" + std::to_string(c.seed);
    s += ";record_agents=" + std::string(c.record_agents ? "1" : "0");
    s += ";info=" + std::string(mode_name(c.info));
    const auto weights = [&s](const std::vector<double>& w) {
        s += ":[";
        for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + exact_number(w[i]);
        s += "]";
    };
    if (const auto* e = std::get_if<Endogenous>(&c.info)) {
        s += ":" + std::to_string(e->memory_bits);
    } else if (const auto* x = std::get_if<Exogenous>(&c.info)) {
        weights(x->weights);
    } else {
        const auto& m = std::get<Mixed>(c.info);
        s += ":" + std::to_string(m.endo_bits) + ":" + std::to_string(m.exo_bits);
        weights(m.exo_weights);
    }
    return s;
}

[[nodiscard]] inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace infomarket
