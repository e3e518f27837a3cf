#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infomarket/error.hpp"

namespace infomarket::analytics {

/// Variance of the first base-10 log return of a fresh market with
/// `n_speculators` agents and uniformly random strategies:
/// 8 / (N_s ln(10)^2).
[[nodiscard]] inline double var_r0(std::size_t n_speculators) {
    if (n_speculators < 1) throw RangeError("var_r0: need at least one speculator");
    const double ln10 = std::numbers::ln10;
    return 8.0 / (static_cast<double>(n_speculators) * ln10 * ln10);
}

/// How a linearly independent random vector grows the spanned dimension.
enum class Increment {
    full,          // +1: arbitrary real weights (lower variance limit)
    half,          // +1/2: positive weights, each vector spans a half space (upper limit)
    interpolated,  // +1 with probability P1 = min(1, N_s / 2D), else +1/2
};

[[nodiscard]] inline std::string_view to_string(Increment inc) {
    switch (inc) {
        case Increment::full: return "full";
        case Increment::half: return "half";
        default: return "interpolated";
    }
}

/// Distribution of the spanned dimension d on a grid of step `resolution`
/// (1 for full increments, 1/2 otherwise): p[j] = P(d = j * resolution).
struct DimDistribution {
    double resolution = 1.0;
    std::vector<double> p;

    [[nodiscard]] double dim(std::size_t j) const { return static_cast<double>(j) * resolution; }
    [[nodiscard]] double total() const {
        double s = 0.0;
        for (double x : p) s += x;
        return s;
    }
    [[nodiscard]] double expected() const {
        double e = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) e += dim(j) * p[j];
        return e;
    }
};

inline constexpr std::size_t kMaxDimension = std::size_t{1} << 14;

/// Probability that a step with increment mode `inc` adds a full dimension.
/// Only `interpolated` depends on the market size.
[[nodiscard]] inline double full_step_probability(Increment inc, std::size_t dimension, std::size_t n_speculators) {
    switch (inc) {
        case Increment::full: return 1.0;
        case Increment::half: return 0.0;
        default:
            return std::min(1.0, static_cast<double>(n_speculators) / (2.0 * static_cast<double>(dimension)));
    }
}

/// Spanned dimension after adding `n_vectors` random binary vectors in
/// `dimension` dimensions. The first vector always adds one step; each later
/// vector is independent of the current span with probability 1 - 2^(d - D).
/// `p_full` is the probability that an independent vector adds 1 rather than
/// 1/2.
[[nodiscard]] inline DimDistribution dim_distribution_mixed(std::size_t dimension, std::size_t n_vectors,
                                                            double p_full) {
    if (dimension < 1 || dimension > kMaxDimension) {
        throw RangeError("dim_distribution: dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
    }
    const bool halves = p_full < 1.0;
    DimDistribution out;
    out.resolution = halves ? 0.5 : 1.0;
    const std::size_t top = halves ? 2 * dimension : dimension;  // grid index of d = D
    const std::size_t full_jump = halves ? 2 : 1;
    out.p.assign(top + 1, 0.0);
    out.p[0] = 1.0;
    const double big_d = static_cast<double>(dimension);

    std::vector<double> next(top + 1);
    for (std::size_t v = 0; v < n_vectors; ++v) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t j = 0; j <= top; ++j) {
            const double mass = out.p[j];
            if (mass == 0.0) continue;
            const double independent = v == 0 ? 1.0 : 1.0 - std::exp2(out.dim(j) - big_d);
            const double stay = mass * (1.0 - independent);
            const double up_full = mass * independent * p_full;
            const double up_half = mass * independent - up_full;
            next[j] += stay;
            next[std::min(top, j + full_jump)] += up_full;
            if (up_half != 0.0) next[std::min(top, j + 1)] += up_half;
        }
        out.p.swap(next);
    }
    return out;
}

/// Dimension distribution for an increment mode. For `interpolated`,
/// `n_speculators` sets P1 (defaults to n_vectors + 1).
[[nodiscard]] inline DimDistribution dim_distribution(std::size_t dimension, std::size_t n_vectors, Increment inc,
                                                      std::size_t n_speculators = 0) {
    if (n_speculators == 0) n_speculators = n_vectors + 1;
    return dim_distribution_mixed(dimension, n_vectors, full_step_probability(inc, dimension, n_speculators));
}

/// Probability that one agent's impact is not cancelled by the other
/// N_s - 1 agents: sum_d P(d)(1 - 2^(d - D))(1 - d / D).
[[nodiscard]] inline double p_cant_cancel(std::size_t dimension, std::size_t n_speculators, Increment inc) {
    if (n_speculators < 1) throw RangeError("p_cant_cancel: need at least one speculator");
    const auto dist = dim_distribution(dimension, n_speculators - 1, inc, n_speculators);
    const double big_d = static_cast<double>(dimension);
    double p = 0.0;
    for (std::size_t j = 0; j < dist.p.size(); ++j) {
        const double d = dist.dim(j);
        p += dist.p[j] * (1.0 - std::exp2(d - big_d)) * (1.0 - d / big_d);
    }
    return p;
}

/// Predicted post-transient Var(r) for exogenous uniform information.
struct VarianceBounds {
    double alpha = 0.0;
    std::size_t n_speculators = 0;
    double lower = 0.0;
    double heuristic = 0.0;
    double upper = 0.0;
};

/// N_s = round(D / alpha), at least 1.
[[nodiscard]] inline std::size_t speculators_for_alpha(std::size_t dimension, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw RangeError("alpha must be positive and finite");
    const double n = std::round(static_cast<double>(dimension) / alpha);
    return static_cast<std::size_t>(std::max(1.0, n));
}

[[nodiscard]] inline VarianceBounds variance_bounds(std::size_t dimension, std::size_t n_speculators) {
    VarianceBounds b;
    b.n_speculators = n_speculators;
    b.alpha = static_cast<double>(dimension) / static_cast<double>(n_speculators);
    const double v0 = var_r0(n_speculators);
    b.lower = v0 * p_cant_cancel(dimension, n_speculators, Increment::full);
    b.upper = v0 * p_cant_cancel(dimension, n_speculators, Increment::half);
    b.heuristic = v0 * p_cant_cancel(dimension, n_speculators, Increment::interpolated);
    return b;
}

/// Lower / heuristic / upper variance predictions along `alphas` at fixed D.
[[nodiscard]] inline std::vector<VarianceBounds> variance_curve(std::size_t dimension, std::span<const double> alphas) {
    std::vector<VarianceBounds> out;
    out.reserve(alphas.size());
    for (double a : alphas) {
        auto b = variance_bounds(dimension, speculators_for_alpha(dimension, a));
        b.alpha = a;
        out.push_back(b);
    }
    return out;
}

}  // namespace infomarket::analytics
