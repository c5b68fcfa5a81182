#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "errors.hpp"

namespace poisson_bandit {

namespace detail {

inline constexpr std::size_t kLogFactorialTableSize = 1024;

inline const std::array<double, kLogFactorialTableSize>& log_factorial_table() {
    static const auto table = [] {
        std::array<double, kLogFactorialTableSize> t{};
        t[0] = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) {
            t[i] = t[i - 1] + std::log(static_cast<double>(i));
        }
        return t;
    }();
    return table;
}

inline void require_count(std::int64_t value, const char* name) {
    if (value < 0) {
        throw DomainError(std::string(name) + " must be a non-negative count");
    }
}

inline void require_nonnegative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string(name) + " must be finite and non-negative");
    }
}

}  // namespace detail

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(n!). Tabulated for small n, lgamma beyond.
inline double log_factorial(std::int64_t n) {
    detail::require_count(n, "n");
    if (static_cast<std::size_t>(n) < detail::kLogFactorialTableSize) {
        return detail::log_factorial_table()[static_cast<std::size_t>(n)];
    }
    return std::lgamma(static_cast<double>(n) + 1.0);
}

/// log of (lambda t)^i e^{-lambda t} / i!, with 0^0 = 1.
inline double log_poisson_pmf(std::int64_t i, double t, double lambda) {
    detail::require_count(i, "i");
    detail::require_nonnegative(t, "t");
    detail::require_nonnegative(lambda, "lambda");
    const double mean = lambda * t;
    if (mean == 0.0) {
        return i == 0 ? 0.0 : kNegInf;
    }
    return static_cast<double>(i) * std::log(mean) - mean - log_factorial(i);
}

/// Probability of i events in elapsed time t at rate lambda.
inline double poisson_pmf(std::int64_t i, double t, double lambda) {
    return std::exp(log_poisson_pmf(i, t, lambda));
}

/// P(X > k) for X ~ Poisson(mean).
inline double poisson_upper_tail(std::int64_t k, double mean) {
    detail::require_count(k, "k");
    detail::require_nonnegative(mean, "mean");
    if (mean == 0.0) return 0.0;
    if (static_cast<double>(k + 1) > mean) {
        // terms past the mode decrease at least geometrically
        double term = std::exp(log_poisson_pmf(k + 1, 1.0, mean));
        double sum = 0.0;
        for (std::int64_t i = k + 1; term > 0.0; ++i) {
            sum += term;
            if (term < 1e-18 * sum) break;
            term *= mean / static_cast<double>(i + 1);
        }
        return sum;
    }
    double cdf = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) cdf += poisson_pmf(i, 1.0, mean);
    return std::max(0.0, 1.0 - cdf);
}

/// log of t^x delta^j (x+j)! / ((t+delta)^{x+j} x! j!).
///
/// This is the factor that relates the likelihood before and after an extra
/// interval of length delta on one arm:
///   pmf(x,t,l) * pmf(j,delta,l) = pmf(x+j,t+delta,l) * weight(x,t,j,delta)
/// for every rate l. Uses 0^0 = 1, so with t = 0 every weight is 1 when x = 0.
inline double log_predictive_weight(std::int64_t x, double t, std::int64_t j, double delta) {
    detail::require_count(x, "x");
    detail::require_count(j, "j");
    detail::require_nonnegative(t, "t");
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw DomainError("delta must be positive and finite");
    }
    double log_w = log_factorial(x + j) - log_factorial(x) - log_factorial(j);
    if (x > 0) {
        if (t == 0.0) return kNegInf;
        log_w += static_cast<double>(x) * std::log(t);
    }
    log_w += static_cast<double>(j) * std::log(delta);
    log_w -= static_cast<double>(x + j) * std::log(t + delta);
    return log_w;
}

inline double predictive_weight(std::int64_t x, double t, std::int64_t j, double delta) {
    return std::exp(log_predictive_weight(x, t, j, delta));
}

}  // namespace poisson_bandit
