#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "poisson.hpp"

namespace poisson_bandit {

enum class Arm : std::uint8_t { first = 1, second = 2 };

inline int arm_index(Arm arm) { return arm == Arm::first ? 0 : 1; }
inline Arm other(Arm arm) { return arm == Arm::first ? Arm::second : Arm::first; }

/// Rates of the two Poisson income streams.
struct ParameterPoint {
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    double rate(Arm arm) const { return arm == Arm::first ? lambda1 : lambda2; }
    double best_rate() const { return std::max(lambda1, lambda2); }

    /// Loss rate (lambda_other - lambda_arm)^+ of playing `arm`.
    double loss_rate(Arm arm) const { return std::max(rate(other(arm)) - rate(arm), 0.0); }

    friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;
};

inline void validate(const ParameterPoint& theta) {
    if (!std::isfinite(theta.lambda1) || !std::isfinite(theta.lambda2) || theta.lambda1 < 0.0 ||
        theta.lambda2 < 0.0) {
        throw DomainError("rates must be finite and non-negative");
    }
}

struct Atom {
    ParameterPoint theta;
    double weight = 0.0;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite weighted atom set over parameter points.
class Prior {
  public:
    static constexpr double kWeightTolerance = 1e-12;

    explicit Prior(std::vector<Atom> atoms) : atoms_(std::move(atoms)) { check(); }

    /// Rescales weights to sum to one before validating.
    static Prior normalized(std::vector<Atom> atoms) {
        double total = 0.0;
        for (const auto& a : atoms) total += a.weight;
        if (!(total > 0.0) || !std::isfinite(total)) {
            throw DomainError("prior weights must have a positive finite sum");
        }
        for (auto& a : atoms) a.weight /= total;
        return Prior(std::move(atoms));
    }

    static Prior uniform(const std::vector<ParameterPoint>& points) {
        std::vector<Atom> atoms;
        atoms.reserve(points.size());
        for (const auto& p : points) atoms.push_back({p, 1.0 / static_cast<double>(points.size())});
        return normalized(std::move(atoms));
    }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    const Atom& operator[](std::size_t k) const { return atoms_[k]; }

    double max_rate() const {
        double m = 0.0;
        for (const auto& a : atoms_) m = std::max(m, a.theta.best_rate());
        return m;
    }

    friend bool operator==(const Prior&, const Prior&) = default;

  private:
    void check() const {
        if (atoms_.empty()) throw DomainError("prior must have at least one atom");
        double total = 0.0;
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            validate(atoms_[k].theta);
            if (!(atoms_[k].weight >= 0.0) || !std::isfinite(atoms_[k].weight)) {
                throw DomainError("prior weights must be finite and non-negative");
            }
            total += atoms_[k].weight;
            for (std::size_t m = 0; m < k; ++m) {
                if (atoms_[m].theta == atoms_[k].theta) {
                    throw DomainError("duplicate prior atom (" + std::to_string(atoms_[k].theta.lambda1) +
                                      ", " + std::to_string(atoms_[k].theta.lambda2) + ")");
                }
            }
        }
        if (std::abs(total - 1.0) > kWeightTolerance) {
            throw DomainError("prior weights must sum to 1");
        }
    }

    std::vector<Atom> atoms_;
};

/// Sufficient statistic: per-arm cumulative counts and application times.
struct State {
    std::int64_t x1 = 0;
    double t1 = 0.0;
    std::int64_t x2 = 0;
    double t2 = 0.0;

    std::int64_t count(Arm arm) const { return arm == Arm::first ? x1 : x2; }
    double time(Arm arm) const { return arm == Arm::first ? t1 : t2; }
};

inline void validate(const State& s) {
    detail::require_count(s.x1, "x1");
    detail::require_count(s.x2, "x2");
    detail::require_nonnegative(s.t1, "t1");
    detail::require_nonnegative(s.t2, "t2");
    if ((s.t1 == 0.0 && s.x1 != 0) || (s.t2 == 0.0 && s.x2 != 0)) {
        throw DomainError("an arm with zero elapsed time cannot have events");
    }
}

inline double log_likelihood(const State& s, const ParameterPoint& theta) {
    return log_poisson_pmf(s.x1, s.t1, theta.lambda1) + log_poisson_pmf(s.x2, s.t2, theta.lambda2);
}

/// p(x1,t1;lambda1) p(x2,t2;lambda2).
inline double likelihood(const State& s, const ParameterPoint& theta) {
    validate(s);
    validate(theta);
    return std::exp(log_likelihood(s, theta));
}

struct Posterior {
    std::vector<Atom> atoms;
    /// Prior-averaged likelihood of the state.
    double marginal = 0.0;
};

/// Bayes update of a finite prior on the statistic `s`.
inline Posterior posterior(const State& s, const Prior& prior) {
    validate(s);
    std::vector<double> log_terms(prior.size(), kNegInf);
    double shift = kNegInf;
    for (std::size_t k = 0; k < prior.size(); ++k) {
        if (prior[k].weight == 0.0) continue;
        log_terms[k] = std::log(prior[k].weight) + log_likelihood(s, prior[k].theta);
        shift = std::max(shift, log_terms[k]);
    }
    if (shift == kNegInf) {
        throw ImpossibleObservation("observation has zero probability under every prior atom");
    }
    double scaled = 0.0;
    for (double lt : log_terms) scaled += std::exp(lt - shift);

    Posterior post;
    post.atoms.reserve(prior.size());
    for (std::size_t k = 0; k < prior.size(); ++k) {
        post.atoms.push_back({prior[k].theta, std::exp(log_terms[k] - shift) / scaled});
    }
    post.marginal = std::exp(shift) * scaled;
    return post;
}

/// Marginal likelihood of the statistic; zero when no atom can produce it.
inline double marginal_likelihood(const State& s, const Prior& prior) {
    validate(s);
    double m = 0.0;
    for (const auto& a : prior.atoms()) m += a.weight * std::exp(log_likelihood(s, a.theta));
    return m;
}

/// Unnormalized per-unit-time loss of playing `arm`:
/// sum_k w_k (lambda_other - lambda_arm)^+ p(x1,t1;lambda1) p(x2,t2;lambda2).
inline double loss_integrand(const State& s, const Prior& prior, Arm arm) {
    validate(s);
    double g = 0.0;
    for (const auto& a : prior.atoms()) {
        const double gap = a.theta.loss_rate(arm);
        if (gap == 0.0 || a.weight == 0.0) continue;
        g += a.weight * gap * std::exp(log_likelihood(s, a.theta));
    }
    return g;
}

}  // namespace poisson_bandit
