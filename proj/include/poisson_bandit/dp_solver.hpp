#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "lattice.hpp"
#include "model.hpp"
#include "poisson.hpp"

namespace poisson_bandit {

enum class TieRule { prefer_first };

struct SolverConfig {
    double horizon = 1.0;
    int steps = 1;
    int xmax = 1;
    double tail_eps = 1e-10;
    TieRule tie_rule = TieRule::prefer_first;
    /// Keep every risk layer; otherwise only the root layer survives the sweep.
    bool materialize_risk = true;

    double delta() const { return horizon / steps; }

    void validate() const {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon_T must be positive");
        if (steps < 1) throw ConfigError("steps_N must be positive");
        if (xmax < 1) throw ConfigError("xmax must be at least 1");
        if (!(tail_eps > 0.0) || !(tail_eps < 1.0)) throw ConfigError("tail_eps must lie in (0, 1)");
    }

    /// Also requires the per-arm count truncation to lose less than tail_eps
    /// probability at the largest rate in the prior.
    void validate_for(const Prior& prior) const {
        validate();
        const double tail = poisson_upper_tail(xmax, prior.max_rate() * horizon);
        if (!(tail < tail_eps)) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "xmax = %d leaves tail mass %.3g >= tail_eps %.3g at rate %.6g x T %.6g",
                          xmax, tail, tail_eps, prior.max_rate(), horizon);
            throw ConfigError(msg);
        }
    }
};

struct SolveResult {
    RiskTable risk;
    StrategyTable strategy;
    double root_risk = 0.0;
    /// Upper bound on the risk mass lost to count truncation.
    double truncation_budget = 0.0;
    /// |value(arm 1) - value(arm 2)| per non-terminal node, in the units of
    /// the risk table; empty unless the risk table is materialized.
    std::vector<std::vector<double>> margins;

    double margin(const Node& v) const {
        return margins.at(static_cast<std::size_t>(v.layer())).at(risk.lattice.index(v));
    }
};

namespace detail {

inline constexpr int kSmallTermRun = 5;

/// Partial sum of non-negative terms that stops once kSmallTermRun
/// consecutive terms fall below eps times the running total.
class TruncatedSum {
  public:
    explicit TruncatedSum(double eps) : eps_(eps) {}

    /// Returns false once the sum should stop.
    bool add(double term) {
        total_ += term;
        if (total_ > 0.0 && term <= eps_ * total_) {
            if (++small_run_ >= kSmallTermRun) return false;
        } else {
            small_run_ = 0;
        }
        return true;
    }

    double total() const { return total_; }

  private:
    double eps_;
    double total_ = 0.0;
    int small_run_ = 0;
};

/// Likelihood ingredients of a finite prior on a fixed lattice.
class PriorKernel {
  public:
    PriorKernel(const Prior& prior, const Lattice& lattice, double delta)
        : prior_(prior), xmax_(lattice.xmax()), steps_(lattice.steps()) {
        const std::size_t atoms = prior.size();
        const std::size_t per_atom = static_cast<std::size_t>(steps_ + 1) * static_cast<std::size_t>(xmax_ + 1);
        for (int a = 0; a < 2; ++a) {
            const Arm arm = a == 0 ? Arm::first : Arm::second;
            log_pmf_[a].resize(atoms * per_atom);
            step_pmf_[a].resize(atoms * static_cast<std::size_t>(xmax_ + 1));
            for (std::size_t k = 0; k < atoms; ++k) {
                const double rate = prior[k].theta.rate(arm);
                for (int n = 0; n <= steps_; ++n) {
                    for (int x = 0; x <= xmax_; ++x) {
                        log_pmf_[a][k * per_atom + static_cast<std::size_t>(n * (xmax_ + 1) + x)] =
                            log_poisson_pmf(x, n * delta, rate);
                    }
                }
                for (int j = 0; j <= xmax_; ++j) {
                    step_pmf_[a][k * static_cast<std::size_t>(xmax_ + 1) + static_cast<std::size_t>(j)] =
                        poisson_pmf(j, delta, rate);
                }
            }
        }
    }

    const Prior& prior() const { return prior_; }
    std::size_t atoms() const { return prior_.size(); }

    /// log(w_k) + log p(x1,t1;l1) + log p(x2,t2;l2); -inf for zero weight.
    double log_weighted_likelihood(std::size_t k, const Node& v) const {
        if (prior_[k].weight == 0.0) return kNegInf;
        const std::size_t per_atom = static_cast<std::size_t>(steps_ + 1) * static_cast<std::size_t>(xmax_ + 1);
        const double l1 = log_pmf_[0][k * per_atom + static_cast<std::size_t>(v.n1 * (xmax_ + 1) + v.x1)];
        const double l2 = log_pmf_[1][k * per_atom + static_cast<std::size_t>(v.n2 * (xmax_ + 1) + v.x2)];
        return std::log(prior_[k].weight) + l1 + l2;
    }

    /// p(j, delta; rate of atom k on `arm`).
    double step_pmf(Arm arm, std::size_t k, int j) const {
        return step_pmf_[arm_index(arm)][k * static_cast<std::size_t>(xmax_ + 1) + static_cast<std::size_t>(j)];
    }

  private:
    const Prior& prior_;
    int xmax_;
    int steps_;
    std::vector<double> log_pmf_[2];
    std::vector<double> step_pmf_[2];
};

/// predictive_weight(x, n*delta, j, delta) tabulated for n < steps.
class WeightTable {
  public:
    WeightTable(const Lattice& lattice, double delta) : xmax_(lattice.xmax()) {
        const auto width = static_cast<std::size_t>(xmax_ + 1);
        values_.resize(static_cast<std::size_t>(lattice.steps()) * width * width, 0.0);
        for (int n = 0; n < lattice.steps(); ++n) {
            for (int x = 0; x <= xmax_; ++x) {
                for (int j = 0; x + j <= xmax_; ++j) {
                    values_[slot(n, x, j)] = predictive_weight(x, n * delta, j, delta);
                }
            }
        }
    }

    double operator()(int n, int x, int j) const { return values_[slot(n, x, j)]; }

  private:
    std::size_t slot(int n, int x, int j) const {
        const auto width = static_cast<std::size_t>(xmax_ + 1);
        return (static_cast<std::size_t>(n) * width + static_cast<std::size_t>(x)) * width +
               static_cast<std::size_t>(j);
    }

    int xmax_;
    std::vector<double> values_;
};

struct NodeValue {
    double value = 0.0;
    std::optional<Arm> action;
    double margin = 0.0;
};

inline NodeValue choose(double first, double second, TieRule rule) {
    const bool draw_to_first = rule == TieRule::prefer_first;
    const Arm arm = (first < second || (first == second && draw_to_first)) ? Arm::first : Arm::second;
    return {std::min(first, second), arm, std::abs(first - second)};
}

/// Backward sweep over layers N-1..0. `node_fn(v, next_layer)` returns the
/// node's NodeValue; an empty action marks an impossible node.
template <class NodeFn>
SolveResult backward_induction(const Lattice& lattice, double horizon, Recursion recursion, bool materialize,
                               NodeFn&& node_fn) {
    const int steps = lattice.steps();
    RiskTable risk{lattice, horizon, recursion, {}};
    risk.layers.resize(static_cast<std::size_t>(steps) + 1);
    risk.layers[static_cast<std::size_t>(steps)].assign(lattice.layer_size(steps), 0.0);
    StrategyTable strategy(lattice);
    std::vector<std::vector<double>> margins(materialize ? static_cast<std::size_t>(steps) : 0);

    for (int n = steps - 1; n >= 0; --n) {
        auto& layer = risk.layers[static_cast<std::size_t>(n)];
        const auto& next = risk.layers[static_cast<std::size_t>(n) + 1];
        layer.assign(lattice.layer_size(n), 0.0);
        if (materialize) margins[static_cast<std::size_t>(n)].assign(lattice.layer_size(n), 0.0);
        lattice.for_each_node(n, [&](const Node& v) {
            const NodeValue nv = node_fn(v, next);
            layer[lattice.index(v)] = nv.value;
            strategy.set(v, nv.action);
            if (materialize) margins[static_cast<std::size_t>(n)][lattice.index(v)] = nv.margin;
        });
        if (!materialize) risk.layers[static_cast<std::size_t>(n) + 1].clear();
    }
    SolveResult result{std::move(risk), std::move(strategy), 0.0, 0.0, std::move(margins)};
    result.root_risk = result.risk.layers[0][0];
    return result;
}

inline double truncation_budget(const Prior& prior, const SolverConfig& config) {
    double max_gap = 0.0;
    for (const auto& a : prior.atoms()) max_gap = std::max(max_gap, std::abs(a.theta.lambda1 - a.theta.lambda2));
    const double leave = std::min(1.0, 2.0 * poisson_upper_tail(config.xmax, prior.max_rate() * config.horizon));
    return leave * config.horizon * max_gap;
}

/// One-arm value of recursion v2 with exact predictive weights:
///   g(arm) * delta + sum_j R~(next_j) * weight(x, t, j, delta).
inline double v2_arm_value(const Node& v, Arm arm, double loss_term, const std::vector<double>& next,
                           const Lattice& lattice, const WeightTable& weights, double tail_eps) {
    const int n_arm = v.intervals(arm);
    const int x_arm = v.count(arm);
    TruncatedSum sum(tail_eps);
    for (int j = 0; x_arm + j <= lattice.xmax(); ++j) {
        const double term = next[lattice.index(v.advanced(arm, j))] * weights(n_arm, x_arm, j);
        if (!sum.add(term)) break;
    }
    return loss_term + sum.total();
}

}  // namespace detail

/// Backward induction on the posterior risk R (recursion version 1).
///
/// At every node the Theta-integral is a sum over posterior atoms:
///   R1 = sum_k post_k [ (l2 - l1)^+ delta + sum_j R(x1 + j, t1 + delta, ...) p(j, delta; l1) ]
/// and symmetrically for arm 2; R = min(R1, R2). Nodes with zero marginal
/// likelihood get risk 0 and no strategy entry.
inline SolveResult solve_v1(const Prior& prior, const SolverConfig& config) {
    config.validate_for(prior);
    const Lattice lattice(config.steps, config.xmax);
    const double delta = config.delta();
    const detail::PriorKernel kernel(prior, lattice, delta);
    std::vector<double> post(prior.size());

    auto result = detail::backward_induction(
        lattice, config.horizon, Recursion::v1, config.materialize_risk,
        [&](const Node& v, const std::vector<double>& next) -> detail::NodeValue {
            double shift = kNegInf;
            for (std::size_t k = 0; k < kernel.atoms(); ++k) {
                post[k] = kernel.log_weighted_likelihood(k, v);
                shift = std::max(shift, post[k]);
            }
            if (shift == kNegInf) return {};
            double total = 0.0;
            for (auto& p : post) {
                p = std::exp(p - shift);
                total += p;
            }
            for (auto& p : post) p /= total;

            double value[2];
            for (const Arm arm : {Arm::first, Arm::second}) {
                double loss = 0.0;
                for (std::size_t k = 0; k < kernel.atoms(); ++k) loss += post[k] * prior[k].theta.loss_rate(arm);
                detail::TruncatedSum sum(config.tail_eps);
                for (int j = 0; v.count(arm) + j <= lattice.xmax(); ++j) {
                    double predictive = 0.0;
                    for (std::size_t k = 0; k < kernel.atoms(); ++k) predictive += post[k] * kernel.step_pmf(arm, k, j);
                    if (!sum.add(predictive * next[lattice.index(v.advanced(arm, j))])) break;
                }
                value[arm_index(arm)] = loss * delta + sum.total();
            }
            return detail::choose(value[0], value[1], config.tie_rule);
        });
    result.truncation_budget = detail::truncation_budget(prior, config);
    return result;
}

/// Backward induction on the marginal-weighted risk R~ (recursion version 2).
///
/// Uses only prior-side ingredients: the loss integrals g(arm) and the
/// predictive weights. R~(0,0,0,0) equals the Bayesian risk because the
/// marginal likelihood of the empty history is 1.
inline SolveResult solve_v2(const Prior& prior, const SolverConfig& config) {
    config.validate_for(prior);
    const Lattice lattice(config.steps, config.xmax);
    const double delta = config.delta();
    const detail::PriorKernel kernel(prior, lattice, delta);
    const detail::WeightTable weights(lattice, delta);

    auto result = detail::backward_induction(
        lattice, config.horizon, Recursion::v2, config.materialize_risk,
        [&](const Node& v, const std::vector<double>& next) -> detail::NodeValue {
            bool possible = false;
            double g[2] = {0.0, 0.0};
            for (std::size_t k = 0; k < kernel.atoms(); ++k) {
                const double lw = kernel.log_weighted_likelihood(k, v);
                if (lw == kNegInf) continue;
                possible = true;
                const double lik = std::exp(lw);
                g[0] += lik * prior[k].theta.loss_rate(Arm::first);
                g[1] += lik * prior[k].theta.loss_rate(Arm::second);
            }
            if (!possible) return {};
            const double first =
                detail::v2_arm_value(v, Arm::first, g[0] * delta, next, lattice, weights, config.tail_eps);
            const double second =
                detail::v2_arm_value(v, Arm::second, g[1] * delta, next, lattice, weights, config.tail_eps);
            return detail::choose(first, second, config.tie_rule);
        });
    result.truncation_budget = detail::truncation_budget(prior, config);
    return result;
}

struct NormalizedRisk {
    RiskTable table;
    /// Nodes whose marginal likelihood fell below kMarginalFloor.
    std::vector<Node> skipped;
};

inline constexpr double kMarginalFloor = 1e-300;

/// Divides a v2 table by the marginal likelihood of each node, giving the
/// posterior risk that recursion v1 computes. Skipped nodes are set to 0.
inline NormalizedRisk normalize_v2(const RiskTable& risk_v2, const Prior& prior) {
    if (risk_v2.recursion == Recursion::v1) throw DomainError("normalize_v2 expects an unnormalized table");
    if (!risk_v2.materialized()) throw DomainError("normalize_v2 needs a materialized risk table");
    NormalizedRisk out{risk_v2, {}};
    out.table.recursion = Recursion::v1;
    const double delta = risk_v2.delta();
    const auto& lattice = risk_v2.lattice;
    for (int n = 0; n <= lattice.steps(); ++n) {
        lattice.for_each_node(n, [&](const Node& v) {
            const double m = marginal_likelihood(v.state(delta), prior);
            auto& value = out.table.layers[static_cast<std::size_t>(n)][lattice.index(v)];
            if (m < kMarginalFloor) {
                value = 0.0;
                out.skipped.push_back(v);
            } else {
                value /= m;
            }
        });
    }
    return out;
}

/// Risk of the better constant-arm strategy; an upper bound on the Bayesian risk.
inline double constant_arm_risk_bound(const Prior& prior, double horizon) {
    double first = 0.0;
    double second = 0.0;
    for (const auto& a : prior.atoms()) {
        first += a.weight * a.theta.loss_rate(Arm::first);
        second += a.weight * a.theta.loss_rate(Arm::second);
    }
    return horizon * std::min(first, second);
}

}  // namespace poisson_bandit
