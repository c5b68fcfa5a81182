#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dp_solver.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "model.hpp"

namespace poisson_bandit {

/// Settings of the first-order small-step scheme.
struct LinearizedConfig {
    double horizon = 1.0;
    int steps = 1;
    int xmax = 1;
    /// Arms with elapsed time below t_floor use the exact predictive weights.
    /// Defaults to one step.
    std::optional<double> t_floor{};
    double tail_eps = 1e-10;
    TieRule tie_rule = TieRule::prefer_first;
    bool materialize_risk = true;

    double delta() const { return horizon / steps; }
    double floor() const { return t_floor.value_or(delta()); }

    SolverConfig solver_config() const {
        return {horizon, steps, xmax, tail_eps, tie_rule, materialize_risk};
    }

    void validate() const {
        solver_config().validate();
        if (t_floor && (!(*t_floor > 0.0) || !std::isfinite(*t_floor))) {
            throw ConfigError("t_floor must be positive");
        }
    }

    void validate_for(const Prior& prior) const {
        validate();
        solver_config().validate_for(prior);
    }

    /// Whether arm cell (intervals, count) takes the linearized update: its
    /// time is at least t_floor and the stay coefficient 1 - x delta / t is
    /// non-negative.
    bool linearized_at(int intervals, int count) const {
        if (intervals == 0) return false;
        const double t = intervals * delta();
        return t >= floor() * (1.0 - 1e-12) && count <= intervals;
    }
};

/// Backward induction on R~ with the one-jump expansion of the predictive
/// weights:
///   value(arm) = g(arm) delta + R~(x, t + delta) (1 - x delta / t)
///                + R~(x + 1, t + delta) (x + 1) delta / t
/// on cells where LinearizedConfig::linearized_at holds, and the exact
/// version-2 update elsewhere.
inline SolveResult solve_linearized(const Prior& prior, const LinearizedConfig& config) {
    config.validate_for(prior);
    const Lattice lattice(config.steps, config.xmax);
    const double delta = config.delta();
    const detail::PriorKernel kernel(prior, lattice, delta);
    const detail::WeightTable weights(lattice, delta);

    auto arm_value = [&](const Node& v, Arm arm, double loss_term, const std::vector<double>& next) {
        const int n_arm = v.intervals(arm);
        const int x_arm = v.count(arm);
        if (!config.linearized_at(n_arm, x_arm)) {
            return detail::v2_arm_value(v, arm, loss_term, next, lattice, weights, config.tail_eps);
        }
        const double ratio = delta / (n_arm * delta);
        const double stay = 1.0 - x_arm * ratio;
        const double jump = (x_arm + 1) * ratio;
        if (stay < 0.0) throw DomainError("negative linearized coefficient at " + v.to_string());
        double value = loss_term + next[lattice.index(v.advanced(arm, 0))] * stay;
        if (x_arm + 1 <= lattice.xmax()) value += next[lattice.index(v.advanced(arm, 1))] * jump;
        return value;
    };

    auto result = detail::backward_induction(
        lattice, config.horizon, Recursion::linearized, config.materialize_risk,
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
            const double first = arm_value(v, Arm::first, g[0] * delta, next);
            const double second = arm_value(v, Arm::second, g[1] * delta, next);
            return detail::choose(first, second, config.tie_rule);
        });
    result.truncation_budget = detail::truncation_budget(prior, config.solver_config());
    return result;
}

/// True when `v` lies inside the region where the limiting equation is
/// audited: both arms at least one step past t_floor, room for one more
/// count on each arm, and a successor layer.
inline bool is_interior(const Node& v, const LinearizedConfig& config) {
    const double delta = config.delta();
    const double lo = (config.floor() + delta) * (1.0 - 1e-12);
    return v.n1 * delta >= lo && v.n2 * delta >= lo && v.x1 + 1 <= config.xmax && v.x2 + 1 <= config.xmax &&
           v.layer() + 1 <= config.steps;
}

/// Residual of min over arms of dR~/dt_arm + D(arm) R~ + g(arm) at `v`,
/// with a forward difference in time and the jump operator
///   D(arm) R~ = (-x R~(x) + (x + 1) R~(x + 1)) / t
/// evaluated on the table.
inline double pde_residual(const RiskTable& risk, const Prior& prior, const LinearizedConfig& config,
                           const Node& v) {
    if (risk.recursion == Recursion::v1) throw DomainError("pde_residual expects an unnormalized risk table");
    if (!is_interior(v, config)) throw DomainError("pde_residual needs an interior state, got " + v.to_string());
    const double delta = config.delta();
    const State s = v.state(delta);
    const double here = risk.at(v);
    double best = std::numeric_limits<double>::infinity();
    for (const Arm arm : {Arm::first, Arm::second}) {
        const double t = s.time(arm);
        const double x = static_cast<double>(s.count(arm));
        Node up = v;
        (arm == Arm::first ? up.x1 : up.x2) += 1;
        const double dt = (risk.at(v.advanced(arm, 0)) - here) / delta;
        const double jump = (-x * here + (x + 1.0) * risk.at(up)) / t;
        best = std::min(best, dt + jump + loss_integrand(s, prior, arm));
    }
    return best;
}

/// True when some lattice neighbour of `v` (one cell in any coordinate)
/// carries a different action.
inline bool near_action_switch(const StrategyTable& strategy, const Node& v) {
    const auto own = strategy.action(v);
    if (!own) return false;
    const Node neighbours[] = {
        {v.n1, v.x1 + 1, v.n2, v.x2},     {v.n1, v.x1 - 1, v.n2, v.x2},     {v.n1, v.x1, v.n2, v.x2 + 1},
        {v.n1, v.x1, v.n2, v.x2 - 1},     {v.n1 + 1, v.x1, v.n2 - 1, v.x2}, {v.n1 - 1, v.x1, v.n2 + 1, v.x2},
        {v.n1 + 1, v.x1, v.n2, v.x2},     {v.n1, v.x1, v.n2 + 1, v.x2},     {v.n1 - 1, v.x1, v.n2, v.x2},
        {v.n1, v.x1, v.n2 - 1, v.x2},
    };
    for (const auto& u : neighbours) {
        const auto a = strategy.action(u);
        if (a && *a != *own) return true;
    }
    return false;
}

struct ResidualAudit {
    double max_abs = 0.0;
    std::size_t audited = 0;
    std::size_t excluded_near_switch = 0;
    std::optional<Node> worst;
};

/// Max |pde_residual| over interior nodes away from action switches.
inline ResidualAudit audit_residual(const RiskTable& risk, const StrategyTable& strategy, const Prior& prior,
                                    const LinearizedConfig& config) {
    ResidualAudit audit;
    for (int n = 0; n < config.steps; ++n) {
        risk.lattice.for_each_node(n, [&](const Node& v) {
            if (!is_interior(v, config) || !strategy.action(v)) return;
            if (near_action_switch(strategy, v)) {
                ++audit.excluded_near_switch;
                return;
            }
            const double r = std::abs(pde_residual(risk, prior, config, v));
            ++audit.audited;
            if (r > audit.max_abs || !audit.worst) {
                audit.max_abs = std::max(audit.max_abs, r);
                audit.worst = v;
            }
        });
    }
    return audit;
}

}  // namespace poisson_bandit
