#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dp_solver.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "lattice.hpp"
#include "model.hpp"

namespace poisson_bandit {

struct GameIterate {
    int iteration = 0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
};

struct GameResult {
    /// Prior with the largest Bayesian risk among the iterates.
    Prior worst_prior;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    int iterations = 0;
    std::vector<GameIterate> history;
};

struct GameOptions {
    Recursion recursion = Recursion::v2;
};

namespace detail {

/// Gives nodes without an action (zero prior probability) the action of
/// `fallback`, so the strategy can be evaluated at any grid point.
inline void fill_missing(StrategyTable& strategy, const StrategyTable& fallback) {
    for (int n = 0; n < strategy.lattice.steps(); ++n) {
        strategy.lattice.for_each_node(n, [&](const Node& v) {
            if (!strategy.action(v)) strategy.set(v, fallback.action(v));
        });
    }
}

}  // namespace detail

/// Conditional-gradient ascent of the concave map mu -> R_T(mu) over priors
/// supported on `grid`.
///
/// Each iteration solves for the Bayesian strategy of the current prior,
/// evaluates its regret at every grid point (the supergradient of the risk
/// at that prior) and moves a 2/(k+2) step toward the worst grid point.
///
/// Certificates: lower_bound is the largest Bayesian risk seen; upper_bound
/// is the smallest worst-case regret over the Bayesian strategies seen and
/// over the randomized strategy that mixes them with the step weights.
inline GameResult find_worst_prior(const std::vector<ParameterPoint>& grid, const SolverConfig& config,
                                   int max_iterations, double gap_tol, const GameOptions& options = {}) {
    if (grid.empty()) throw DomainError("grid must not be empty");
    if (max_iterations < 1) throw ConfigError("max_iterations must be positive");
    if (!(gap_tol >= 0.0)) throw ConfigError("gap_tol must be non-negative");
    if (options.recursion == Recursion::linearized) throw ConfigError("minimax search needs recursion v1 or v2");

    const Prior uniform = Prior::uniform(grid);
    config.validate_for(uniform);
    SolverConfig inner = config;
    inner.materialize_risk = false;
    const StrategyTable fallback = greedy_strategy(uniform, config);

    const std::size_t m = grid.size();
    std::vector<double> weights(m, 1.0 / static_cast<double>(m));
    std::vector<double> mixed_regret(m, 0.0);

    GameResult result{uniform, 0.0, std::numeric_limits<double>::infinity(), 0, {}};
    double best_lower = -1.0;

    for (int k = 0; k < max_iterations; ++k) {
        std::vector<Atom> atoms;
        atoms.reserve(m);
        for (std::size_t i = 0; i < m; ++i) atoms.push_back({grid[i], weights[i]});
        const Prior prior = Prior::normalized(std::move(atoms));

        auto solved = options.recursion == Recursion::v1 ? solve_v1(prior, inner) : solve_v2(prior, inner);
        detail::fill_missing(solved.strategy, fallback);

        std::vector<double> regret(m);
        for (std::size_t i = 0; i < m; ++i) regret[i] = evaluate_exact(solved.strategy, grid[i], config).regret;

        if (solved.root_risk > best_lower) {
            best_lower = solved.root_risk;
            result.worst_prior = prior;
        }
        const double mix = 2.0 / (k + 2.0);
        for (std::size_t i = 0; i < m; ++i) mixed_regret[i] = (1.0 - mix) * mixed_regret[i] + mix * regret[i];

        const auto worst = static_cast<std::size_t>(std::max_element(regret.begin(), regret.end()) - regret.begin());
        const double pure_upper = regret[worst];
        const double mixed_upper = *std::max_element(mixed_regret.begin(), mixed_regret.end());
        result.upper_bound = std::min({result.upper_bound, pure_upper, mixed_upper});
        result.lower_bound = std::max(best_lower, 0.0);
        result.iterations = k + 1;
        result.history.push_back({k + 1, result.lower_bound, result.upper_bound});
        if (result.upper_bound - result.lower_bound <= gap_tol) break;

        const double step = 2.0 / (k + 2.0);
        for (std::size_t i = 0; i < m; ++i) weights[i] *= (1.0 - step);
        weights[worst] += step;
    }
    return result;
}

}  // namespace poisson_bandit
