#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "dp_solver.hpp"
#include "lattice.hpp"
#include "model.hpp"

namespace poisson_bandit {

/// |a - b| / max(|a|, |b|), zero when both vanish.
inline double relative_difference(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

struct EquivalenceReport {
    double max_relative = 0.0;
    double root_relative = 0.0;
    std::size_t compared = 0;
    /// Nodes left out because their marginal likelihood is at most the floor.
    std::size_t skipped = 0;
    /// Nodes where the two strategies differ although the v1 arm values are
    /// more than kDecisiveMargin apart.
    std::size_t strategy_mismatches = 0;
    Node worst{};
};

inline constexpr double kAuditMarginalFloor = 1e-12;
inline constexpr double kDecisiveMargin = 1e-9;

/// Solves both recursions and compares v1 against the normalized v2 table
/// on every node whose marginal likelihood exceeds kAuditMarginalFloor.
inline EquivalenceReport compare_recursions(const Prior& prior, SolverConfig config) {
    config.materialize_risk = true;
    const auto v1 = solve_v1(prior, config);
    const auto v2 = solve_v2(prior, config);
    const auto normalized = normalize_v2(v2.risk, prior);
    const double delta = config.delta();
    const auto& lattice = v1.risk.lattice;

    EquivalenceReport report;
    report.root_relative = relative_difference(v1.root_risk, v2.root_risk);
    for (int n = 0; n <= lattice.steps(); ++n) {
        lattice.for_each_node(n, [&](const Node& v) {
            if (marginal_likelihood(v.state(delta), prior) <= kAuditMarginalFloor) {
                ++report.skipped;
                return;
            }
            ++report.compared;
            const double rel = relative_difference(v1.risk.at(v), normalized.table.at(v));
            if (rel > report.max_relative) {
                report.max_relative = rel;
                report.worst = v;
            }
            if (n < lattice.steps() && v1.margin(v) > kDecisiveMargin &&
                v1.strategy.action(v) != v2.strategy.action(v)) {
                ++report.strategy_mismatches;
            }
        });
    }
    return report;
}

}  // namespace poisson_bandit
