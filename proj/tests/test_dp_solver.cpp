#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "poisson_bandit/audit.hpp"
#include "poisson_bandit/dp_solver.hpp"

namespace pb = poisson_bandit;

namespace {

pb::Prior symmetric_prior() { return pb::Prior({{{1.0, 2.0}, 0.5}, {{2.0, 1.0}, 0.5}}); }

/// Random small instance whose truncation check passes.
struct Instance {
    pb::Prior prior;
    pb::SolverConfig config;
};

Instance random_instance(std::mt19937_64& rng, int max_steps, int xmax) {
    std::uniform_int_distribution<int> atoms(1, 4);
    std::uniform_int_distribution<int> steps(1, max_steps);
    std::uniform_real_distribution<double> horizon(0.1, 2.0);
    for (;;) {
        auto prior = oracle::random_prior(rng, atoms(rng), 5.0);
        pb::SolverConfig config{horizon(rng), steps(rng), xmax};
        try {
            config.validate_for(prior);
        } catch (const pb::ConfigError&) {
            continue;
        }
        return {std::move(prior), config};
    }
}

}  // namespace

TEST(SolverConfig, RejectsInsufficientTruncation) {
    const pb::Prior prior({{{5.0, 1.0}, 1.0}});
    EXPECT_THROW(pb::solve_v1(prior, {2.0, 4, 10}), pb::ConfigError);
    EXPECT_THROW(pb::solve_v2(prior, {2.0, 4, 10}), pb::ConfigError);
    EXPECT_NO_THROW(pb::solve_v1(prior, {2.0, 4, 45}));
}

TEST(SolverConfig, RejectsNonPositiveSizes) {
    EXPECT_THROW((pb::SolverConfig{1.0, 0, 10}.validate()), pb::ConfigError);
    EXPECT_THROW((pb::SolverConfig{0.0, 2, 10}.validate()), pb::ConfigError);
    EXPECT_THROW((pb::SolverConfig{1.0, 2, 0}.validate()), pb::ConfigError);
}

TEST(SolveV1, KnownParameterHasZeroRisk) {
    const pb::Prior prior({{{1.0, 2.0}, 1.0}});
    const auto res = pb::solve_v1(prior, {1.0, 4, 20});
    EXPECT_EQ(res.root_risk, 0.0);
    for (int n = 0; n < 4; ++n) {
        res.risk.lattice.for_each_node(n, [&](const pb::Node& v) {
            EXPECT_EQ(res.strategy.action(v), pb::Arm::second) << v.to_string();
        });
    }
}

TEST(SolveV1, OneStepClosedForm) {
    const auto res = pb::solve_v1(symmetric_prior(), {1.0, 1, 20});
    EXPECT_NEAR(res.root_risk, 0.5, 1e-15);
}

TEST(SolveV1, MatchesDepthTwoDecisionTrees) {
    const auto prior = symmetric_prior();
    const auto res = pb::solve_v1(prior, {1.0, 2, 20});
    // j-sums stop at a relative tail of 1e-10
    EXPECT_NEAR(res.root_risk, oracle::depth_two_minimum(prior, 0.5, 20), 1e-10 * res.root_risk);
}

TEST(SolveV1, TerminalLayerIsZeroAndValuesNonNegative) {
    std::mt19937_64 rng(21);
    const auto inst = random_instance(rng, 5, 25);
    const auto res = pb::solve_v1(inst.prior, inst.config);
    const auto& lat = res.risk.lattice;
    lat.for_each_node(lat.steps(), [&](const pb::Node& v) { EXPECT_EQ(res.risk.at(v), 0.0); });
    for (int n = 0; n < lat.steps(); ++n) {
        lat.for_each_node(n, [&](const pb::Node& v) { EXPECT_GE(res.risk.at(v), 0.0); });
    }
}

TEST(SolveV1, ImpossibleStatesHaveNoAction) {
    const pb::Prior prior({{{0.0, 1.0}, 0.5}, {{0.0, 2.0}, 0.5}});
    const auto res = pb::solve_v1(prior, {1.0, 3, 20});
    const pb::Node impossible{1, 2, 1, 0};
    EXPECT_FALSE(res.strategy.action(impossible).has_value());
    EXPECT_EQ(res.risk.at(impossible), 0.0);
    EXPECT_TRUE(res.strategy.action(pb::Node{1, 0, 1, 3}).has_value());
    const auto v2 = pb::solve_v2(prior, {1.0, 3, 20});
    EXPECT_FALSE(v2.strategy.action(impossible).has_value());
}

TEST(SolveV2, OneStepAndRootAgreement) {
    EXPECT_NEAR(pb::solve_v2(symmetric_prior(), {1.0, 1, 20}).root_risk, 0.5, 1e-15);
    const pb::SolverConfig cfg{1.0, 6, 20};
    const double r1 = pb::solve_v1(symmetric_prior(), cfg).root_risk;
    const double r2 = pb::solve_v2(symmetric_prior(), cfg).root_risk;
    EXPECT_NEAR(r1, r2, 1e-10 * r1);
}

TEST(NormalizeV2, RootUnchangedAndSmallInstanceMatchesV1) {
    const auto prior = symmetric_prior();
    const pb::SolverConfig cfg{1.0, 3, 18};
    const auto v1 = pb::solve_v1(prior, cfg);
    const auto v2 = pb::solve_v2(prior, cfg);
    const auto norm = pb::normalize_v2(v2.risk, prior);
    EXPECT_EQ(norm.table.root(), v2.risk.root());
    EXPECT_TRUE(norm.skipped.empty());
    for (int n = 0; n <= 3; ++n) {
        v1.risk.lattice.for_each_node(n, [&](const pb::Node& v) {
            EXPECT_LE(pb::relative_difference(v1.risk.at(v), norm.table.at(v)), 1e-9) << v.to_string();
        });
    }
}

TEST(NormalizeV2, SingleAtomTableIsZero) {
    const pb::Prior prior({{{2.0, 0.5}, 1.0}});
    const auto v2 = pb::solve_v2(prior, {1.5, 4, 20});
    const auto norm = pb::normalize_v2(v2.risk, prior);
    for (int n = 0; n <= 4; ++n) {
        norm.table.lattice.for_each_node(n, [&](const pb::Node& v) { EXPECT_EQ(norm.table.at(v), 0.0); });
    }
}

TEST(NormalizeV2, ReportsNegligibleMarginals) {
    // x = 25 counts at rate 0.01 over 0.2 time units: marginal far below 1e-300
    const pb::Prior prior({{{0.01, 0.02}, 0.5}, {{0.02, 0.01}, 0.5}});
    const auto v2 = pb::solve_v2(prior, {0.4, 2, 200});
    const auto norm = pb::normalize_v2(v2.risk, prior);
    EXPECT_FALSE(norm.skipped.empty());
}

TEST(Equivalence, RandomizedSmallInstances) {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 12; ++trial) {
        const auto inst = random_instance(rng, 5, 25);
        const auto report = pb::compare_recursions(inst.prior, inst.config);
        EXPECT_LE(report.max_relative, 1e-9) << "trial " << trial << " worst " << report.worst.to_string();
        EXPECT_LE(report.root_relative, 1e-10);
        EXPECT_EQ(report.strategy_mismatches, 0u);
        EXPECT_GT(report.compared, 0u);
    }
}

TEST(Bounds, RootBelowBestConstantArm) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_instance(rng, 5, 25);
        const double root = pb::solve_v1(inst.prior, inst.config).root_risk;
        EXPECT_GE(root, 0.0);
        EXPECT_LE(root, pb::constant_arm_risk_bound(inst.prior, inst.config.horizon) + 1e-12);
    }
}

TEST(Bounds, MonotoneInHorizonAtFixedStep) {
    const auto prior = pb::Prior({{{0.5, 1.5}, 0.3}, {{1.2, 0.4}, 0.7}});
    const double delta = 0.2;
    double previous = 0.0;
    for (int steps = 1; steps <= 8; ++steps) {
        const double root = pb::solve_v2(prior, {delta * steps, steps, 25}).root_risk;
        EXPECT_GE(root, previous - 1e-14) << "N=" << steps;
        previous = root;
    }
}

TEST(Bounds, ConcaveInPrior) {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const std::vector<pb::ParameterPoint> support = {{1.0, 2.0}, {2.0, 1.0}, {0.5, 0.7}, {1.5, 1.5}};
    const pb::SolverConfig cfg{1.0, 4, 20};
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<pb::Atom> a, b;
        for (const auto& p : support) {
            a.push_back({p, u(rng)});
            b.push_back({p, u(rng)});
        }
        const auto pa = pb::Prior::normalized(a);
        const auto pbr = pb::Prior::normalized(b);
        const double ra = pb::solve_v2(pa, cfg).root_risk;
        const double rb = pb::solve_v2(pbr, cfg).root_risk;
        for (double alpha : {0.25, 0.5, 0.75}) {
            std::vector<pb::Atom> mix;
            for (std::size_t k = 0; k < support.size(); ++k) {
                mix.push_back({support[k], alpha * pa[k].weight + (1 - alpha) * pbr[k].weight});
            }
            const double rm = pb::solve_v2(pb::Prior::normalized(mix), cfg).root_risk;
            EXPECT_GE(rm, alpha * ra + (1 - alpha) * rb - 1e-9);
        }
    }
}

TEST(Determinism, RepeatedSolvesAreBitIdentical) {
    std::mt19937_64 rng(77);
    const auto inst = random_instance(rng, 5, 25);
    const auto a = pb::solve_v2(inst.prior, inst.config);
    const auto b = pb::solve_v2(inst.prior, inst.config);
    EXPECT_EQ(a.risk.layers, b.risk.layers);
    EXPECT_EQ(a.strategy, b.strategy);
}

TEST(Materialization, RootOnlyMatchesFullSweep) {
    pb::SolverConfig cfg{1.0, 6, 20};
    const auto full = pb::solve_v1(symmetric_prior(), cfg);
    cfg.materialize_risk = false;
    const auto lean = pb::solve_v1(symmetric_prior(), cfg);
    EXPECT_EQ(full.root_risk, lean.root_risk);
    EXPECT_EQ(full.strategy, lean.strategy);
    EXPECT_FALSE(lean.risk.materialized());
    EXPECT_THROW(lean.risk.at(pb::Node{1, 0, 0, 0}), pb::DomainError);
}

TEST(TruncatedSum, StopsAfterRunOfSmallTerms) {
    pb::detail::TruncatedSum sum(1e-3);
    EXPECT_TRUE(sum.add(1.0));
    for (int i = 0; i < 4; ++i) EXPECT_TRUE(sum.add(1e-6));
    EXPECT_FALSE(sum.add(1e-6));
}

TEST(TruncatedSum, LeadingZerosDoNotStop) {
    pb::detail::TruncatedSum sum(1e-3);
    for (int i = 0; i < 10; ++i) EXPECT_TRUE(sum.add(0.0));
    EXPECT_TRUE(sum.add(2.0));
    EXPECT_EQ(sum.total(), 2.0);
}
