#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "poisson_bandit/evaluation.hpp"

namespace pb = poisson_bandit;

namespace {

pb::Prior symmetric_prior() { return pb::Prior({{{1.0, 2.0}, 0.5}, {{2.0, 1.0}, 0.5}}); }

}  // namespace

TEST(EvaluateExact, ConstantArmsHaveClosedForm) {
    const pb::SolverConfig cfg{1.0, 5, 20};
    const pb::Lattice lattice(5, 20);
    const pb::ParameterPoint theta{1.0, 2.0};
    EXPECT_NEAR(pb::evaluate_exact(pb::constant_strategy(pb::Arm::first, lattice), theta, cfg).regret, 1.0, 1e-12);
    EXPECT_EQ(pb::evaluate_exact(pb::constant_strategy(pb::Arm::second, lattice), theta, cfg).regret, 0.0);
    const pb::SolverConfig longer{3.0, 6, 30};
    EXPECT_NEAR(pb::evaluate_exact(pb::constant_strategy(pb::Arm::second, pb::Lattice(6, 30)), {2.5, 0.5}, longer)
                    .regret,
                6.0, 1e-12);
}

TEST(EvaluateExact, BayesOptimalRegretEqualsRootRisk) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const auto prior = oracle::random_prior(rng, 3, 3.0);
        const pb::SolverConfig cfg{1.0, 5, 25};
        const auto res = pb::solve_v1(prior, cfg);
        const double bayes = pb::bayes_regret(res.strategy, prior, cfg);
        EXPECT_NEAR(bayes, res.root_risk, 1e-9 * std::max(1.0, res.root_risk) + res.truncation_budget);
    }
}

TEST(EvaluateExact, BaselinesAreNotBetter) {
    const auto prior = pb::Prior({{{0.5, 1.5}, 0.4}, {{1.4, 0.6}, 0.35}, {{1.0, 1.1}, 0.25}});
    const pb::SolverConfig cfg{2.0, 8, 30};
    const auto res = pb::solve_v2(prior, cfg);
    const double optimal = pb::bayes_regret(res.strategy, prior, cfg);
    const pb::Lattice lattice(cfg.steps, cfg.xmax);
    EXPECT_LE(optimal, pb::bayes_regret(pb::greedy_strategy(prior, cfg), prior, cfg) + 1e-12);
    EXPECT_LE(optimal, pb::bayes_regret(pb::constant_strategy(pb::Arm::first, lattice), prior, cfg) + 1e-12);
    EXPECT_LE(optimal, pb::bayes_regret(pb::constant_strategy(pb::Arm::second, lattice), prior, cfg) + 1e-12);
}

TEST(EvaluateExact, ReportsTruncatedMass) {
    const pb::SolverConfig cfg{1.0, 4, 3};
    const auto r = pb::evaluate_exact(pb::constant_strategy(pb::Arm::first, pb::Lattice(4, 3)), {2.0, 1.0}, cfg);
    const double tail = 1.0 - (oracle::pmf(0, 1, 2) + oracle::pmf(1, 1, 2) + oracle::pmf(2, 1, 2) + oracle::pmf(3, 1, 2));
    EXPECT_NEAR(r.truncated_mass, tail, 1e-12);
}

TEST(EvaluateExact, MissingActionIsAnError) {
    const pb::Lattice lattice(3, 10);
    pb::StrategyTable partial(lattice);
    partial.set(pb::Node{}, pb::Arm::first);
    EXPECT_THROW(pb::evaluate_exact(partial, {1.0, 1.0}, {1.0, 3, 10}), pb::StrategyError);
}

TEST(EvaluateExact, LatticeMismatchIsAnError) {
    const auto table = pb::constant_strategy(pb::Arm::first, pb::Lattice(3, 10));
    EXPECT_THROW(pb::evaluate_exact(table, {1.0, 1.0}, {1.0, 4, 10}), pb::ConfigError);
}

TEST(SamplePoisson, SmallMeanPassesChiSquare) {
    std::mt19937_64 rng(31337);
    const double mean = 3.0;
    const int draws = 40000;
    const int bins = 10;  // 0..8 and >= 9
    std::vector<int> observed(bins, 0);
    for (int i = 0; i < draws; ++i) {
        const auto k = pb::sample_poisson(mean, rng);
        ++observed[static_cast<std::size_t>(std::min<std::int64_t>(k, bins - 1))];
    }
    double chi2 = 0.0;
    double head = 0.0;
    for (int k = 0; k < bins; ++k) {
        double p;
        if (k < bins - 1) {
            p = static_cast<double>(oracle::pmf(k, 1.0L, mean));
            head += p;
        } else {
            p = 1.0 - head;
        }
        const double expected = p * draws;
        chi2 += (observed[static_cast<std::size_t>(k)] - expected) * (observed[static_cast<std::size_t>(k)] - expected) /
                expected;
    }
    // 9 degrees of freedom, 0.999 quantile
    EXPECT_LT(chi2, 27.88);
}

TEST(SamplePoisson, LargeMeanMoments) {
    std::mt19937_64 rng(4);
    const double mean = 40.0;
    const int draws = 40000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double k = static_cast<double>(pb::sample_poisson(mean, rng));
        sum += k;
        sq += k * k;
    }
    const double m = sum / draws;
    const double var = sq / draws - m * m;
    EXPECT_NEAR(m, mean, 5.0 * std::sqrt(mean / draws));
    EXPECT_NEAR(var / mean, 1.0, 0.05);
}

TEST(SamplePoisson, ZeroMeanIsZero) {
    std::mt19937_64 rng(1);
    EXPECT_EQ(pb::sample_poisson(0.0, rng), 0);
}

TEST(SimulateTrajectory, RecordsEveryInterval) {
    const pb::Lattice lattice(6, 30);
    auto rng = pb::detail::replication_stream(5, 0);
    const auto tr = pb::simulate_trajectory(pb::constant_strategy(pb::Arm::second, lattice), {1.0, 2.0}, 0.5, rng);
    ASSERT_EQ(tr.steps.size(), 6u);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
        EXPECT_EQ(tr.steps[i].interval, static_cast<int>(i));
        EXPECT_EQ(tr.steps[i].action, pb::Arm::second);
        total += tr.steps[i].increment;
    }
    EXPECT_EQ(tr.total1, 0);
    EXPECT_EQ(tr.total2, total);
}

TEST(Simulate, AgreesWithExactRegret) {
    const auto prior = symmetric_prior();
    const pb::SolverConfig cfg{1.0, 6, 20};
    const auto res = pb::solve_v1(prior, cfg);
    for (const auto& a : prior.atoms()) {
        const double exact = pb::evaluate_exact(res.strategy, a.theta, cfg).regret;
        const auto mc = pb::simulate(res.strategy, a.theta, cfg, 20000, 17);
        EXPECT_GT(mc.std_error, 0.0);
        EXPECT_NEAR(mc.mean, exact, 4.0 * mc.std_error);
    }
    const auto mixed = pb::simulate_mixed(res.strategy, prior, cfg, 20000, 18);
    EXPECT_NEAR(mixed.mean, pb::bayes_regret(res.strategy, prior, cfg), 4.0 * mixed.std_error);
}

TEST(Simulate, ConstantArmWithKnownVariance) {
    const pb::SolverConfig cfg{1.0, 4, 20};
    const auto mc = pb::simulate(pb::constant_strategy(pb::Arm::first, pb::Lattice(4, 20)), {1.0, 2.0}, cfg, 10000, 3);
    // regret 2 - X with X ~ Poisson(1)
    EXPECT_NEAR(mc.mean, 1.0, 4.0 * 0.01);
    EXPECT_NEAR(mc.std_error, 0.01, 0.001);
    EXPECT_EQ(mc.replications, 10000);
    EXPECT_EQ(mc.seed, 3u);
}

TEST(Simulate, DeterministicAcrossRunsAndThreads) {
    const auto prior = symmetric_prior();
    const pb::SolverConfig cfg{1.0, 5, 20};
    const auto res = pb::solve_v1(prior, cfg);
    const auto a = pb::simulate(res.strategy, {1.0, 2.0}, cfg, 3001, 99, 1);
    const auto b = pb::simulate(res.strategy, {1.0, 2.0}, cfg, 3001, 99, 1);
    const auto c = pb::simulate(res.strategy, {1.0, 2.0}, cfg, 3001, 99, 4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.mean, c.mean);
    EXPECT_EQ(a.std_error, c.std_error);
    const auto d = pb::simulate(res.strategy, {1.0, 2.0}, cfg, 3001, 100, 1);
    EXPECT_NE(a.mean, d.mean);
    const auto m1 = pb::simulate_mixed(res.strategy, prior, cfg, 2000, 7, 1);
    const auto m3 = pb::simulate_mixed(res.strategy, prior, cfg, 2000, 7, 3);
    EXPECT_EQ(m1.mean, m3.mean);
}

TEST(Simulate, RejectsBadInput) {
    const auto table = pb::constant_strategy(pb::Arm::first, pb::Lattice(3, 10));
    EXPECT_THROW(pb::simulate(table, {1.0, 1.0}, {1.0, 3, 10}, 0, 1), pb::ConfigError);
    pb::StrategyTable empty(pb::Lattice(3, 10));
    EXPECT_THROW(pb::simulate(empty, {1.0, 1.0}, {1.0, 3, 10}, 10, 1), pb::StrategyError);
}

TEST(Simulate, CountsClampEvents) {
    // rate 30 over 1.0 time unit quickly exceeds xmax = 5
    const auto table = pb::constant_strategy(pb::Arm::first, pb::Lattice(4, 5));
    const auto mc = pb::simulate(table, {30.0, 1.0}, {1.0, 4, 5}, 200, 2);
    EXPECT_GT(mc.clamp_events, 0);
}
