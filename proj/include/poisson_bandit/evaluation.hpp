#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "dp_solver.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "model.hpp"
#include "poisson.hpp"

namespace poisson_bandit {

struct ExactRegret {
    double regret = 0.0;
    /// Probability mass of trajectories that left the count truncation.
    double truncated_mass = 0.0;
};

/// Expected regret T max(l1, l2) - E(X1(T) + X2(T)) of a lattice strategy.
///
/// Propagates the state distribution forward through the lattice and adds
/// (max rate - rate of the chosen arm) * delta at every visited node.
inline ExactRegret evaluate_exact(const StrategyTable& strategy, const ParameterPoint& theta,
                                  const SolverConfig& config) {
    config.validate();
    validate(theta);
    const Lattice& lattice = strategy.lattice;
    if (!(lattice == Lattice(config.steps, config.xmax))) {
        throw ConfigError("strategy lattice does not match the solver configuration");
    }
    const double delta = config.delta();
    std::vector<double> step[2];
    for (const Arm arm : {Arm::first, Arm::second}) {
        auto& s = step[arm_index(arm)];
        s.resize(static_cast<std::size_t>(config.xmax) + 1);
        for (int j = 0; j <= config.xmax; ++j) s[static_cast<std::size_t>(j)] = poisson_pmf(j, delta, theta.rate(arm));
    }

    ExactRegret out;
    std::vector<double> reach(lattice.layer_size(0), 1.0);
    for (int n = 0; n < lattice.steps(); ++n) {
        std::vector<double> next(lattice.layer_size(n + 1), 0.0);
        lattice.for_each_node(n, [&](const Node& v) {
            const double p = reach[lattice.index(v)];
            if (p == 0.0) return;
            const auto arm = strategy.action(v);
            if (!arm) throw StrategyError("strategy has no action for reachable state " + v.to_string());
            out.regret += p * theta.loss_rate(*arm) * delta;
            const auto& s = step[arm_index(*arm)];
            double kept = 0.0;
            for (int j = 0; v.count(*arm) + j <= lattice.xmax(); ++j) {
                const double q = p * s[static_cast<std::size_t>(j)];
                next[lattice.index(v.advanced(*arm, j))] += q;
                kept += q;
            }
            out.truncated_mass += std::max(0.0, p - kept);
        });
        reach = std::move(next);
    }
    return out;
}

/// Prior average of evaluate_exact over the atoms.
inline double bayes_regret(const StrategyTable& strategy, const Prior& prior, const SolverConfig& config) {
    double total = 0.0;
    for (const auto& a : prior.atoms()) {
        if (a.weight > 0.0) total += a.weight * evaluate_exact(strategy, a.theta, config).regret;
    }
    return total;
}

/// Strategy that always plays `arm`.
inline StrategyTable constant_strategy(Arm arm, const Lattice& lattice) {
    StrategyTable table(lattice);
    for (int n = 0; n < lattice.steps(); ++n) lattice.for_each_node(n, [&](const Node& v) { table.set(v, arm); });
    return table;
}

/// Plays the arm with the larger posterior mean rate (ties to arm 1).
inline StrategyTable greedy_strategy(const Prior& prior, const SolverConfig& config) {
    const Lattice lattice(config.steps, config.xmax);
    StrategyTable table(lattice);
    const double delta = config.delta();
    for (int n = 0; n < lattice.steps(); ++n) {
        lattice.for_each_node(n, [&](const Node& v) {
            if (marginal_likelihood(v.state(delta), prior) == 0.0) return;
            const auto post = posterior(v.state(delta), prior);
            double mean1 = 0.0;
            double mean2 = 0.0;
            for (const auto& a : post.atoms) {
                mean1 += a.weight * a.theta.lambda1;
                mean2 += a.weight * a.theta.lambda2;
            }
            table.set(v, mean1 >= mean2 ? Arm::first : Arm::second);
        });
    }
    return table;
}

struct RegretEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t replications = 0;
    std::uint64_t seed = 0;
    /// Strategy lookups that had to clamp a count at xmax.
    std::int64_t clamp_events = 0;
};

/// One interval of a simulated trajectory.
struct TrajectoryStep {
    int interval = 0;
    Arm action = Arm::first;
    std::int64_t increment = 0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    std::int64_t total1 = 0;
    std::int64_t total2 = 0;
    std::int64_t clamp_events = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for replication `r` of a run seeded with `seed`.
inline std::mt19937_64 replication_stream(std::uint64_t seed, std::uint64_t r) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(r + 0x632be59bd9b4e019ULL)));
}

}  // namespace detail

inline constexpr double kInversionMeanLimit = 10.0;

/// Poisson(mean) draw: sequential inversion for small means, the standard
/// library's large-mean sampler otherwise.
template <class Rng>
std::int64_t sample_poisson(double mean, Rng& rng) {
    if (mean <= 0.0) return 0;
    if (mean > kInversionMeanLimit) return std::poisson_distribution<std::int64_t>(mean)(rng);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double p = std::exp(-mean);
    double cdf = p;
    std::int64_t i = 0;
    while (u > cdf && p > 0.0) {
        ++i;
        p *= mean / static_cast<double>(i);
        cdf += p;
    }
    return i;
}

/// Runs one trajectory of `strategy` under `theta`.
template <class Rng>
Trajectory simulate_trajectory(const StrategyTable& strategy, const ParameterPoint& theta, double delta, Rng& rng) {
    const Lattice& lattice = strategy.lattice;
    Trajectory tr;
    tr.steps.reserve(static_cast<std::size_t>(lattice.steps()));
    Node v;
    for (int n = 0; n < lattice.steps(); ++n) {
        Node lookup{v.n1, static_cast<int>(std::min<std::int64_t>(tr.total1, lattice.xmax())), v.n2,
                    static_cast<int>(std::min<std::int64_t>(tr.total2, lattice.xmax()))};
        if (tr.total1 > lattice.xmax() || tr.total2 > lattice.xmax()) ++tr.clamp_events;
        const auto arm = strategy.action(lookup);
        if (!arm) throw StrategyError("strategy has no action for reachable state " + lookup.to_string());
        const std::int64_t inc = sample_poisson(theta.rate(*arm) * delta, rng);
        tr.steps.push_back({n, *arm, inc});
        if (*arm == Arm::first) {
            tr.total1 += inc;
            v.n1 += 1;
        } else {
            tr.total2 += inc;
            v.n2 += 1;
        }
    }
    return tr;
}

namespace detail {

/// Calls sample_fn(rng_r, samples[r], clamps[r]) for every replication r,
/// where rng_r is the stream of (seed, r), on up to `threads` workers.
/// Results do not depend on the worker count.
template <class SampleFn>
void run_replications(std::vector<double>& samples, std::vector<std::int64_t>& clamps, std::uint64_t seed,
                      unsigned threads, SampleFn&& sample_fn) {
    const std::size_t total = samples.size();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            auto rng = replication_stream(seed, r);
            sample_fn(rng, samples[r], clamps[r]);
        }
    };
    if (threads == 1) {
        work(0, total);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t begin = std::min(total, w * chunk);
        const std::size_t end = std::min(total, begin + chunk);
        pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
}

inline RegretEstimate summarize(const std::vector<double>& samples, const std::vector<std::int64_t>& clamps,
                                std::uint64_t seed) {
    RegretEstimate est;
    est.replications = static_cast<std::int64_t>(samples.size());
    est.seed = seed;
    double sum = 0.0;
    for (double s : samples) sum += s;
    est.mean = sum / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double s : samples) ss += (s - est.mean) * (s - est.mean);
        est.std_error = std::sqrt(ss / static_cast<double>(samples.size() - 1) / static_cast<double>(samples.size()));
    }
    for (auto c : clamps) est.clamp_events += c;
    return est;
}

inline void check_replications(std::int64_t replications) {
    if (replications < 1) throw ConfigError("replications must be positive");
}

}  // namespace detail

/// Monte Carlo estimate of the regret of `strategy` under a fixed `theta`.
/// Replication r draws from its own stream derived from (seed, r).
inline RegretEstimate simulate(const StrategyTable& strategy, const ParameterPoint& theta, const SolverConfig& config,
                               std::int64_t replications, std::uint64_t seed, unsigned threads = 1) {
    config.validate();
    validate(theta);
    detail::check_replications(replications);
    const double delta = config.delta();
    std::vector<double> samples(static_cast<std::size_t>(replications));
    std::vector<std::int64_t> clamps(samples.size(), 0);
    detail::run_replications(samples, clamps, seed, threads, [&](auto& rng, double& sample, std::int64_t& clamp) {
        const auto tr = simulate_trajectory(strategy, theta, delta, rng);
        sample = config.horizon * theta.best_rate() - static_cast<double>(tr.total1 + tr.total2);
        clamp = tr.clamp_events;
    });
    return detail::summarize(samples, clamps, seed);
}

/// Monte Carlo estimate of the Bayesian regret: each replication first draws
/// theta from the prior, then a trajectory under it.
inline RegretEstimate simulate_mixed(const StrategyTable& strategy, const Prior& prior, const SolverConfig& config,
                                     std::int64_t replications, std::uint64_t seed, unsigned threads = 1) {
    config.validate();
    detail::check_replications(replications);
    const double delta = config.delta();
    std::vector<double> weights;
    for (const auto& a : prior.atoms()) weights.push_back(a.weight);
    std::vector<double> samples(static_cast<std::size_t>(replications));
    std::vector<std::int64_t> clamps(samples.size(), 0);
    detail::run_replications(samples, clamps, seed, threads, [&](auto& rng, double& sample, std::int64_t& clamp) {
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        const auto& theta = prior[pick(rng)].theta;
        const auto tr = simulate_trajectory(strategy, theta, delta, rng);
        sample = config.horizon * theta.best_rate() - static_cast<double>(tr.total1 + tr.total2);
        clamp = tr.clamp_events;
    });
    return detail::summarize(samples, clamps, seed);
}

}  // namespace poisson_bandit
