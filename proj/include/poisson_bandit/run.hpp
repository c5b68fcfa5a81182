#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "audit.hpp"
#include "config.hpp"
#include "dp_solver.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "game.hpp"
#include "io.hpp"
#include "linearized.hpp"

namespace poisson_bandit {

enum ExitStatus : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitIo = 3,
    kExitSolver = 4,
};

/// Reads a configuration file; relative paths inside it are resolved
/// against the file's directory.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    RunConfig cfg = parse_config(text.str());
    const auto base = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    resolve(cfg.prior_path);
    resolve(cfg.grid_path);
    resolve(cfg.output_dir);
    return cfg;
}

namespace detail {

class OutputDir {
  public:
    explicit OutputDir(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    }

    template <class WriteFn>
    void write(const std::string& name, WriteFn&& fn) const {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        fn(out);
        out.flush();
        if (!out) throw IoError("failed writing " + path.string());
    }

  private:
    std::filesystem::path dir_;
};

inline SolveResult solve_with(const Prior& prior, const SolverConfig& config, Recursion recursion) {
    return recursion == Recursion::v1 ? solve_v1(prior, config) : solve_v2(prior, config);
}

inline void write_summary(const OutputDir& out, const std::vector<std::string>& echo,
                          const std::vector<std::pair<std::string, std::string>>& fields) {
    out.write("summary.txt", [&](std::ostream& os) {
        os << "#! summary\n";
        io::write_header(os, echo);
        for (const auto& [k, v] : fields) os << k << " = " << v << '\n';
    });
}

inline void write_regret_csv(const OutputDir& out, const std::string& name, const std::vector<std::string>& echo,
                             const std::vector<std::vector<std::string>>& rows) {
    out.write(name, [&](std::ostream& os) {
        io::write_header(os, echo);
        os << "theta1,theta2,mean,std_error,replications,seed\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
            os << '\n';
        }
    });
}

inline std::vector<ParameterPoint> evaluation_points(const RunConfig& cfg, const Prior& prior) {
    if (cfg.theta) return {*cfg.theta};
    std::vector<ParameterPoint> points;
    for (const auto& a : prior.atoms()) points.push_back(a.theta);
    return points;
}

inline double rounded(double v) { return std::stod(io::format_number(v)); }

inline void run_command(const RunConfig& cfg) {
    const auto echo = config_echo(cfg);
    const OutputDir out(cfg.output_dir);

    switch (cfg.command) {
        case Command::solve: {
            const auto prior = io::read_prior(cfg.prior_path);
            const auto res = solve_with(prior, cfg.solver_config(), cfg.recursion);
            out.write("risk.txt", [&](std::ostream& os) { io::write_risk_table(os, res.risk, echo); });
            out.write("strategy.txt",
                      [&](std::ostream& os) { io::write_strategy_table(os, res.strategy, res.risk, echo); });
            write_summary(out, echo,
                          {{"root_risk", io::format_number(res.root_risk)},
                           {"truncation_budget", io::format_number(res.truncation_budget)}});
            break;
        }
        case Command::linearized: {
            const auto prior = io::read_prior(cfg.prior_path);
            const auto lcfg = cfg.linearized_config();
            const auto res = solve_linearized(prior, lcfg);
            const auto audit = audit_residual(res.risk, res.strategy, prior, lcfg);
            out.write("risk.txt", [&](std::ostream& os) { io::write_risk_table(os, res.risk, echo); });
            out.write("strategy.txt",
                      [&](std::ostream& os) { io::write_strategy_table(os, res.strategy, res.risk, echo); });
            write_summary(out, echo,
                          {{"root_risk", io::format_number(res.root_risk)},
                           {"truncation_budget", io::format_number(res.truncation_budget)},
                           {"t_floor", io::format_number(lcfg.floor())},
                           {"max_interior_residual", io::format_number(audit.max_abs)},
                           {"audited_states", std::to_string(audit.audited)},
                           {"excluded_near_switch", std::to_string(audit.excluded_near_switch)}});
            break;
        }
        case Command::evaluate: {
            const auto prior = io::read_prior(cfg.prior_path);
            const auto scfg = cfg.solver_config();
            const auto res = solve_with(prior, scfg, cfg.recursion);
            std::vector<std::vector<std::string>> rows;
            for (const auto& theta : evaluation_points(cfg, prior)) {
                const auto r = evaluate_exact(res.strategy, theta, scfg);
                rows.push_back({io::format_number(theta.lambda1), io::format_number(theta.lambda2),
                                io::format_number(r.regret), "0", "0", std::to_string(cfg.seed)});
            }
            if (!cfg.theta) {
                rows.push_back({"prior", "prior", io::format_number(bayes_regret(res.strategy, prior, scfg)), "0",
                                "0", std::to_string(cfg.seed)});
            }
            write_regret_csv(out, "regret_exact.csv", echo, rows);
            break;
        }
        case Command::simulate: {
            const auto prior = io::read_prior(cfg.prior_path);
            const auto scfg = cfg.solver_config();
            const auto res = solve_with(prior, scfg, cfg.recursion);
            std::vector<std::vector<std::string>> rows;
            auto row = [&](const std::string& l1, const std::string& l2, const RegretEstimate& e) {
                rows.push_back({l1, l2, io::format_number(e.mean), io::format_number(e.std_error),
                                std::to_string(e.replications), std::to_string(e.seed)});
            };
            for (const auto& theta : evaluation_points(cfg, prior)) {
                row(io::format_number(theta.lambda1), io::format_number(theta.lambda2),
                    simulate(res.strategy, theta, scfg, cfg.replications, cfg.seed, cfg.threads));
            }
            if (!cfg.theta) {
                row("prior", "prior", simulate_mixed(res.strategy, prior, scfg, cfg.replications, cfg.seed, cfg.threads));
            }
            write_regret_csv(out, "regret_mc.csv", echo, rows);
            break;
        }
        case Command::minimax: {
            const auto grid = io::read_grid(cfg.grid_path);
            const auto game = find_worst_prior(grid, cfg.solver_config(), cfg.max_iterations, cfg.gap_tol,
                                               GameOptions{cfg.recursion});
            nlohmann::ordered_json doc;
            doc["config_echo"] = echo;
            auto& points = doc["grid"] = nlohmann::ordered_json::array();
            auto& weights = doc["weights"] = nlohmann::ordered_json::array();
            for (const auto& a : game.worst_prior.atoms()) {
                points.push_back({rounded(a.theta.lambda1), rounded(a.theta.lambda2)});
                weights.push_back(rounded(a.weight));
            }
            doc["lower_bound"] = rounded(game.lower_bound);
            doc["upper_bound"] = rounded(game.upper_bound);
            doc["iterations"] = game.iterations;
            auto& hist = doc["history"] = nlohmann::ordered_json::array();
            for (const auto& h : game.history) {
                hist.push_back({{"iteration", h.iteration},
                                {"lower_bound", rounded(h.lower_bound)},
                                {"upper_bound", rounded(h.upper_bound)}});
            }
            out.write("minimax.json", [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
            break;
        }
        case Command::audit: {
            const auto prior = io::read_prior(cfg.prior_path);
            const auto report = compare_recursions(prior, cfg.solver_config());
            out.write("audit.txt", [&](std::ostream& os) {
                os << "#! audit v1 vs normalized v2\n";
                io::write_header(os, echo);
                os << "max_relative_discrepancy = " << io::format_number(report.max_relative) << '\n'
                   << "root_relative_discrepancy = " << io::format_number(report.root_relative) << '\n'
                   << "compared_states = " << report.compared << '\n'
                   << "skipped_states = " << report.skipped << '\n'
                   << "strategy_mismatches = " << report.strategy_mismatches << '\n';
            });
            break;
        }
    }
}

}  // namespace detail

/// Executes one configured command; returns a process exit status and
/// prints a single-line diagnostic per failure class to `diag`.
inline int run(const RunConfig& cfg, std::ostream& diag = std::cerr) {
    try {
        detail::run_command(cfg);
        return kExitOk;
    } catch (const IoError& e) {
        diag << "poisson-bandit: io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ParseError& e) {
        diag << "poisson-bandit: validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConfigError& e) {
        diag << "poisson-bandit: validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        diag << "poisson-bandit: validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        diag << "poisson-bandit: solver error: " << e.what() << '\n';
        return kExitSolver;
    }
}

}  // namespace poisson_bandit
