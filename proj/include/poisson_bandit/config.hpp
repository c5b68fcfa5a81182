#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dp_solver.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "linearized.hpp"
#include "model.hpp"

namespace poisson_bandit {

enum class Command { solve, linearized, evaluate, simulate, minimax, audit };

inline std::string to_string(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::linearized: return "linearized";
        case Command::evaluate: return "evaluate";
        case Command::simulate: return "simulate";
        case Command::minimax: return "minimax";
        case Command::audit: return "audit";
    }
    return "unknown";
}

inline std::optional<Command> command_from_string(std::string_view name) {
    for (const Command c : {Command::solve, Command::linearized, Command::evaluate, Command::simulate,
                            Command::minimax, Command::audit}) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

/// One tool invocation, parsed from a `key = value` document.
struct RunConfig {
    Command command = Command::solve;
    std::string prior_path;
    std::string grid_path;
    std::string output_dir = ".";
    double horizon_T = 0.0;
    int steps_N = 0;
    int xmax = 0;
    double tail_eps = 1e-10;
    std::optional<double> t_floor;
    Recursion recursion = Recursion::v1;
    TieRule tie_rule = TieRule::prefer_first;
    std::optional<ParameterPoint> theta;
    std::int64_t replications = 10000;
    std::uint64_t seed = 0;
    int max_iterations = 200;
    double gap_tol = 0.0;
    unsigned threads = 1;

    SolverConfig solver_config() const { return {horizon_T, steps_N, xmax, tail_eps, tie_rule, true}; }

    LinearizedConfig linearized_config() const {
        return {horizon_T, steps_N, xmax, t_floor, tail_eps, tie_rule, true};
    }
};

namespace detail {

inline const std::set<std::string, std::less<>>& known_keys() {
    static const std::set<std::string, std::less<>> keys = {
        "command", "prior_path", "grid_path", "output_dir", "horizon_T",      "steps_N", "xmax",    "tail_eps",
        "t_floor", "recursion",  "tie_rule",  "theta",      "replications",   "seed",    "max_iterations",
        "gap_tol", "threads"};
    return keys;
}

inline std::vector<std::string> required_keys(Command c) {
    std::vector<std::string> keys = {"horizon_T", "steps_N", "xmax"};
    keys.push_back(c == Command::minimax ? "grid_path" : "prior_path");
    return keys;
}

inline void positive(bool ok, std::size_t line, const std::string& key, const char* what) {
    if (!ok) throw ConfigError("line " + std::to_string(line) + ": " + key + " " + what);
}

}  // namespace detail

/// Parses a `key = value` configuration (one per line, `#` comments).
/// Unknown keys, repeated keys, malformed numbers and missing required keys
/// are errors naming the line.
inline RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::map<std::string, std::size_t, std::less<>> seen;
    std::size_t line = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        const auto raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line;
        const auto body = io::trim(io::strip_comment(raw));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) throw ParseError(line, "expected 'key = value'");
        const std::string key(io::trim(body.substr(0, eq)));
        const auto value = io::trim(body.substr(eq + 1));
        if (detail::known_keys().count(key) == 0) throw ParseError(line, "unknown key '" + key + "'");
        if (seen.count(key) != 0) throw ParseError(line, "repeated key '" + key + "'");
        if (value.empty()) throw ParseError(line, "empty value for '" + key + "'");
        seen.emplace(key, line);

        if (key == "command") {
            const auto c = command_from_string(value);
            if (!c) throw ParseError(line, "unknown command '" + std::string(value) + "'");
            cfg.command = *c;
        } else if (key == "prior_path") {
            cfg.prior_path = value;
        } else if (key == "grid_path") {
            cfg.grid_path = value;
        } else if (key == "output_dir") {
            cfg.output_dir = value;
        } else if (key == "horizon_T") {
            cfg.horizon_T = io::parse_double(value, line);
            detail::positive(cfg.horizon_T > 0.0, line, key, "must be positive");
        } else if (key == "steps_N") {
            cfg.steps_N = io::parse_integer<int>(value, line);
            detail::positive(cfg.steps_N > 0, line, key, "must be positive");
        } else if (key == "xmax") {
            cfg.xmax = io::parse_integer<int>(value, line);
            detail::positive(cfg.xmax >= 1, line, key, "must be at least 1");
        } else if (key == "tail_eps") {
            cfg.tail_eps = io::parse_double(value, line);
            detail::positive(cfg.tail_eps > 0.0 && cfg.tail_eps < 1.0, line, key, "must lie in (0, 1)");
        } else if (key == "t_floor") {
            cfg.t_floor = io::parse_double(value, line);
            detail::positive(*cfg.t_floor > 0.0, line, key, "must be positive");
        } else if (key == "recursion") {
            if (value == "v1") {
                cfg.recursion = Recursion::v1;
            } else if (value == "v2") {
                cfg.recursion = Recursion::v2;
            } else {
                throw ParseError(line, "recursion must be v1 or v2");
            }
        } else if (key == "tie_rule") {
            if (value != "prefer-arm-1") throw ParseError(line, "tie_rule must be prefer-arm-1");
        } else if (key == "theta") {
            const auto tokens = io::split_ws(value);
            if (tokens.size() != 2) throw ParseError(line, "theta expects 'lambda1 lambda2'");
            cfg.theta = ParameterPoint{io::parse_double(tokens[0], line), io::parse_double(tokens[1], line)};
            detail::positive(cfg.theta->lambda1 >= 0.0 && cfg.theta->lambda2 >= 0.0, line, key,
                             "rates must be non-negative");
        } else if (key == "replications") {
            cfg.replications = io::parse_integer<std::int64_t>(value, line);
            detail::positive(cfg.replications > 0, line, key, "must be positive");
        } else if (key == "seed") {
            cfg.seed = io::parse_integer<std::uint64_t>(value, line);
        } else if (key == "max_iterations") {
            cfg.max_iterations = io::parse_integer<int>(value, line);
            detail::positive(cfg.max_iterations > 0, line, key, "must be positive");
        } else if (key == "gap_tol") {
            cfg.gap_tol = io::parse_double(value, line);
            detail::positive(cfg.gap_tol >= 0.0, line, key, "must be non-negative");
        } else if (key == "threads") {
            cfg.threads = io::parse_integer<unsigned>(value, line);
            detail::positive(cfg.threads > 0, line, key, "must be positive");
        }
    }
    if (seen.count("command") == 0) throw ParseError(line, "missing required key 'command'");
    for (const auto& key : detail::required_keys(cfg.command)) {
        if (seen.count(key) == 0) {
            throw ParseError(line, "missing required key '" + key + "' for command " + to_string(cfg.command));
        }
    }
    return cfg;
}

/// `key = value` lines that parse back to an equivalent RunConfig.
inline std::vector<std::string> config_echo(const RunConfig& cfg) {
    std::vector<std::string> lines;
    auto add = [&](const std::string& key, const std::string& value) { lines.push_back(key + " = " + value); };
    add("command", to_string(cfg.command));
    if (!cfg.prior_path.empty()) add("prior_path", cfg.prior_path);
    if (!cfg.grid_path.empty()) add("grid_path", cfg.grid_path);
    add("output_dir", cfg.output_dir);
    add("horizon_T", io::format_exact(cfg.horizon_T));
    add("steps_N", std::to_string(cfg.steps_N));
    add("xmax", std::to_string(cfg.xmax));
    add("tail_eps", io::format_exact(cfg.tail_eps));
    if (cfg.t_floor) add("t_floor", io::format_exact(*cfg.t_floor));
    add("recursion", to_string(cfg.recursion));
    add("tie_rule", "prefer-arm-1");
    if (cfg.theta) add("theta", io::format_exact(cfg.theta->lambda1) + " " + io::format_exact(cfg.theta->lambda2));
    add("replications", std::to_string(cfg.replications));
    add("seed", std::to_string(cfg.seed));
    add("max_iterations", std::to_string(cfg.max_iterations));
    add("gap_tol", io::format_exact(cfg.gap_tol));
    add("threads", std::to_string(cfg.threads));
    return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
    std::ostringstream out;
    for (const auto& l : lines) out << l << '\n';
    return out.str();
}

}  // namespace poisson_bandit
