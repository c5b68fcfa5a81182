#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dp_solver.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "model.hpp"

namespace poisson_bandit::io {

/// Reports print 12 significant digits.
inline std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

/// Shortest text that parses back to the same double.
inline std::string format_exact(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

/// Drops a trailing `#` comment.
inline std::string_view strip_comment(std::string_view line) {
    const auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

/// Whole-token double parse; throws ParseError on trailing garbage.
inline double parse_double(std::string_view token, std::size_t line) {
    const std::string text(token);
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(value)) {
        throw ParseError(line, "malformed number '" + text + "'");
    }
    return value;
}

template <class Int>
Int parse_integer(std::string_view token, std::size_t line) {
    Int value{};
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
        throw ParseError(line, "malformed integer '" + std::string(token) + "'");
    }
    return value;
}

inline constexpr double kPriorLoadTolerance = 1e-6;

/// Prior file: one `lambda1 lambda2 weight` atom per line, `#` comments.
/// Weights are renormalized when they sum to within 1e-6 of one.
inline Prior parse_prior(std::istream& in) {
    std::vector<Atom> atoms;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto body = trim(strip_comment(raw));
        if (body.empty()) continue;
        const auto tokens = split_ws(body);
        if (tokens.size() != 3) throw ParseError(line, "expected 'lambda1 lambda2 weight'");
        Atom atom{{parse_double(tokens[0], line), parse_double(tokens[1], line)}, parse_double(tokens[2], line)};
        if (atom.theta.lambda1 < 0.0 || atom.theta.lambda2 < 0.0) throw ParseError(line, "rates must be non-negative");
        if (atom.weight < 0.0) throw ParseError(line, "weights must be non-negative");
        for (const auto& a : atoms) {
            if (a.theta == atom.theta) throw ParseError(line, "duplicate atom");
        }
        atoms.push_back(atom);
    }
    if (atoms.empty()) throw ParseError(line, "prior has no atoms");
    double total = 0.0;
    for (const auto& a : atoms) total += a.weight;
    if (std::abs(total - 1.0) > kPriorLoadTolerance) {
        throw ParseError(line, "prior weights sum to " + format_number(total) + ", expected 1");
    }
    if (std::abs(total - 1.0) > Prior::kWeightTolerance) return Prior::normalized(std::move(atoms));
    return Prior(std::move(atoms));
}

inline Prior parse_prior(const std::string& text) {
    std::istringstream in(text);
    return parse_prior(in);
}

inline Prior read_prior(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prior file " + path);
    return parse_prior(in);
}

inline void write_prior(std::ostream& out, const Prior& prior) {
    out << "# lambda1 lambda2 weight\n";
    for (const auto& a : prior.atoms()) {
        out << format_exact(a.theta.lambda1) << ' ' << format_exact(a.theta.lambda2) << ' '
            << format_exact(a.weight) << '\n';
    }
}

/// Grid file: one `lambda1 lambda2` point per line; a third column is ignored.
inline std::vector<ParameterPoint> parse_grid(std::istream& in) {
    std::vector<ParameterPoint> grid;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto body = trim(strip_comment(raw));
        if (body.empty()) continue;
        const auto tokens = split_ws(body);
        if (tokens.size() < 2 || tokens.size() > 3) throw ParseError(line, "expected 'lambda1 lambda2'");
        const ParameterPoint p{parse_double(tokens[0], line), parse_double(tokens[1], line)};
        if (p.lambda1 < 0.0 || p.lambda2 < 0.0) throw ParseError(line, "rates must be non-negative");
        if (std::find(grid.begin(), grid.end(), p) != grid.end()) throw ParseError(line, "duplicate grid point");
        grid.push_back(p);
    }
    if (grid.empty()) throw ParseError(line, "grid has no points");
    return grid;
}

inline std::vector<ParameterPoint> read_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid file " + path);
    return parse_grid(in);
}

/// Nodes of the given layers sorted by (n1, x1, n2, x2).
inline std::vector<Node> sorted_nodes(const Lattice& lattice, int last_layer) {
    std::vector<Node> nodes;
    for (int n = 0; n <= last_layer; ++n) lattice.for_each_node(n, [&](const Node& v) { nodes.push_back(v); });
    std::sort(nodes.begin(), nodes.end());
    return nodes;
}

inline void write_table_banner(std::ostream& out, const char* kind, const RiskTable& risk) {
    out << "#! " << kind << " T=" << format_number(risk.horizon) << " N=" << risk.lattice.steps()
        << " xmax=" << risk.lattice.xmax() << " version=" << to_string(risk.recursion) << '\n';
}

inline void write_header(std::ostream& out, const std::vector<std::string>& echo) {
    for (const auto& line : echo) out << "# " << line << '\n';
}

/// `n1 x1 n2 x2 value` per node, terminal layer included.
inline void write_risk_table(std::ostream& out, const RiskTable& risk, const std::vector<std::string>& echo) {
    if (!risk.materialized()) throw DomainError("risk table is not materialized");
    write_table_banner(out, "risk", risk);
    write_header(out, echo);
    for (const auto& v : sorted_nodes(risk.lattice, risk.lattice.steps())) {
        out << v.n1 << ' ' << v.x1 << ' ' << v.n2 << ' ' << v.x2 << ' ' << format_number(risk.at(v)) << '\n';
    }
}

/// `n1 x1 n2 x2 action` per non-terminal node that has an action.
inline void write_strategy_table(std::ostream& out, const StrategyTable& strategy, const RiskTable& risk,
                                 const std::vector<std::string>& echo) {
    write_table_banner(out, "strategy", risk);
    write_header(out, echo);
    for (const auto& v : sorted_nodes(strategy.lattice, strategy.lattice.steps() - 1)) {
        if (const auto a = strategy.action(v)) {
            out << v.n1 << ' ' << v.x1 << ' ' << v.n2 << ' ' << v.x2 << ' ' << static_cast<int>(*a) << '\n';
        }
    }
}

/// Lines of the form `# key = value` from an output file, without the `# `.
inline std::vector<std::string> extract_echo(std::istream& in) {
    std::vector<std::string> echo;
    std::string raw;
    while (std::getline(in, raw)) {
        if (raw.rfind("# ", 0) == 0 && raw.find('=') != std::string::npos) echo.push_back(raw.substr(2));
    }
    return echo;
}

}  // namespace poisson_bandit::io
