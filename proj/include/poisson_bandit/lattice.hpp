#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace poisson_bandit {

/// Lattice point: n1, n2 elapsed intervals per arm and x1, x2 counts.
struct Node {
    int n1 = 0;
    int x1 = 0;
    int n2 = 0;
    int x2 = 0;

    int layer() const { return n1 + n2; }
    int intervals(Arm arm) const { return arm == Arm::first ? n1 : n2; }
    int count(Arm arm) const { return arm == Arm::first ? x1 : x2; }

    /// Node after one more interval on `arm` with `j` new events.
    Node advanced(Arm arm, int j) const {
        Node next = *this;
        if (arm == Arm::first) {
            next.n1 += 1;
            next.x1 += j;
        } else {
            next.n2 += 1;
            next.x2 += j;
        }
        return next;
    }

    State state(double delta) const { return {x1, n1 * delta, x2, n2 * delta}; }

    std::string to_string() const {
        return "(n1=" + std::to_string(n1) + ", x1=" + std::to_string(x1) + ", n2=" + std::to_string(n2) +
               ", x2=" + std::to_string(x2) + ")";
    }

    friend auto operator<=>(const Node&, const Node&) = default;
};

/// Truncated state lattice: layers n = n1 + n2 in [0, steps], counts in
/// [0, xmax] per arm, and x = 0 on an arm that has never been played.
///
/// Within a layer, nodes are stored in lexicographic (n1, x1, x2) order.
class Lattice {
  public:
    Lattice(int steps, int xmax) : steps_(steps), xmax_(xmax) {
        if (steps < 1) throw ConfigError("steps_N must be positive");
        if (xmax < 1) throw ConfigError("xmax must be at least 1");
        offsets_.resize(static_cast<std::size_t>(steps) + 1);
        for (int n = 0; n <= steps; ++n) {
            auto& off = offsets_[static_cast<std::size_t>(n)];
            off.resize(static_cast<std::size_t>(n) + 2);
            off[0] = 0;
            for (int n1 = 0; n1 <= n; ++n1) {
                off[static_cast<std::size_t>(n1) + 1] =
                    off[static_cast<std::size_t>(n1)] + extent(n1) * extent(n - n1);
            }
        }
    }

    int steps() const { return steps_; }
    int xmax() const { return xmax_; }

    /// Number of admissible counts on an arm played for `intervals` intervals.
    std::size_t extent(int intervals) const {
        return intervals == 0 ? 1 : static_cast<std::size_t>(xmax_) + 1;
    }

    std::size_t layer_size(int n) const { return offsets_[static_cast<std::size_t>(n)].back(); }

    bool contains(const Node& v) const {
        if (v.n1 < 0 || v.n2 < 0 || v.layer() > steps_) return false;
        if (v.x1 < 0 || v.x2 < 0 || v.x1 > xmax_ || v.x2 > xmax_) return false;
        return (v.n1 > 0 || v.x1 == 0) && (v.n2 > 0 || v.x2 == 0);
    }

    std::size_t index(const Node& v) const {
        const auto& off = offsets_[static_cast<std::size_t>(v.layer())];
        return off[static_cast<std::size_t>(v.n1)] + static_cast<std::size_t>(v.x1) * extent(v.n2) +
               static_cast<std::size_t>(v.x2);
    }

    /// Visits every node of layer `n` in storage order.
    template <class Fn>
    void for_each_node(int n, Fn&& fn) const {
        for (int n1 = 0; n1 <= n; ++n1) {
            const int n2 = n - n1;
            const int hi1 = n1 == 0 ? 0 : xmax_;
            const int hi2 = n2 == 0 ? 0 : xmax_;
            for (int x1 = 0; x1 <= hi1; ++x1) {
                for (int x2 = 0; x2 <= hi2; ++x2) fn(Node{n1, x1, n2, x2});
            }
        }
    }

    friend bool operator==(const Lattice& a, const Lattice& b) {
        return a.steps_ == b.steps_ && a.xmax_ == b.xmax_;
    }

  private:
    int steps_;
    int xmax_;
    std::vector<std::vector<std::size_t>> offsets_;
};

enum class Recursion { v1, v2, linearized };

inline std::string to_string(Recursion r) {
    switch (r) {
        case Recursion::v1: return "v1";
        case Recursion::v2: return "v2";
        case Recursion::linearized: return "linearized";
    }
    return "unknown";
}

/// Per-node risk values. v1 holds posterior risk R; v2 and linearized hold
/// the marginal-weighted risk R~ = R * mu(state).
struct RiskTable {
    Lattice lattice;
    double horizon = 0.0;
    Recursion recursion = Recursion::v1;
    /// layers[n] is empty when the layer was not materialized.
    std::vector<std::vector<double>> layers;

    double delta() const { return horizon / lattice.steps(); }

    bool has_layer(int n) const {
        return n >= 0 && n <= lattice.steps() && !layers[static_cast<std::size_t>(n)].empty();
    }

    bool materialized() const {
        for (int n = 0; n <= lattice.steps(); ++n) {
            if (!has_layer(n)) return false;
        }
        return true;
    }

    double at(const Node& v) const {
        if (!lattice.contains(v)) throw DomainError("node outside lattice " + v.to_string());
        if (!has_layer(v.layer())) throw DomainError("risk layer not materialized " + v.to_string());
        return layers[static_cast<std::size_t>(v.layer())][lattice.index(v)];
    }

    double root() const { return at(Node{}); }
};

/// Per-node action for the non-terminal layers; 0 marks a node with no entry.
struct StrategyTable {
    Lattice lattice;
    std::vector<std::vector<std::uint8_t>> layers;

    explicit StrategyTable(Lattice lat) : lattice(std::move(lat)) {
        layers.resize(static_cast<std::size_t>(lattice.steps()));
        for (int n = 0; n < lattice.steps(); ++n) {
            layers[static_cast<std::size_t>(n)].assign(lattice.layer_size(n), 0);
        }
    }

    std::optional<Arm> action(const Node& v) const {
        if (!lattice.contains(v) || v.layer() >= lattice.steps()) return std::nullopt;
        const auto a = layers[static_cast<std::size_t>(v.layer())][lattice.index(v)];
        if (a == 0) return std::nullopt;
        return static_cast<Arm>(a);
    }

    void set(const Node& v, std::optional<Arm> arm) {
        layers[static_cast<std::size_t>(v.layer())][lattice.index(v)] =
            arm ? static_cast<std::uint8_t>(*arm) : std::uint8_t{0};
    }

    friend bool operator==(const StrategyTable& a, const StrategyTable& b) {
        return a.lattice == b.lattice && a.layers == b.layers;
    }
};

}  // namespace poisson_bandit
