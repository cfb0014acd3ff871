#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "aeml/grid.hpp"

namespace aeml {

/// All field coefficients at one RK stage: d velocity components followed by
/// the dilatation e, each a full nodal field in canonical ordering.
struct StateVector {
  int dim = 0;
  int nodes = 0;
  std::vector<double> data;

  static StateVector zeros(const Grid& g) {
    StateVector s;
    s.dim = g.dim;
    s.nodes = g.node_count();
    s.data.assign(static_cast<std::size_t>(s.dim + 1) * s.nodes, 0.0);
    return s;
  }

  int fields() const { return dim + 1; }
  std::size_t size() const { return data.size(); }

  std::span<double> velocity(int axis) { return {data.data() + std::size_t(axis) * nodes, std::size_t(nodes)}; }
  std::span<const double> velocity(int axis) const {
    return {data.data() + std::size_t(axis) * nodes, std::size_t(nodes)};
  }
  std::span<double> dilatation() { return {data.data() + std::size_t(dim) * nodes, std::size_t(nodes)}; }
  std::span<const double> dilatation() const {
    return {data.data() + std::size_t(dim) * nodes, std::size_t(nodes)};
  }

  /// Field by index: 0..dim-1 are velocity components, dim is the dilatation.
  std::span<double> field(int f) { return {data.data() + std::size_t(f) * nodes, std::size_t(nodes)}; }
  std::span<const double> field(int f) const {
    return {data.data() + std::size_t(f) * nodes, std::size_t(nodes)};
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  /// Enforce the traction-free constraint e = 0 on boundary nodes.
  void pin_boundary_dilatation(const Grid& g) {
    auto e = dilatation();
    for (int iy = 0; iy < g.nodes[1]; ++iy)
      for (int ix = 0; ix < g.nodes[0]; ++ix)
        if (g.on_boundary(ix, iy)) e[g.index(ix, iy)] = 0.0;
  }
};

/// Identifies one RK stage state: timestep t in [0, T), stage s in [0, 4).
struct StageKey {
  int step = 0;
  int stage = 0;

  friend auto operator<=>(const StageKey&, const StageKey&) = default;

  /// Global stage slot, 4*step + stage.
  std::int64_t slot() const { return std::int64_t(step) * 4 + stage; }
};

}  // namespace aeml
