#pragma once

#include <array>
#include <cmath>

#include "aeml/errors.hpp"
#include "aeml/field.hpp"

namespace aeml {

/// Uniform 1D/2D node grid. Nodes are indexed x-fastest; node (ix, iy) sits at
/// physical position (ix * spacing, iy * spacing). Tiles partition the nodes
/// exactly for consolidation.
struct Grid {
  int dim = 1;
  std::array<int, 2> nodes = {0, 1};  // nodes per axis; nodes[1] == 1 in 1D
  double spacing = 1.0;
  std::array<int, 2> tile = {0, 1};  // nodes per tile per axis

  static Grid make_1d(int nx, double h, int tile_x) {
    Grid g;
    g.dim = 1;
    g.nodes = {nx, 1};
    g.spacing = h;
    g.tile = {tile_x, 1};
    g.validate();
    return g;
  }

  static Grid make_2d(int nx, int ny, double h, int tile_x, int tile_y) {
    Grid g;
    g.dim = 2;
    g.nodes = {nx, ny};
    g.spacing = h;
    g.tile = {tile_x, tile_y};
    g.validate();
    return g;
  }

  void validate() const {
    if (dim != 1 && dim != 2) throw ShapeError("grid dim must be 1 or 2");
    if (spacing <= 0.0) throw ShapeError("grid spacing must be positive");
    for (int a = 0; a < dim; ++a) {
      if (nodes[a] < 4) throw ShapeError("grid needs at least 4 nodes per axis");
      if (tile[a] < 1 || nodes[a] % tile[a] != 0)
        throw ShapeError("tile shape must divide nodes per axis exactly");
    }
    if (dim == 1 && (nodes[1] != 1 || tile[1] != 1))
      throw ShapeError("1D grid must have trivial second axis");
  }

  int node_count() const { return nodes[0] * nodes[1]; }
  int index(int ix, int iy = 0) const { return ix + nodes[0] * iy; }

  bool on_boundary(int ix, int iy = 0) const {
    if (ix == 0 || ix == nodes[0] - 1) return true;
    if (dim == 2 && (iy == 0 || iy == nodes[1] - 1)) return true;
    return false;
  }

  int tiles_along(int axis) const { return nodes[axis] / tile[axis]; }
  int tile_count() const { return tiles_along(0) * (dim == 2 ? tiles_along(1) : 1); }
  int tile_nodes() const { return tile[0] * (dim == 2 ? tile[1] : 1); }

  double extent(int axis) const { return spacing * (nodes[axis] - 1); }

  /// Nearest node to a physical coordinate, clamped into the domain.
  int nearest_node(double x, double y = 0.0) const {
    auto snap = [this](double v, int axis) {
      int i = static_cast<int>(std::lround(v / spacing));
      if (i < 0) i = 0;
      if (i > nodes[axis] - 1) i = nodes[axis] - 1;
      return i;
    };
    int ix = snap(x, 0);
    int iy = dim == 2 ? snap(y, 1) : 0;
    return index(ix, iy);
  }
};

/// Material fields on the grid: density rho and acoustic wavespeed c.
struct Medium {
  Field density;
  Field wavespeed;

  static Medium uniform(const Grid& g, double rho, double c) {
    Medium m;
    m.density.assign(g.node_count(), rho);
    m.wavespeed.assign(g.node_count(), c);
    return m;
  }

  void validate(const Grid& g) const {
    if (static_cast<int>(density.size()) != g.node_count() ||
        static_cast<int>(wavespeed.size()) != g.node_count())
      throw ShapeError("medium fields do not match grid");
    for (double r : density)
      if (!(r > 0.0)) throw InvalidMediumError("density must be positive everywhere");
    for (double c : wavespeed)
      if (!(c > 0.0)) throw InvalidMediumError("wavespeed must be positive everywhere");
  }
};

}  // namespace aeml
