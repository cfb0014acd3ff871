#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aeml/grid.hpp"
#include "aeml/state.hpp"

namespace aeml {

/// How state DoFs are flattened into the fixed-length vectors a codec sees.
enum class Scheme : std::uint8_t { Space = 0, Time = 1 };

/// A fixed-length flattening of one field on one tile: a single stage state
/// (space scheme) or a window of consecutive stage states (time scheme).
struct ConsolidatedVector {
  std::vector<double> values;
  Scheme scheme = Scheme::Space;
  int tile = 0;
  int field = 0;
  StageKey first_key;  // first stage key covered
  int pad = 0;         // time scheme: trailing zero-padded stage slots
};

/// Deterministic gather/scatter between nodal fields and per-tile vectors.
/// The node permutation is the same on every tile. For the time scheme the
/// caller assembles `window` consecutive slot slices (slot-major) into one
/// vector of length window * tile_nodes.
class Consolidator {
 public:
  Consolidator(const Grid& grid, Scheme scheme, int window);

  Scheme scheme() const { return scheme_; }
  int window() const { return window_; }
  int tile_count() const { return grid_.tile_count(); }
  int tile_nodes() const { return grid_.tile_nodes(); }
  int n_in() const { return window_ * tile_nodes(); }

  std::span<const int> tile_node_ids(int tile) const;

  /// Copy one field's values on one tile out of / into a state vector.
  void gather(const StateVector& state, int tile, int field, std::span<double> out) const;
  void scatter(std::span<const double> in, int tile, int field, StateVector& state) const;

 private:
  Grid grid_;
  Scheme scheme_;
  int window_;
  std::vector<int> tile_ids_;  // tile_count x tile_nodes
};

}  // namespace aeml
