#include "aeml/consolidate.hpp"

#include "aeml/errors.hpp"

namespace aeml {

Consolidator::Consolidator(const Grid& grid, Scheme scheme, int window)
    : grid_(grid), scheme_(scheme), window_(scheme == Scheme::Space ? 1 : window) {
  grid_.validate();
  if (scheme_ == Scheme::Time && window_ < 1)
    throw ConfigError("time consolidation needs a positive window");

  const int tiles_x = grid_.tiles_along(0);
  const int tn = grid_.tile_nodes();
  tile_ids_.resize(std::size_t(grid_.tile_count()) * tn);
  for (int t = 0; t < grid_.tile_count(); ++t) {
    const int tx = t % tiles_x;
    const int ty = t / tiles_x;
    int* ids = tile_ids_.data() + std::size_t(t) * tn;
    int k = 0;
    for (int ly = 0; ly < grid_.tile[1]; ++ly)
      for (int lx = 0; lx < grid_.tile[0]; ++lx)
        ids[k++] = grid_.index(tx * grid_.tile[0] + lx, ty * grid_.tile[1] + ly);
  }
}

std::span<const int> Consolidator::tile_node_ids(int tile) const {
  const int tn = grid_.tile_nodes();
  return {tile_ids_.data() + std::size_t(tile) * tn, std::size_t(tn)};
}

void Consolidator::gather(const StateVector& state, int tile, int field,
                          std::span<double> out) const {
  if (state.nodes != grid_.node_count()) throw ShapeError("state does not match grid");
  const auto ids = tile_node_ids(tile);
  if (out.size() != ids.size()) throw ShapeError("gather buffer size mismatch");
  const auto f = state.field(field);
  for (std::size_t j = 0; j < ids.size(); ++j) out[j] = f[ids[j]];
}

void Consolidator::scatter(std::span<const double> in, int tile, int field,
                           StateVector& state) const {
  if (state.nodes != grid_.node_count()) throw ShapeError("state does not match grid");
  const auto ids = tile_node_ids(tile);
  if (in.size() != ids.size()) throw ShapeError("scatter buffer size mismatch");
  auto f = state.field(field);
  for (std::size_t j = 0; j < ids.size(); ++j) f[ids[j]] = in[j];
}

}  // namespace aeml
