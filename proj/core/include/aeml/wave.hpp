#pragma once

#include <optional>
#include <span>
#include <vector>

#include "aeml/field.hpp"
#include "aeml/grid.hpp"
#include "aeml/source.hpp"
#include "aeml/state.hpp"
#include "aeml/store.hpp"

namespace aeml {

struct TimeAxis {
  double dt = 0.0;
  int steps = 0;
  static constexpr int kStages = 4;
};

/// Largest stable explicit-RK4 timestep: safety * h / (sqrt(d) * max c).
double cfl_dt(const Grid& grid, const Medium& medium, double safety);

/// Everything a forward solve needs besides the wavespeed field.
struct ForwardConfig {
  Grid grid;
  Field density;  // rho per node
  TimeAxis time;
  std::vector<SourceSpec> sources;
  std::vector<int> receivers;                // node indices, nearest-node sampling
  std::optional<StateVector> initial_state;  // defaults to quiescent
};

/// Receiver velocity samples: one row per timestep, d values per receiver.
struct Observations {
  int steps = 0;
  int receivers = 0;
  int dim = 0;
  std::vector<double> data;  // steps x (receivers * dim), row-major

  static Observations zeros(int steps, int receivers, int dim) {
    Observations o;
    o.steps = steps;
    o.receivers = receivers;
    o.dim = dim;
    o.data.assign(std::size_t(steps) * receivers * dim, 0.0);
    return o;
  }

  int row_len() const { return receivers * dim; }
  std::span<double> row(int k) { return {data.data() + std::size_t(k) * row_len(), std::size_t(row_len())}; }
  std::span<const double> row(int k) const {
    return {data.data() + std::size_t(k) * row_len(), std::size_t(row_len())};
  }
};

/// Time derivative of the velocity-dilatation system,
///   dv/dt = (grad(rho c^2 e) + g) / rho,   de/dt = div v,
/// with second-order centered differences, e pinned to zero on boundary nodes
/// (traction-free) and zero ghost values outside the domain.
void rhs(const StateVector& state, const Medium& medium, const Grid& grid, double t,
         const std::vector<SourceSpec>& sources, StateVector& out);

/// One-step RK4 integrator with preallocated work buffers. forward_solve and
/// checkpoint replay share this type so recomputation is bit-identical.
class WaveStepper {
 public:
  WaveStepper(const Field& wavespeed, const ForwardConfig& config);

  /// Advance z from step k to k+1, emitting the four stage states.
  void step(StateVector& z, int k, const StageSink& on_stage);

  const Medium& medium() const { return medium_; }

 private:
  const ForwardConfig& config_;
  Medium medium_;
  StateVector stage_, k1_, k2_, k3_, k4_;
};

struct ForwardResult {
  Observations obs;
  StateVector final_state;
};

/// Integrates the wave system with classical RK4 from the configured initial
/// conditions, submitting every RK stage state to `store` and sampling the
/// velocity field at the receivers after each step.
ForwardResult forward_solve(const Field& wavespeed, const ForwardConfig& config,
                            TrajectoryStore& store);

/// Discrete energy sum(rho |v|^2 + rho c^2 e^2) over all nodes.
double discrete_energy(const StateVector& state, const Medium& medium);

}  // namespace aeml
