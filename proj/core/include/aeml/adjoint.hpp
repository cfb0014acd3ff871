#pragma once

#include <cstdint>

#include "aeml/prior.hpp"
#include "aeml/store.hpp"
#include "aeml/wave.hpp"

namespace aeml {

/// PDE-solve accounting. Sweeps are whole T-step integrations; recompute is
/// tracked in integer steps so "exactly one extra sweep" is an exact integer
/// comparison regardless of the checkpoint interval.
struct SweepCounter {
  int forward_sweeps = 0;
  int adjoint_sweeps = 0;
  int incfwd_sweeps = 0;
  int incadj_sweeps = 0;
  std::int64_t recompute_steps = 0;
  int steps_per_sweep = 0;
  std::int64_t compress_calls = 0;
  std::int64_t decompress_calls = 0;

  double recompute_sweeps() const {
    return steps_per_sweep > 0 ? double(recompute_steps) / double(steps_per_sweep) : 0.0;
  }

  SweepCounter& operator+=(const SweepCounter& o) {
    forward_sweeps += o.forward_sweeps;
    adjoint_sweeps += o.adjoint_sweeps;
    incfwd_sweeps += o.incfwd_sweeps;
    incadj_sweeps += o.incadj_sweeps;
    recompute_steps += o.recompute_steps;
    if (steps_per_sweep == 0) steps_per_sweep = o.steps_per_sweep;
    compress_calls += o.compress_calls;
    decompress_calls += o.decompress_calls;
    return *this;
  }
};

/// Regularization term R(u) added to the data misfit; quadratic for both the
/// full prior and the DIAS-projected prior, so the Hessian action is constant.
class Regularizer {
 public:
  virtual ~Regularizer() = default;
  virtual double value(const Field& u) const = 0;
  virtual Field gradient(const Field& u) const = 0;
  virtual Field hessian_vec(const Field& p) const = 0;
};

class PriorRegularizer : public Regularizer {
 public:
  explicit PriorRegularizer(const BiLaplacianPrior& prior) : prior_(&prior) {}
  double value(const Field& u) const override { return prior_->energy(u); }
  Field gradient(const Field& u) const override { return prior_->energy_gradient(u); }
  Field hessian_vec(const Field& p) const override { return prior_->apply_precision(p); }

 private:
  const BiLaplacianPrior* prior_;
};

/// J(u) = 0.5 ||F(u) - d||^2 / sigma^2 + R(u)
struct Objective {
  ForwardConfig config;
  Observations data;
  double noise_sigma = 1.0;
  const Regularizer* reg = nullptr;  // nullptr = misfit only
};

struct GradientResult {
  double objective = 0.0;
  double misfit = 0.0;
  double reg = 0.0;
  Field gradient;
  Observations obs;
  SweepCounter counter;
};

/// Forward solve through `store` followed by the discrete adjoint of the RK4
/// scheme, consuming forward stage states from the store in reverse order.
/// Exact gradient of the discrete objective up to store reconstruction error.
GradientResult misfit_and_gradient(const Field& u, const Objective& obj, TrajectoryStore& store);

struct HvpResult {
  Field hvp;
  SweepCounter counter;
};

/// Full second-order-adjoint Hessian action at the point of the last gradient
/// evaluation: incremental forward sweep (reads forward states), then a fused
/// backward sweep advancing the adjoint and incremental adjoint together
/// (reads forward and incremental-forward states). The incremental trajectory
/// always lives in a FullStore. fwd_obs are the observations returned by
/// misfit_and_gradient for the same u and store.
HvpResult hessian_vector(const Field& u, const Field& dir, const Objective& obj,
                         TrajectoryStore& fwd_store, FullStore& incfwd_store,
                         const Observations& fwd_obs);

// Building blocks, exposed for the adjoint-identity oracle and for DIAS
// gradient sampling.

/// Tangent (linearized) parameter-to-observable map: d/de F(u + e dir) at 0.
/// Reads forward stage states from fwd_store; optionally records the
/// incremental stage states into incfwd_store.
Observations apply_linearized_pto(const Field& u, const Field& dir, const Objective& obj,
                                  TrajectoryStore& fwd_store, FullStore* incfwd_store);

/// Adjoint of the linearized map applied to data-space weights (already
/// scaled): returns F'(u)^T w. The misfit gradient is this at w = r / sigma^2.
Field apply_adjoint_pto(const Field& u, const Observations& weights, const Objective& obj,
                        TrajectoryStore& fwd_store);

}  // namespace aeml
