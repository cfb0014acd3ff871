#pragma once

#include <functional>
#include <memory>

#include "aeml/adjoint.hpp"

namespace aeml {

/// What the Newton-CG loop needs from a problem. gradient() must retain
/// whatever state hessian_vec() needs at the same point.
class ObjectiveModel {
 public:
  virtual ~ObjectiveModel() = default;
  virtual int dim() const = 0;
  virtual GradientResult gradient(const Field& u) = 0;
  virtual Field hessian_vec(const Field& p) = 0;
  virtual double value(const Field& u) = 0;
  virtual void project(Field&) const {}
  /// Sweep counters accumulated since the last snapshot (zero for toy models).
  virtual SweepCounter take_counter() { return {}; }
};

struct NewtonConfig {
  int max_newton_iters = 8;
  int cg_max_iters = 200;
  double grad_tol = 1e-6;      // relative to ||g0||
  double grad_tol_abs = 0.0;   // optional absolute floor on top of the relative test
  double armijo_c1 = 1e-4;     // must lie in (0, 0.5)
  double backtrack = 0.5;
  int max_backtracks = 30;
  // Eisenstat-Walker choice 2 forcing, capped at forcing_max.
  double forcing_gamma = 0.9;
  double forcing_alpha = 2.0;
  double forcing_max = 0.5;
  double forcing_min = 1e-8;
};

struct NewtonIterRow {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step_len = 0.0;
  int cg_iters = 0;
  SweepCounter counter;
};

struct NewtonResult {
  Field u;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  bool stagnated = false;
  std::vector<NewtonIterRow> history;
};

/// Inexact Newton with CG on the full Hessian (Steihaug negative-curvature
/// exit) and Armijo backtracking. J decreases monotonically across accepted
/// steps.
NewtonResult newton_cg_minimize(ObjectiveModel& model, const Field& u_init,
                                const NewtonConfig& cfg);

/// FWI objective bound to a trajectory-store strategy. The forward trajectory
/// is compressed once per Newton iteration (by the gradient) and reused by
/// every CG Hessian-vector call; the incremental trajectory is always fully
/// stored.
class FwiModel : public ObjectiveModel {
 public:
  FwiModel(const Objective& obj, StoreFactory factory, double project_floor = 0.0);

  int dim() const override;
  GradientResult gradient(const Field& u) override;
  Field hessian_vec(const Field& p) override;
  double value(const Field& u) override;
  void project(Field& u) const override;
  SweepCounter take_counter() override;

  const TrajectoryStore* forward_store() const { return fwd_store_.get(); }

 private:
  const Objective& obj_;
  StoreFactory factory_;
  double project_floor_;
  std::unique_ptr<TrajectoryStore> fwd_store_;
  Observations last_obs_;
  Field u_at_gradient_;
  SweepCounter pending_;
};

/// MAP solve of the regularized objective under the given storage strategy.
NewtonResult solve_map(const Objective& obj, const Field& u_init, StoreFactory factory,
                       const NewtonConfig& cfg, double project_floor = 0.0);

}  // namespace aeml
