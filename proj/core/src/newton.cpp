#include "aeml/newton.hpp"

#include <algorithm>
#include <cmath>

namespace aeml {

namespace {

/// CG on the Newton system H s = -g with Steihaug negative-curvature exit.
/// Returns the step and the number of Hessian-vector products.
std::pair<Field, int> cg_solve(ObjectiveModel& model, const Field& g, double eta,
                               const NewtonConfig& cfg) {
  const std::size_t n = g.size();
  Field s(n, 0.0);
  Field r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = -g[i];
  Field d = r;
  double rr = dot(r, r);
  const double gnorm = std::sqrt(rr);
  const double target = eta * gnorm;

  int hvps = 0;
  for (int it = 0; it < cfg.cg_max_iters; ++it) {
    if (std::sqrt(rr) <= target) break;
    Field hd = model.hessian_vec(d);
    ++hvps;
    const double dhd = dot(d, hd);
    if (dhd <= 0.0) {
      // Negative curvature: fall back to steepest descent on the first
      // iteration, otherwise keep the progress made so far.
      if (it == 0)
        for (std::size_t i = 0; i < n; ++i) s[i] = -g[i];
      break;
    }
    const double alpha = rr / dhd;
    axpy(alpha, d, s);
    axpy(-alpha, hd, r);
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) d[i] = r[i] + beta * d[i];
  }
  return {std::move(s), hvps};
}

}  // namespace

NewtonResult newton_cg_minimize(ObjectiveModel& model, const Field& u_init,
                                const NewtonConfig& cfg) {
  if (!(cfg.armijo_c1 > 0.0) || cfg.armijo_c1 >= 0.5)
    throw ConfigError("armijo c1 must lie in (0, 0.5)");

  NewtonResult res;
  res.u = u_init;
  model.project(res.u);

  GradientResult ge = model.gradient(res.u);
  double gnorm = norm2(ge.gradient);
  const double g0norm = gnorm;
  double eta = cfg.forcing_max;
  double prev_gnorm = gnorm;
  double prev_eta = eta;

  auto converged = [&](double gn) {
    const double tol = std::max(cfg.grad_tol * g0norm, cfg.grad_tol_abs);
    return gn <= tol;
  };

  for (int iter = 0; iter < cfg.max_newton_iters; ++iter) {
    if (converged(gnorm)) {
      res.converged = true;
      break;
    }

    if (iter > 0) {
      // Eisenstat-Walker choice 2 with the usual safeguard.
      double e = cfg.forcing_gamma * std::pow(gnorm / prev_gnorm, cfg.forcing_alpha);
      const double guard = cfg.forcing_gamma * std::pow(prev_eta, cfg.forcing_alpha);
      if (guard > 0.1) e = std::max(e, guard);
      eta = std::clamp(e, cfg.forcing_min, cfg.forcing_max);
    }

    auto [step, cg_iters] = cg_solve(model, ge.gradient, eta, cfg);
    double gts = dot(ge.gradient, step);
    if (!(gts < 0.0)) {
      // Not a descent direction (can only happen with a broken model); use -g.
      for (std::size_t i = 0; i < step.size(); ++i) step[i] = -ge.gradient[i];
      gts = dot(ge.gradient, step);
    }

    double t = 1.0;
    bool accepted = false;
    Field u_trial(res.u.size());
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < res.u.size(); ++i) u_trial[i] = res.u[i] + t * step[i];
      model.project(u_trial);
      const double j_trial = model.value(u_trial);
      if (j_trial <= ge.objective + cfg.armijo_c1 * t * gts) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack;
    }
    if (!accepted) {
      res.stagnated = true;
      NewtonIterRow row{iter, ge.objective, gnorm, 0.0, cg_iters, model.take_counter()};
      res.history.push_back(row);
      break;
    }

    res.u = u_trial;
    prev_gnorm = gnorm;
    prev_eta = eta;
    ge = model.gradient(res.u);
    gnorm = norm2(ge.gradient);

    NewtonIterRow row{iter, ge.objective, gnorm, t, cg_iters, model.take_counter()};
    res.history.push_back(row);
  }

  if (converged(gnorm)) res.converged = true;
  res.objective = ge.objective;
  res.grad_norm = gnorm;
  return res;
}

FwiModel::FwiModel(const Objective& obj, StoreFactory factory, double project_floor)
    : obj_(obj), factory_(std::move(factory)), project_floor_(project_floor) {}

int FwiModel::dim() const { return obj_.config.grid.node_count(); }

GradientResult FwiModel::gradient(const Field& u) {
  fwd_store_ = factory_();
  GradientResult ge = misfit_and_gradient(u, obj_, *fwd_store_);
  last_obs_ = ge.obs;
  u_at_gradient_ = u;
  pending_ += ge.counter;
  return ge;
}

Field FwiModel::hessian_vec(const Field& p) {
  if (!fwd_store_) throw OrderingError("hessian_vec called before gradient");
  FullStore incfwd;
  HvpResult hv = hessian_vector(u_at_gradient_, p, obj_, *fwd_store_, incfwd, last_obs_);
  pending_ += hv.counter;
  return std::move(hv.hvp);
}

double FwiModel::value(const Field& u) {
  NullStore scratch;
  ForwardResult fwd = forward_solve(u, obj_.config, scratch);
  const double inv_s2 = 1.0 / (obj_.noise_sigma * obj_.noise_sigma);
  double misfit = 0.0;
  for (std::size_t i = 0; i < fwd.obs.data.size(); ++i) {
    const double r = fwd.obs.data[i] - obj_.data.data[i];
    misfit += r * r;
  }
  SweepCounter c;
  c.forward_sweeps = 1;
  c.steps_per_sweep = obj_.config.time.steps;
  pending_ += c;
  double j = 0.5 * misfit * inv_s2;
  if (obj_.reg) j += obj_.reg->value(u);
  return j;
}

void FwiModel::project(Field& u) const {
  if (project_floor_ > 0.0)
    for (double& v : u) v = std::max(v, project_floor_);
}

SweepCounter FwiModel::take_counter() {
  SweepCounter c = pending_;
  pending_ = {};
  return c;
}

NewtonResult solve_map(const Objective& obj, const Field& u_init, StoreFactory factory,
                       const NewtonConfig& cfg, double project_floor) {
  FwiModel model(obj, std::move(factory), project_floor);
  return newton_cg_minimize(model, u_init, cfg);
}

}  // namespace aeml
