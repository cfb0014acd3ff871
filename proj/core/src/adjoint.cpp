#include "aeml/adjoint.hpp"

#include <cmath>

namespace aeml {

namespace {

// out = a*x + b*y (elementwise over whole state vectors)
void lincomb(StateVector& out, double a, const StateVector& x, double b, const StateVector& y) {
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a * x.data[i] + b * y.data[i];
}

void inject_obs(StateVector& lam, std::span<const double> w, const std::vector<int>& receivers,
                int dim) {
  for (std::size_t r = 0; r < receivers.size(); ++r)
    for (int a = 0; a < dim; ++a) lam.velocity(a)[receivers[r]] += w[r * dim + a];
}

/// Shared stencil kernels for the adjoint sweeps. All operators are the exact
/// transposes of the centered-difference blocks used by rhs().
struct AdjointKernels {
  const Grid& grid;
  const Medium& med;
  Field q;  // adjoint-divergence scratch, e-space
  Field m;  // parameter-tangent scratch

  AdjointKernels(const Grid& g, const Medium& medium)
      : grid(g), med(medium), q(g.node_count(), 0.0), m(g.node_count(), 0.0) {}

  /// q = -div_interior(x_v / rho); zero on boundary rows.
  void adjoint_divergence(const StateVector& x) {
    const int nx = grid.nodes[0];
    const int ny = grid.nodes[1];
    const double inv2h = 1.0 / (2.0 * grid.spacing);
    const auto& rho = med.density;
    if (grid.dim == 1) {
      const auto vx = x.velocity(0);
      q[0] = 0.0;
      q[nx - 1] = 0.0;
      for (int i = 1; i < nx - 1; ++i)
        q[i] = -(vx[i + 1] / rho[i + 1] - vx[i - 1] / rho[i - 1]) * inv2h;
    } else {
      const auto vx = x.velocity(0);
      const auto vy = x.velocity(1);
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
          const int i = grid.index(ix, iy);
          if (ix == 0 || ix == nx - 1 || iy == 0 || iy == ny - 1) {
            q[i] = 0.0;
          } else {
            q[i] = -((vx[i + 1] / rho[i + 1] - vx[i - 1] / rho[i - 1]) +
                     (vy[i + nx] / rho[i + nx] - vy[i - nx] / rho[i - nx])) *
                   inv2h;
          }
        }
    }
  }

  /// out_v_a = -(centered diff of x_e along a, zero ghost). Fills v rows only.
  void transpose_velocity_rows(const StateVector& x, StateVector& out) {
    const int nx = grid.nodes[0];
    const int ny = grid.nodes[1];
    const double inv2h = 1.0 / (2.0 * grid.spacing);
    const auto e = x.dilatation();
    if (grid.dim == 1) {
      auto ovx = out.velocity(0);
      for (int i = 0; i < nx; ++i) {
        const double el = i > 0 ? e[i - 1] : 0.0;
        const double er = i < nx - 1 ? e[i + 1] : 0.0;
        ovx[i] = -(er - el) * inv2h;
      }
    } else {
      auto ovx = out.velocity(0);
      auto ovy = out.velocity(1);
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
          const int i = grid.index(ix, iy);
          const double exl = ix > 0 ? e[i - 1] : 0.0;
          const double exr = ix < nx - 1 ? e[i + 1] : 0.0;
          const double eyl = iy > 0 ? e[i - nx] : 0.0;
          const double eyr = iy < ny - 1 ? e[i + nx] : 0.0;
          ovx[i] = -(exr - exl) * inv2h;
          ovy[i] = -(eyr - eyl) * inv2h;
        }
    }
  }

  /// out = A^T x, using the q computed by the caller for the e rows.
  /// (Aᵀx)_v = -grad(x_e); (Aᵀx)_e = rho c^2 * q(x).
  void transpose_rhs_with_q(const StateVector& x, StateVector& out) {
    transpose_velocity_rows(x, out);
    auto oe = out.dilatation();
    const auto& rho = med.density;
    const auto& c = med.wavespeed;
    for (int i = 0; i < grid.node_count(); ++i) oe[i] = rho[i] * c[i] * c[i] * q[i];
  }

  /// out_v_a += (1/rho) grad_a(2 rho c p .* e_y), zero ghost. v rows only.
  void add_param_tangent(const StateVector& y, const Field& p, StateVector& out) {
    const int nx = grid.nodes[0];
    const int ny = grid.nodes[1];
    const double inv2h = 1.0 / (2.0 * grid.spacing);
    const auto& rho = med.density;
    const auto& c = med.wavespeed;
    const auto e = y.dilatation();
    for (int i = 0; i < grid.node_count(); ++i) m[i] = 2.0 * rho[i] * c[i] * p[i] * e[i];
    if (grid.dim == 1) {
      auto ovx = out.velocity(0);
      for (int i = 0; i < nx; ++i) {
        const double ml = i > 0 ? m[i - 1] : 0.0;
        const double mr = i < nx - 1 ? m[i + 1] : 0.0;
        ovx[i] += (mr - ml) * inv2h / rho[i];
      }
    } else {
      auto ovx = out.velocity(0);
      auto ovy = out.velocity(1);
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
          const int i = grid.index(ix, iy);
          const double mxl = ix > 0 ? m[i - 1] : 0.0;
          const double mxr = ix < nx - 1 ? m[i + 1] : 0.0;
          const double myl = iy > 0 ? m[i - nx] : 0.0;
          const double myr = iy < ny - 1 ? m[i + nx] : 0.0;
          ovx[i] += (mxr - mxl) * inv2h / rho[i];
          ovy[i] += (myr - myl) * inv2h / rho[i];
        }
    }
  }
};

}  // namespace

GradientResult misfit_and_gradient(const Field& u, const Objective& obj, TrajectoryStore& store) {
  const int T = obj.config.time.steps;
  const double inv_s2 = 1.0 / (obj.noise_sigma * obj.noise_sigma);

  const StoreStats before = store.stats();
  GradientResult res;

  ForwardResult fwd = forward_solve(u, obj.config, store);
  res.obs = std::move(fwd.obs);
  if (res.obs.data.size() != obj.data.data.size())
    throw ShapeError("observed data does not match forward observations");

  Observations weights = Observations::zeros(res.obs.steps, res.obs.receivers, res.obs.dim);
  double misfit = 0.0;
  for (std::size_t i = 0; i < res.obs.data.size(); ++i) {
    const double r = res.obs.data[i] - obj.data.data[i];
    misfit += r * r;
    weights.data[i] = r * inv_s2;
  }
  res.misfit = 0.5 * misfit * inv_s2;

  res.gradient = apply_adjoint_pto(u, weights, obj, store);
  if (obj.reg) {
    res.reg = obj.reg->value(u);
    Field gr = obj.reg->gradient(u);
    axpy(1.0, gr, res.gradient);
  }
  res.objective = res.misfit + res.reg;

  const StoreStats after = store.stats();
  res.counter.forward_sweeps = 1;
  res.counter.adjoint_sweeps = 1;
  res.counter.steps_per_sweep = T;
  res.counter.recompute_steps = after.recompute_steps - before.recompute_steps;
  res.counter.compress_calls = after.compress_calls - before.compress_calls;
  res.counter.decompress_calls = after.decompress_calls - before.decompress_calls;
  return res;
}

Field apply_adjoint_pto(const Field& u, const Observations& weights, const Objective& obj,
                        TrajectoryStore& fwd_store) {
  const Grid& grid = obj.config.grid;
  const int T = obj.config.time.steps;
  const double dt = obj.config.time.dt;

  Medium med;
  med.density = obj.config.density;
  med.wavespeed = u;
  med.validate(grid);
  AdjointKernels K(grid, med);

  StateVector lam = StateVector::zeros(grid);
  StateVector lam_acc = StateVector::zeros(grid);
  StateVector kbar = StateVector::zeros(grid);
  StateVector ybar = StateVector::zeros(grid);
  StateVector ystage = StateVector::zeros(grid);
  Field grad(grid.node_count(), 0.0);

  inject_obs(lam, weights.row(T - 1), obj.config.receivers, grid.dim);

  const int stage_order[4] = {3, 2, 1, 0};
  const double lam_coef[4] = {dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0};  // for stages 3,2,1,0
  const double chain_coef[4] = {0.0, dt, dt / 2.0, dt / 2.0};

  const auto& rho = med.density;
  const auto& c = med.wavespeed;

  for (int k = T - 1; k >= 0; --k) {
    lam_acc.fill(0.0);
    for (int rj = 0; rj < 4; ++rj) {
      const int stage = stage_order[rj];
      if (rj == 0)
        lincomb(kbar, lam_coef[rj], lam, 0.0, lam);
      else
        lincomb(kbar, lam_coef[rj], lam, chain_coef[rj], ybar);

      fwd_store.get({k, stage}, ystage);

      // Parameter-gradient accumulation: 2 rho c e_y .* q(kbar)
      K.adjoint_divergence(kbar);
      const auto ey = ystage.dilatation();
      for (int i = 0; i < grid.node_count(); ++i)
        grad[i] += 2.0 * rho[i] * c[i] * ey[i] * K.q[i];

      K.transpose_rhs_with_q(kbar, ybar);
      for (std::size_t i = 0; i < lam_acc.size(); ++i) lam_acc.data[i] += ybar.data[i];
    }
    for (std::size_t i = 0; i < lam.size(); ++i) lam.data[i] += lam_acc.data[i];
    if (k >= 1) inject_obs(lam, weights.row(k - 1), obj.config.receivers, grid.dim);
  }
  return grad;
}

Observations apply_linearized_pto(const Field& u, const Field& dir, const Objective& obj,
                                  TrajectoryStore& fwd_store, FullStore* incfwd_store) {
  const Grid& grid = obj.config.grid;
  const int T = obj.config.time.steps;
  const double dt = obj.config.time.dt;

  Medium med;
  med.density = obj.config.density;
  med.wavespeed = u;
  med.validate(grid);
  AdjointKernels K(grid, med);

  if (incfwd_store) incfwd_store->begin_sweep(T, nullptr);

  StateVector dz = StateVector::zeros(grid);
  StateVector dy = StateVector::zeros(grid);
  StateVector ystage = StateVector::zeros(grid);
  StateVector dk[4] = {dz, dz, dz, dz};
  const std::vector<SourceSpec> no_sources;

  const int R = static_cast<int>(obj.config.receivers.size());
  Observations dobs = Observations::zeros(T, R, grid.dim);

  for (int k = 0; k < T; ++k) {
    for (int j = 0; j < 4; ++j) {
      if (j == 0)
        dy = dz;
      else if (j < 3)
        lincomb(dy, 1.0, dz, 0.5 * dt, dk[j - 1]);
      else
        lincomb(dy, 1.0, dz, dt, dk[2]);
      if (incfwd_store) incfwd_store->put({k, j}, dy);

      // dk_j = A dy + (dA/du dir) y_j
      rhs(dy, med, grid, 0.0, no_sources, dk[j]);
      fwd_store.get({k, j}, ystage);
      K.add_param_tangent(ystage, dir, dk[j]);
    }
    for (std::size_t i = 0; i < dz.size(); ++i)
      dz.data[i] += dt / 6.0 * (dk[0].data[i] + 2.0 * dk[1].data[i] + 2.0 * dk[2].data[i] +
                                dk[3].data[i]);
    auto row = dobs.row(k);
    for (int r = 0; r < R; ++r)
      for (int a = 0; a < grid.dim; ++a)
        row[std::size_t(r) * grid.dim + a] = dz.velocity(a)[obj.config.receivers[r]];
  }
  if (incfwd_store) incfwd_store->finish_sweep();
  return dobs;
}

HvpResult hessian_vector(const Field& u, const Field& dir, const Objective& obj,
                         TrajectoryStore& fwd_store, FullStore& incfwd_store,
                         const Observations& fwd_obs) {
  const Grid& grid = obj.config.grid;
  const int T = obj.config.time.steps;
  const double dt = obj.config.time.dt;
  const double inv_s2 = 1.0 / (obj.noise_sigma * obj.noise_sigma);

  if (!fwd_store.sweep_complete() || !fwd_store.contains({T - 1, 3}))
    throw OrderingError("hessian_vector called before misfit_and_gradient populated the store");

  const StoreStats before = fwd_store.stats();

  // Incremental forward sweep (always fully stored).
  Observations dobs = apply_linearized_pto(u, dir, obj, fwd_store, &incfwd_store);

  // Residual weights for the adjoint and its derivative for the incremental adjoint.
  Observations r_w = Observations::zeros(T, dobs.receivers, dobs.dim);
  Observations d_w = Observations::zeros(T, dobs.receivers, dobs.dim);
  for (std::size_t i = 0; i < dobs.data.size(); ++i) {
    r_w.data[i] = (fwd_obs.data[i] - obj.data.data[i]) * inv_s2;
    d_w.data[i] = dobs.data[i] * inv_s2;
  }

  Medium med;
  med.density = obj.config.density;
  med.wavespeed = u;
  med.validate(grid);
  AdjointKernels K(grid, med);
  const auto& rho = med.density;
  const auto& c = med.wavespeed;

  StateVector lam = StateVector::zeros(grid);
  StateVector dlam = StateVector::zeros(grid);
  StateVector lam_acc = StateVector::zeros(grid);
  StateVector dlam_acc = StateVector::zeros(grid);
  StateVector kbar = StateVector::zeros(grid);
  StateVector dkbar = StateVector::zeros(grid);
  StateVector ybar = StateVector::zeros(grid);
  StateVector dybar = StateVector::zeros(grid);
  StateVector ystage = StateVector::zeros(grid);
  StateVector dystage = StateVector::zeros(grid);
  Field q1(grid.node_count());
  Field hacc(grid.node_count(), 0.0);

  inject_obs(lam, r_w.row(T - 1), obj.config.receivers, grid.dim);
  inject_obs(dlam, d_w.row(T - 1), obj.config.receivers, grid.dim);

  const int stage_order[4] = {3, 2, 1, 0};
  const double lam_coef[4] = {dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0};
  const double chain_coef[4] = {0.0, dt, dt / 2.0, dt / 2.0};

  for (int k = T - 1; k >= 0; --k) {
    lam_acc.fill(0.0);
    dlam_acc.fill(0.0);
    for (int rj = 0; rj < 4; ++rj) {
      const int stage = stage_order[rj];
      if (rj == 0) {
        lincomb(kbar, lam_coef[rj], lam, 0.0, lam);
        lincomb(dkbar, lam_coef[rj], dlam, 0.0, dlam);
      } else {
        lincomb(kbar, lam_coef[rj], lam, chain_coef[rj], ybar);
        lincomb(dkbar, lam_coef[rj], dlam, chain_coef[rj], dybar);
      }

      fwd_store.get({k, stage}, ystage);
      incfwd_store.get({k, stage}, dystage);

      // q1 = adjdiv(kbar): feeds three terms below.
      K.adjoint_divergence(kbar);
      q1 = K.q;
      const auto ey = ystage.dilatation();
      const auto dey = dystage.dilatation();

      // ybar = A^T kbar
      K.transpose_rhs_with_q(kbar, ybar);

      // dybar = A^T dkbar + (dA/du dir)^T kbar
      K.adjoint_divergence(dkbar);  // now K.q = q2
      K.transpose_rhs_with_q(dkbar, dybar);
      {
        auto de = dybar.dilatation();
        for (int i = 0; i < grid.node_count(); ++i)
          de[i] += 2.0 * rho[i] * c[i] * dir[i] * q1[i];
      }

      // Hessian accumulation: d/du of [2 rho c e_y q(kbar)] in direction dir.
      for (int i = 0; i < grid.node_count(); ++i)
        hacc[i] += 2.0 * rho[i] *
                   ((dir[i] * ey[i] + c[i] * dey[i]) * q1[i] + c[i] * ey[i] * K.q[i]);

      for (std::size_t i = 0; i < lam_acc.size(); ++i) {
        lam_acc.data[i] += ybar.data[i];
        dlam_acc.data[i] += dybar.data[i];
      }
    }
    for (std::size_t i = 0; i < lam.size(); ++i) {
      lam.data[i] += lam_acc.data[i];
      dlam.data[i] += dlam_acc.data[i];
    }
    if (k >= 1) {
      inject_obs(lam, r_w.row(k - 1), obj.config.receivers, grid.dim);
      inject_obs(dlam, d_w.row(k - 1), obj.config.receivers, grid.dim);
    }
  }

  HvpResult res;
  res.hvp = std::move(hacc);
  if (obj.reg) {
    Field hr = obj.reg->hessian_vec(dir);
    axpy(1.0, hr, res.hvp);
  }

  const StoreStats after = fwd_store.stats();
  res.counter.incfwd_sweeps = 1;
  res.counter.incadj_sweeps = 1;
  res.counter.steps_per_sweep = T;
  res.counter.recompute_steps = after.recompute_steps - before.recompute_steps;
  res.counter.compress_calls = after.compress_calls - before.compress_calls;
  res.counter.decompress_calls = after.decompress_calls - before.decompress_calls;
  return res;
}

}  // namespace aeml
