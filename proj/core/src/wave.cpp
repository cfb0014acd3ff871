#include "aeml/wave.hpp"

#include <algorithm>
#include <cmath>

namespace aeml {

double cfl_dt(const Grid& grid, const Medium& medium, double safety) {
  grid.validate();
  medium.validate(grid);
  if (!(safety > 0.0) || safety > 1.0) throw ConfigError("cfl safety must lie in (0, 1]");
  const double cmax = *std::max_element(medium.wavespeed.begin(), medium.wavespeed.end());
  return safety * grid.spacing / (std::sqrt(double(grid.dim)) * cmax);
}

namespace {

void add_sources(const Grid& grid, const Medium& medium, double t,
                 const std::vector<SourceSpec>& sources, StateVector& out) {
  const double h = grid.spacing;
  for (const SourceSpec& src : sources) {
    const double tf = src.time_factor(t);
    if (src.kind == SourceKind::Ricker) {
      // g = rho * spatial-gaussian * ricker(t) * dir; the rho cancels in g/rho.
      const double norm = 1.0 / (std::sqrt(2.0 * M_PI) * src.sigma_x);
      const double inv2s2 = 1.0 / (2.0 * src.sigma_x * src.sigma_x);
      for (int iy = 0; iy < grid.nodes[1]; ++iy) {
        const double dy = grid.dim == 2 ? iy * h - src.location[1] : 0.0;
        for (int ix = 0; ix < grid.nodes[0]; ++ix) {
          const double dx = ix * h - src.location[0];
          const double r2 = dx * dx + dy * dy;
          const double amp = norm * std::exp(-r2 * inv2s2) * tf;
          const int i = grid.index(ix, iy);
          for (int a = 0; a < grid.dim; ++a) out.velocity(a)[i] += amp * src.direction[a];
        }
      }
    } else {
      // Discrete delta on the nearest node, scaled by 1/h^d; acts on every
      // velocity component. g/rho keeps the density factor.
      const int i = grid.nearest_node(src.location[0], src.location[1]);
      const double amp = tf / (std::pow(h, grid.dim) * medium.density[i]);
      for (int a = 0; a < grid.dim; ++a) out.velocity(a)[i] += amp;
    }
  }
}

}  // namespace

void rhs(const StateVector& state, const Medium& medium, const Grid& grid, double t,
         const std::vector<SourceSpec>& sources, StateVector& out) {
  if (state.dim != grid.dim || state.nodes != grid.node_count())
    throw ShapeError("state does not match grid");
  if (out.dim != state.dim || out.nodes != state.nodes) out = StateVector::zeros(grid);

  const int nx = grid.nodes[0];
  const int ny = grid.nodes[1];
  const double inv2h = 1.0 / (2.0 * grid.spacing);
  const auto& rho = medium.density;
  const auto& c = medium.wavespeed;
  const auto e = state.dilatation();

  // w = rho c^2 e; zero on boundary nodes by the traction-free constraint and
  // treated as zero outside the domain.
  static thread_local Field w;
  w.resize(std::size_t(state.nodes));
  for (int i = 0; i < state.nodes; ++i) w[i] = rho[i] * c[i] * c[i] * e[i];

  if (grid.dim == 1) {
    const auto v = state.velocity(0);
    auto dv = out.velocity(0);
    auto de = out.dilatation();
    for (int i = 0; i < nx; ++i) {
      const double wl = i > 0 ? w[i - 1] : 0.0;
      const double wr = i < nx - 1 ? w[i + 1] : 0.0;
      dv[i] = (wr - wl) * inv2h / rho[i];
      de[i] = (i > 0 && i < nx - 1) ? (v[i + 1] - v[i - 1]) * inv2h : 0.0;
    }
  } else {
    const auto vx = state.velocity(0);
    const auto vy = state.velocity(1);
    auto dvx = out.velocity(0);
    auto dvy = out.velocity(1);
    auto de = out.dilatation();
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const int i = grid.index(ix, iy);
        const double wxl = ix > 0 ? w[i - 1] : 0.0;
        const double wxr = ix < nx - 1 ? w[i + 1] : 0.0;
        const double wyl = iy > 0 ? w[i - nx] : 0.0;
        const double wyr = iy < ny - 1 ? w[i + nx] : 0.0;
        dvx[i] = (wxr - wxl) * inv2h / rho[i];
        dvy[i] = (wyr - wyl) * inv2h / rho[i];
        if (ix > 0 && ix < nx - 1 && iy > 0 && iy < ny - 1) {
          de[i] = ((vx[i + 1] - vx[i - 1]) + (vy[i + nx] - vy[i - nx])) * inv2h;
        } else {
          de[i] = 0.0;
        }
      }
    }
  }

  add_sources(grid, medium, t, sources, out);
}

WaveStepper::WaveStepper(const Field& wavespeed, const ForwardConfig& config) : config_(config) {
  medium_.density = config.density;
  medium_.wavespeed = wavespeed;
  medium_.validate(config.grid);
  stage_ = StateVector::zeros(config.grid);
  k1_ = stage_;
  k2_ = stage_;
  k3_ = stage_;
  k4_ = stage_;
}

void WaveStepper::step(StateVector& z, int k, const StageSink& on_stage) {
  const Grid& grid = config_.grid;
  const double dt = config_.time.dt;
  const double t0 = dt * k;
  const std::size_t m = z.size();

  on_stage(0, z);
  rhs(z, medium_, grid, t0, config_.sources, k1_);

  for (std::size_t i = 0; i < m; ++i) stage_.data[i] = z.data[i] + 0.5 * dt * k1_.data[i];
  on_stage(1, stage_);
  rhs(stage_, medium_, grid, t0 + 0.5 * dt, config_.sources, k2_);

  for (std::size_t i = 0; i < m; ++i) stage_.data[i] = z.data[i] + 0.5 * dt * k2_.data[i];
  on_stage(2, stage_);
  rhs(stage_, medium_, grid, t0 + 0.5 * dt, config_.sources, k3_);

  for (std::size_t i = 0; i < m; ++i) stage_.data[i] = z.data[i] + dt * k3_.data[i];
  on_stage(3, stage_);
  rhs(stage_, medium_, grid, t0 + dt, config_.sources, k4_);

  const double w = dt / 6.0;
  for (std::size_t i = 0; i < m; ++i)
    z.data[i] += w * (k1_.data[i] + 2.0 * k2_.data[i] + 2.0 * k3_.data[i] + k4_.data[i]);
}

ForwardResult forward_solve(const Field& wavespeed, const ForwardConfig& config,
                            TrajectoryStore& store) {
  const Grid& grid = config.grid;
  grid.validate();
  if (config.time.steps <= 0 || !(config.time.dt > 0.0))
    throw ConfigError("time axis needs positive dt and step count");
  for (int r : config.receivers)
    if (r < 0 || r >= grid.node_count()) throw ConfigError("receiver node out of range");

  auto stepper = std::make_shared<WaveStepper>(wavespeed, config);
  const int T = config.time.steps;
  store.begin_sweep(T, [stepper](StateVector& z, int step, const StageSink& sink) {
    stepper->step(z, step, sink);
  });

  StateVector z = config.initial_state.value_or(StateVector::zeros(grid));
  if (z.dim != grid.dim || z.nodes != grid.node_count())
    throw ShapeError("initial state does not match grid");
  z.pin_boundary_dilatation(grid);

  const int R = static_cast<int>(config.receivers.size());
  Observations obs = Observations::zeros(T, R, grid.dim);

  for (int k = 0; k < T; ++k) {
    stepper->step(z, k, [&](int stage, const StateVector& y) { store.put({k, stage}, y); });
    if (!all_finite(z.data))
      throw DivergenceError("forward solve diverged at step " + std::to_string(k), k);
    auto row = obs.row(k);
    for (int r = 0; r < R; ++r)
      for (int a = 0; a < grid.dim; ++a) row[std::size_t(r) * grid.dim + a] = z.velocity(a)[config.receivers[r]];
  }
  store.finish_sweep();
  return {std::move(obs), std::move(z)};
}

double discrete_energy(const StateVector& state, const Medium& medium) {
  double en = 0.0;
  for (int a = 0; a < state.dim; ++a) {
    auto v = state.velocity(a);
    for (int i = 0; i < state.nodes; ++i) en += medium.density[i] * v[i] * v[i];
  }
  auto e = state.dilatation();
  for (int i = 0; i < state.nodes; ++i) {
    const double cc = medium.wavespeed[i];
    en += medium.density[i] * cc * cc * e[i] * e[i];
  }
  return en;
}

}  // namespace aeml
