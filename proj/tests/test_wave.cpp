#include <doctest.h>

#include <cmath>

#include "aeml/codec_store.hpp"
#include "aeml/store.hpp"
#include "aeml/wave.hpp"
#include "test_utils.hpp"

using namespace aeml;

TEST_CASE("cfl_dt follows safety * h / (sqrt(d) max c)") {
  Grid g1 = Grid::make_1d(5, 0.01, 1);
  Medium m1 = Medium::uniform(g1, 1.0, 1.0);
  CHECK(cfl_dt(g1, m1, 0.5) == doctest::Approx(0.005).epsilon(1e-14));

  Grid g2 = Grid::make_2d(4, 4, 0.01, 2, 2);
  Medium m2 = Medium::uniform(g2, 1.0, 2.0);
  CHECK(cfl_dt(g2, m2, 0.5) == doctest::Approx(0.005 / (2.0 * std::sqrt(2.0))).epsilon(1e-14));
}

TEST_CASE("cfl_dt rejects a dead medium") {
  Grid g = Grid::make_1d(5, 0.01, 1);
  Medium m = Medium::uniform(g, 1.0, 1.0);
  m.wavespeed[2] = 0.0;
  CHECK_THROWS_AS(cfl_dt(g, m, 0.5), InvalidMediumError);
}

TEST_CASE("rhs: equilibrium stays at zero") {
  Grid g = Grid::make_2d(6, 6, 0.1, 6, 6);
  Medium m = Medium::uniform(g, 1.2, 0.8);
  StateVector s = StateVector::zeros(g);
  StateVector out = StateVector::zeros(g);
  rhs(s, m, g, 0.3, {}, out);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("rhs: divergence of a constant velocity field vanishes") {
  Grid g = Grid::make_2d(8, 8, 0.05, 8, 8);
  Medium m = Medium::uniform(g, 1.0, 1.0);
  StateVector s = StateVector::zeros(g);
  for (int a = 0; a < 2; ++a)
    for (auto& v : s.velocity(a)) v = 1.0;
  StateVector out = StateVector::zeros(g);
  rhs(s, m, g, 0.0, {}, out);
  for (double v : out.dilatation()) CHECK(v == 0.0);
}

TEST_CASE("rhs: 1D hat dilatation reproduces the hand-computed stencil") {
  // 5 nodes, h = 0.25, rho = c = 1, e = [0, 0.5, 1, 0.5, 0]:
  // dv_i = (e_{i+1} - e_{i-1}) / (2h) with zero ghosts -> [1, 2, 0, -2, -1].
  Grid g = Grid::make_1d(5, 0.25, 5);
  Medium m = Medium::uniform(g, 1.0, 1.0);
  StateVector s = StateVector::zeros(g);
  auto e = s.dilatation();
  e[1] = 0.5;
  e[2] = 1.0;
  e[3] = 0.5;
  StateVector out = StateVector::zeros(g);
  rhs(s, m, g, 0.0, {}, out);
  const double expected[5] = {1.0, 2.0, 0.0, -2.0, -1.0};
  for (int i = 0; i < 5; ++i) CHECK(out.velocity(0)[i] == doctest::Approx(expected[i]).epsilon(1e-14));
  for (double v : out.dilatation()) CHECK(v == 0.0);
}

TEST_CASE("rhs rejects mismatched state") {
  Grid g = Grid::make_2d(6, 6, 0.1, 6, 6);
  Grid g2 = Grid::make_2d(8, 8, 0.1, 8, 8);
  Medium m = Medium::uniform(g, 1.0, 1.0);
  StateVector s = StateVector::zeros(g2);
  StateVector out = StateVector::zeros(g);
  CHECK_THROWS_AS(rhs(s, m, g, 0.0, {}, out), ShapeError);
}

namespace {

ForwardConfig ricker_1d_config(int n, int steps) {
  ForwardConfig fc;
  fc.grid = Grid::make_1d(n, 1.0 / (n - 1), n);
  fc.density.assign(n, 1.0);
  Medium m = Medium::uniform(fc.grid, 1.0, 1.0);
  fc.time.dt = cfl_dt(fc.grid, m, 0.5);
  fc.time.steps = steps;
  SourceSpec src;
  src.kind = SourceKind::Ricker;
  src.location = {0.3, 0.0};
  src.t_center = 0.2;
  src.sigma_t = 0.05;
  src.sigma_x = 0.04;
  src.direction = {1.0, 0.0};
  fc.sources.push_back(src);
  fc.receivers = {fc.grid.nearest_node(0.8)};
  return fc;
}

}  // namespace

TEST_CASE("forward_solve: no sources, quiescent start -> all zero") {
  ForwardConfig fc = ricker_1d_config(32, 40);
  fc.sources.clear();
  Field u(32, 1.0);
  FullStore store;
  ForwardResult res = forward_solve(u, fc, store);
  for (double v : res.obs.data) CHECK(v == 0.0);
  StateVector s = StateVector::zeros(fc.grid);
  store.get({20, 2}, s);
  for (double v : s.data) CHECK(v == 0.0);
}

TEST_CASE("forward_solve: ricker source produces finite nonzero traces") {
  ForwardConfig fc = ricker_1d_config(64, 200);
  Field u(64, 1.0);
  FullStore store;
  ForwardResult res = forward_solve(u, fc, store);
  double energy = 0.0;
  for (double v : res.obs.data) energy += v * v;
  CHECK(energy > 0.0);
  CHECK(std::isfinite(energy));
}

TEST_CASE("forward_solve: observations are bit-identical across store backends") {
  ForwardConfig fc = ricker_1d_config(48, 80);
  Field u(48, 1.0);

  FullStore full;
  Observations ref = forward_solve(u, fc, full).obs;

  CheckpointStore ckpt(8);
  Observations o1 = forward_solve(u, fc, ckpt).obs;
  QuantizerStore quant(fc.grid, 1, Scheme::Space, 1, QuantizerConfig{1e-3, 64});
  Observations o2 = forward_solve(u, fc, quant).obs;
  NullStore null;
  Observations o3 = forward_solve(u, fc, null).obs;

  REQUIRE(o1.data.size() == ref.data.size());
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    CHECK(o1.data[i] == ref.data[i]);
    CHECK(o2.data[i] == ref.data[i]);
    CHECK(o3.data[i] == ref.data[i]);
  }
}

TEST_CASE("discrete reciprocity: swapping point source and receiver") {
  const int n = 96;
  const int steps = 240;
  auto run = [&](double src_x, double rec_x) {
    ForwardConfig fc;
    fc.grid = Grid::make_1d(n, 1.0 / (n - 1), n);
    fc.density.assign(n, 1.7);
    Medium m = Medium::uniform(fc.grid, 1.7, 1.3);
    fc.time.dt = cfl_dt(fc.grid, m, 0.5);
    fc.time.steps = steps;
    SourceSpec src;
    src.kind = SourceKind::Gaussian;
    src.location = {src_x, 0.0};
    src.t_center = 0.15;
    src.sigma_t = 0.04;
    fc.sources.push_back(src);
    fc.receivers = {fc.grid.nearest_node(rec_x)};
    Field u(n, 1.3);
    NullStore store;
    return forward_solve(u, fc, store).obs;
  };
  Observations a = run(0.25, 0.7);
  Observations b = run(0.7, 0.25);
  CHECK(test::rel_err(a.data, b.data) < 1e-8);
}

TEST_CASE("energy stays bounded once the source is quiet") {
  ForwardConfig fc = ricker_1d_config(64, 400);
  fc.sources[0].t_center = 0.1;
  fc.sources[0].sigma_t = 0.02;
  Field u(64, 1.0);
  Medium m = Medium::uniform(fc.grid, 1.0, 1.0);

  FullStore store;
  ForwardResult res = forward_solve(u, fc, store);

  const double cutoff = fc.sources[0].t_center + 5.0 * fc.sources[0].sigma_t;
  const int k0 = static_cast<int>(std::ceil(cutoff / fc.time.dt)) + 1;
  REQUIRE(k0 < fc.time.steps);
  StateVector s = StateVector::zeros(fc.grid);
  store.get({k0, 0}, s);
  const double e0 = discrete_energy(s, m);
  const double e1 = discrete_energy(res.final_state, m);
  CHECK(e0 > 0.0);
  CHECK(e1 <= e0 * 1.01);
}

TEST_CASE("forward_solve reports the diverging timestep") {
  ForwardConfig fc = ricker_1d_config(32, 200);
  fc.time.dt *= 100.0;  // deliberately violate the CFL bound
  Field u(32, 1.0);
  NullStore store;
  try {
    forward_solve(u, fc, store);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 0);
    CHECK(e.step() < 200);
  }
}

TEST_CASE("forward_solve validates receivers and initial state") {
  ForwardConfig fc = ricker_1d_config(32, 10);
  fc.receivers = {99};
  Field u(32, 1.0);
  NullStore store;
  CHECK_THROWS_AS(forward_solve(u, fc, store), ConfigError);

  ForwardConfig fc2 = ricker_1d_config(32, 10);
  fc2.initial_state = StateVector::zeros(Grid::make_1d(16, 0.1, 16));
  NullStore store2;
  CHECK_THROWS_AS(forward_solve(u, fc2, store2), ShapeError);
}
