#include <doctest.h>

#include <random>

#include "aeml/prior.hpp"
#include "test_utils.hpp"

using namespace aeml;

namespace {

/// Dense assembly of the single operator A by probing with unit vectors.
std::vector<Field> assemble_operator(const BiLaplacianPrior& prior, int n) {
  std::vector<Field> cols(n);
  Field e(n, 0.0), out(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    prior.apply_operator(e, out);
    cols[j] = out;
    e[j] = 0.0;
  }
  return cols;
}

}  // namespace

TEST_CASE("apply_precision: zero input, theta->0 limit") {
  Grid g = Grid::make_2d(8, 8, 0.125, 8, 8);
  const int n = g.node_count();

  BiLaplacianPrior p0(g, 3.0, 0.0, Field(n, 1.0), 0.1);
  std::mt19937_64 rng(7);
  Field w = test::random_field(n, rng);
  Field pz = p0.apply_precision(Field(n, 0.0));
  for (double v : pz) CHECK(v == 0.0);

  // theta = 0: A = alpha I, precision = alpha^2 I.
  Field out = p0.apply_precision(w);
  for (int i = 0; i < n; ++i) CHECK(out[i] == doctest::Approx(9.0 * w[i]).epsilon(1e-14));
}

TEST_CASE("apply_precision is symmetric (dense-assembly cross-check)") {
  Grid g = Grid::make_2d(16, 16, 1.0 / 15, 16, 16);
  const int n = g.node_count();
  BiLaplacianPrior prior(g, 2.0, 0.05, Field(n, 1.0), 0.1);

  std::mt19937_64 rng(11);
  Field w = test::random_field(n, rng);
  Field z = test::random_field(n, rng);
  const double wz = dot(w, prior.apply_precision(z));
  const double zw = dot(z, prior.apply_precision(w));
  CHECK(std::fabs(wz - zw) / std::fabs(wz) < 1e-12);

  // The assembled single operator must be symmetric entrywise too.
  auto cols = assemble_operator(prior, n);
  double max_asym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      max_asym = std::max(max_asym, std::fabs(cols[j][i] - cols[i][j]));
  CHECK(max_asym == 0.0);
}

TEST_CASE("apply_precision is positive definite on random probes") {
  Grid g = Grid::make_2d(8, 8, 0.2, 8, 8);
  const int n = g.node_count();
  BiLaplacianPrior prior(g, 1.5, 0.1, Field(n, 1.0), 0.1);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 16; ++t) {
    Field w = test::random_field(n, rng);
    CHECK(dot(w, prior.apply_precision(w)) > 0.0);
  }
}

TEST_CASE("regularization energy is nonnegative and zero only at the mean") {
  Grid g = Grid::make_2d(8, 8, 0.2, 8, 8);
  const int n = g.node_count();
  Field mean(n, 1.0);
  BiLaplacianPrior prior(g, 1.0, 0.1, mean, 0.1);
  CHECK(prior.energy(mean) == 0.0);
  std::mt19937_64 rng(5);
  Field u = test::random_field(n, rng, 0.5, 2.0);
  CHECK(prior.energy(u) > 0.0);
}

TEST_CASE("apply_covariance inverts apply_precision") {
  Grid g = Grid::make_2d(16, 16, 1.0 / 15, 16, 16);
  const int n = g.node_count();
  BiLaplacianPrior prior(g, 1.0, 0.02, Field(n, 1.0), 0.1);

  Field z = prior.apply_covariance(Field(n, 0.0));
  for (double v : z) CHECK(v == 0.0);

  std::mt19937_64 rng(13);
  Field w = test::random_field(n, rng);
  Field round = prior.apply_precision(prior.apply_covariance(w));
  CHECK(test::rel_err(round, w) < 1e-8);

  BiLaplacianPrior p0(g, 2.0, 0.0, Field(n, 1.0), 0.1);
  Field inv = p0.apply_covariance(w);
  for (int i = 0; i < n; ++i) CHECK(inv[i] == doctest::Approx(w[i] / 4.0).epsilon(1e-10));
}

TEST_CASE("sample: fixed seed is bit-reproducible") {
  Grid g = Grid::make_2d(8, 8, 0.125, 8, 8);
  const int n = g.node_count();
  BiLaplacianPrior prior(g, 4.0, 0.05, Field(n, 1.0), 0.1);
  std::mt19937_64 a(42), b(42);
  Field sa = prior.sample(a);
  Field sb = prior.sample(b);
  for (int i = 0; i < n; ++i) CHECK(sa[i] == sb[i]);
}

TEST_CASE("sample statistics match the dense covariance at a tiny scale") {
  // Sample covariance of u0 + A^{-1} w, w ~ N(0, I/h^d), is h^{-d} (A^2)^{-1}.
  Grid g = Grid::make_2d(8, 8, 0.125, 8, 8);
  const int n = g.node_count();
  const Field mean(n, 2.0);
  // Large alpha keeps fluctuations small so the clamp never engages.
  BiLaplacianPrior prior(g, 8.0, 0.05, mean, 0.01);

  auto cols = assemble_operator(prior, n);
  // Dense Gamma = h^{-d} (A A)^{-1}: solve A x = e_center twice via CG.
  const int center = g.index(4, 4);
  Field e(n, 0.0);
  e[center] = 1.0;
  Field gamma_col = prior.apply_covariance(e);
  const double hd = std::pow(g.spacing, g.dim);
  const double expected_var = gamma_col[center] / hd;

  std::mt19937_64 rng(2024);
  const int m = 10000;
  double s1 = 0.0, s2 = 0.0;
  for (int t = 0; t < m; ++t) {
    const Field u = prior.sample(rng);
    const double v = u[center];
    s1 += v;
    s2 += v * v;
  }
  const double mu = s1 / m;
  const double var = s2 / m - mu * mu;
  CHECK(std::fabs(var - expected_var) / expected_var < 0.10);
  // CLT check at the center node: 3 sigma / sqrt(m)
  CHECK(std::fabs(mu - mean[center]) < 3.0 * std::sqrt(expected_var / m));
}

TEST_CASE("prior rejects mismatched shapes") {
  Grid g = Grid::make_2d(8, 8, 0.125, 8, 8);
  BiLaplacianPrior prior(g, 1.0, 0.1, Field(64, 1.0), 0.1);
  CHECK_THROWS_AS(prior.apply_precision(Field(32, 0.0)), ShapeError);
  CHECK_THROWS_AS(prior.apply_covariance(Field(100, 0.0)), ShapeError);
}
