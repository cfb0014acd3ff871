#include "aeml/prior.hpp"

#include <cmath>
#include <iostream>

#include "aeml/errors.hpp"

namespace aeml {

BiLaplacianPrior::BiLaplacianPrior(const Grid& grid, double alpha, double theta, Field mean,
                                   double c_min)
    : grid_(grid), alpha_(alpha), theta_(theta), mean_(std::move(mean)), c_min_(c_min) {
  grid_.validate();
  if (!(alpha_ > 0.0) || theta_ < 0.0) throw ConfigError("prior needs alpha > 0, theta >= 0");
  if (static_cast<int>(mean_.size()) != grid_.node_count())
    throw ShapeError("prior mean does not match grid");
}

void BiLaplacianPrior::apply_operator(std::span<const double> w, std::span<double> out) const {
  const int n = grid_.node_count();
  if (static_cast<int>(w.size()) != n || static_cast<int>(out.size()) != n)
    throw ShapeError("field does not match prior grid");
  const int nx = grid_.nodes[0];
  const int ny = grid_.nodes[1];
  const double s = theta_ / (grid_.spacing * grid_.spacing);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int i = grid_.index(ix, iy);
      // Graph-Laplacian row: sum over existing neighbors of (w_i - w_nb).
      // Missing neighbors contribute nothing, which is the zero-flux stencil.
      double lap = 0.0;
      if (ix > 0) lap += w[i] - w[i - 1];
      if (ix < nx - 1) lap += w[i] - w[i + 1];
      if (grid_.dim == 2) {
        if (iy > 0) lap += w[i] - w[i - nx];
        if (iy < ny - 1) lap += w[i] - w[i + nx];
      }
      out[i] = alpha_ * (s * lap + w[i]);
    }
  }
}

Field BiLaplacianPrior::apply_precision(const Field& w) const {
  const int n = grid_.node_count();
  Field tmp(n), out(n);
  apply_operator(w, tmp);
  apply_operator(tmp, out);
  return out;
}

Field BiLaplacianPrior::solve_operator(const Field& b) const {
  const int n = grid_.node_count();
  if (static_cast<int>(b.size()) != n) throw ShapeError("field does not match prior grid");
  const double bnorm = norm2(b);
  Field x(n, 0.0);
  if (bnorm == 0.0) return x;

  Field r = b, p = b, ap(n);
  double rr = dot(r, r);
  const double tol = 1e-10 * bnorm;
  for (int it = 0; it < n; ++it) {
    if (std::sqrt(rr) <= tol) return x;
    apply_operator(p, ap);
    const double alpha = rr / dot(p, ap);
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  if (std::sqrt(rr) <= tol) return x;
  throw SolverError("prior CG did not converge within node_count iterations");
}

Field BiLaplacianPrior::apply_covariance(const Field& w) const {
  return solve_operator(solve_operator(w));
}

Field BiLaplacianPrior::sample(std::mt19937_64& rng) const {
  const int n = grid_.node_count();
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::pow(grid_.spacing, 0.5 * grid_.dim);
  Field w(n);
  for (int i = 0; i < n; ++i) w[i] = scale * normal(rng);
  Field x = solve_operator(w);
  int clamped = 0;
  for (int i = 0; i < n; ++i) {
    x[i] += mean_[i];
    if (x[i] < c_min_) {
      x[i] = c_min_;
      ++clamped;
    }
  }
  if (clamped > 0)
    std::clog << "[prior] clamped " << clamped << " nodes to c_min=" << c_min_ << "\n";
  return x;
}

double BiLaplacianPrior::energy(const Field& u) const {
  const int n = grid_.node_count();
  if (static_cast<int>(u.size()) != n) throw ShapeError("field does not match prior grid");
  Field t(n);
  for (int i = 0; i < n; ++i) t[i] = u[i] - mean_[i];
  return 0.5 * dot(t, apply_precision(t));
}

Field BiLaplacianPrior::energy_gradient(const Field& u) const {
  const int n = grid_.node_count();
  if (static_cast<int>(u.size()) != n) throw ShapeError("field does not match prior grid");
  Field t(n);
  for (int i = 0; i < n; ++i) t[i] = u[i] - mean_[i];
  return apply_precision(t);
}

}  // namespace aeml
