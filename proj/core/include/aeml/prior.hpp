#pragma once

#include <random>

#include "aeml/field.hpp"
#include "aeml/grid.hpp"

namespace aeml {

/// BiLaplacian-type Gaussian prior built from the single SPD operator
///   A = alpha * (-theta * Lap_h + I)
/// with zero-flux (Neumann) boundary handling; the precision is A^2. Samples
/// are u0 + A^{-1} w with w ~ N(0, I/h^d) per node, clamped below at c_min
/// before use as a wavespeed.
class BiLaplacianPrior {
 public:
  BiLaplacianPrior(const Grid& grid, double alpha, double theta, Field mean, double c_min);

  /// out = A w (the single operator, not the precision).
  void apply_operator(std::span<const double> w, std::span<double> out) const;

  /// A(A w); linear, symmetric, positive definite.
  Field apply_precision(const Field& w) const;

  /// A^{-1}(A^{-1} w) by conjugate gradients to relative residual 1e-10.
  Field apply_covariance(const Field& w) const;

  /// Reproducible prior draw; clamped node count is logged when nonzero.
  Field sample(std::mt19937_64& rng) const;

  /// 0.5 <u - u0, A^2 (u - u0)>
  double energy(const Field& u) const;
  Field energy_gradient(const Field& u) const;

  const Field& mean() const { return mean_; }
  double alpha() const { return alpha_; }
  double theta() const { return theta_; }
  double c_min() const { return c_min_; }
  const Grid& grid() const { return grid_; }

  /// CG solve of A x = b; exposed for sampling and tests.
  Field solve_operator(const Field& b) const;

 private:
  Grid grid_;
  double alpha_;
  double theta_;
  Field mean_;
  double c_min_;
};

}  // namespace aeml
