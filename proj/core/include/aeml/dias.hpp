#pragma once

#include <filesystem>
#include <functional>
#include <random>

#include "aeml/newton.hpp"
#include "aeml/prior.hpp"

namespace aeml {

/// Top eigenpairs of the gradient outer-product covariance
/// C = E[grad f grad f^T], estimated by SVD of the sampled gradient matrix.
struct ActiveSubspaceBasis {
  int n = 0;
  int rank = 0;
  int samples = 0;
  std::vector<double> w1;       // n x rank, column-major, orthonormal columns
  std::vector<double> lambda1;  // rank eigenvalues, descending
  Field center;                 // sampling center

  /// out = P2 x = x - W1 (W1^T x)
  void project_inactive(std::span<const double> x, std::span<double> out) const;
};

using GradientFn = std::function<Field(const Field&)>;
using SampleFn = std::function<Field(std::mt19937_64&)>;

/// Monte Carlo active-subspace estimate from m misfit-gradient samples at
/// parameters drawn by `draw`. The n x m gradient matrix is never formed as an
/// n x n covariance; eigenpairs come from its thin SVD divided by sqrt(m).
ActiveSubspaceBasis estimate_active_subspace(const GradientFn& misfit_gradient,
                                             const SampleFn& draw, int m, int r,
                                             std::uint64_t seed);

/// P2 Gamma_prior^{-1} P2 (u - u0): the practical DIAS regularization gradient.
Field apply_dias_reg_grad(const ActiveSubspaceBasis& basis, const BiLaplacianPrior& prior,
                          const Field& u, const Field& u0);

/// Regularizer 0.5 <P2 (u - u0), Gamma^{-1} P2 (u - u0)> for step two of DIAS.
class DiasRegularizer : public Regularizer {
 public:
  DiasRegularizer(const ActiveSubspaceBasis& basis, const BiLaplacianPrior& prior)
      : basis_(&basis), prior_(&prior) {}
  double value(const Field& u) const override;
  Field gradient(const Field& u) const override;
  Field hessian_vec(const Field& p) const override;

 private:
  const ActiveSubspaceBasis* basis_;
  const BiLaplacianPrior* prior_;
};

/// Dense diagnostic of the projected-prior algebra: compares (P2 G P2)^+ with
/// P2 G^{-1} P2 (they differ unless G is a scaled identity) and checks the
/// Schur-complement identity for W2^T G^{-1} W2.
struct SchurCaveatReport {
  int n = 0;
  std::vector<double> pinv_form;  // (P2 G P2)^+, n x n column-major
  std::vector<double> proj_form;  // P2 G^{-1} P2
  double gap = 0.0;               // spectral norm of the difference
  double identity_residual = 0.0; // relative error of the Schur identity
};

SchurCaveatReport verify_schur_caveat(const std::vector<double>& gamma, int n,
                                      const std::vector<double>& w1, int r);

struct DiasConfig {
  int samples = 30;
  int rank = 5;
  std::uint64_t seed = 1;
  NewtonConfig newton;
};

struct DiasResult {
  NewtonResult map_run;
  NewtonResult dias_run;
  ActiveSubspaceBasis basis;
  SweepCounter sampling_counter;
};

/// Two-step scheme: solve the MAP problem with the full prior, estimate the
/// active subspace centered at u_MAP with prior-shaped perturbations, then
/// minimize the DIAS objective (full misfit, inactive-space prior) from u_MAP.
DiasResult solve_dias(const Objective& obj, const BiLaplacianPrior& prior, const Field& u_init,
                      StoreFactory factory, const DiasConfig& cfg);

/// Basis file: {magic "AEAS", n u64, r u32, f64 W1 column-major, f64 lambda1}.
void write_basis(const std::filesystem::path& path, const ActiveSubspaceBasis& basis);
ActiveSubspaceBasis read_basis(const std::filesystem::path& path);

}  // namespace aeml
