#pragma once

#include <array>
#include <cmath>

#include "aeml/errors.hpp"

namespace aeml {

enum class SourceKind { Ricker, Gaussian };

/// A seismic source term. Ricker sources are a Ricker wavelet in time smeared
/// by a narrow spatial Gaussian, pushing along a unit direction. Gaussian
/// sources are a Gaussian in time deposited as a discrete delta on the nearest
/// node (scaled by 1/h^d), acting equally on every velocity component.
struct SourceSpec {
  SourceKind kind = SourceKind::Ricker;
  std::array<double, 2> location = {0.0, 0.0};
  double t_center = 0.6;
  double sigma_t = 1.0 / M_PI;
  double sigma_x = 0.05;
  std::array<double, 2> direction = {0.0, -1.0};  // ricker only

  void validate() const {
    if (!(sigma_t > 0.0) || !(sigma_x > 0.0))
      throw ConfigError("source widths sigma_t, sigma_x must be positive");
  }

  /// Time factor of the source at time t.
  double time_factor(double t) const {
    const double u = (t - t_center) / sigma_t;
    const double gauss = std::exp(-0.5 * u * u);
    if (kind == SourceKind::Ricker) return (1.0 - u * u) * gauss;
    return gauss / (std::sqrt(2.0 * M_PI) * sigma_t);
  }
};

}  // namespace aeml
