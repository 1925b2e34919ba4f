#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tailq {

inline constexpr std::size_t kDefaultGridPoints = 512;

/// Gaussian kernel density of one unit's latencies, discretized on a uniform
/// grid over [support_min, support_max] and renormalized so the trapezoidal
/// integral is 1.
struct DensityModel {
  double support_min = 0.0;
  double support_max = 0.0;
  double bandwidth = 0.0;
  std::size_t sample_count = 0;
  std::vector<double> density;

  std::size_t grid_points() const { return density.size(); }
  double step() const { return (support_max - support_min) / static_cast<double>(density.size() - 1); }
  double node(std::size_t k) const;

  bool operator==(const DensityModel&) const = default;
};

/// Silverman's rule of thumb, 0.9 * min(sd, IQR/1.34) * m^(-1/5).
///
/// When the spread estimate is zero the sample standard deviation is used if
/// positive; identical samples fall back to max(1e-6, 1e-3 * |x|).
double silverman_bandwidth(std::span<const double> samples);

/// Fits a Gaussian KDE. The grid spans [max(0, min - 4h), max + 4h].
/// A single sample without an explicit bandwidth uses the degenerate fallback.
DensityModel fit_kde(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt,
                     std::size_t grid_points = kDefaultGridPoints);

/// Linear interpolation on the grid, zero outside the support.
double eval_density(const DensityModel& model, double t);

/// Trapezoidal integral of a uniformly spaced density vector.
double trapezoid(std::span<const double> values, double step);

}  // namespace tailq
