#pragma once

#include <span>
#include <vector>

#include "tailq/kde.hpp"

namespace tailq {

inline constexpr double kDensityFloor = 1e-12;

/// Two densities resampled onto one uniform grid, floored and renormalized.
struct AlignedDensityPair {
  double grid_min = 0.0;
  double grid_max = 0.0;
  std::vector<double> p;
  std::vector<double> q;

  double step() const { return (grid_max - grid_min) / static_cast<double>(p.size() - 1); }
};

/// Builds a pair from raw density vectors on a shared grid [lo, hi].
AlignedDensityPair make_aligned_pair(std::vector<double> p, std::vector<double> q, double lo, double hi);

/// Resamples both models onto the union of their supports using the larger of
/// the two grid resolutions.
AlignedDensityPair align(const DensityModel& a, const DensityModel& b);

/// Kullback-Leibler divergence D(P || Q) in bits by trapezoidal integration.
double kl_divergence(std::span<const double> p, std::span<const double> q, double step);

/// Jensen-Shannon divergence in bits, clamped to [0, 1].
double jsd(const AlignedDensityPair& pair);
double jsd(const DensityModel& a, const DensityModel& b);

/// Square root of the Jensen-Shannon divergence; a metric on distributions.
double rjsd(const AlignedDensityPair& pair);
double rjsd(const DensityModel& a, const DensityModel& b);

}  // namespace tailq
