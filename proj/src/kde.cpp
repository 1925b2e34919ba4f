#include "tailq/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "tailq/error.hpp"

namespace tailq {

namespace {

constexpr double kSupportPadding = 4.0;

double degenerate_bandwidth(double value) { return std::max(1e-6, 1e-3 * std::abs(value)); }

// Linear-interpolation quantile of sorted data (q in [0,1]).
double quantile_sorted(std::span<const double> sorted, double q) {
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double DensityModel::node(std::size_t k) const {
  if (k + 1 == density.size()) return support_max;
  return support_min + static_cast<double>(k) * step();
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw DataError("bandwidth selection needs at least 2 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  const auto m = static_cast<double>(sorted.size());
  double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / m;
  double ss = 0.0;
  for (double x : sorted) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / (m - 1.0));
  double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  if (spread <= 0.0) return degenerate_bandwidth(sorted.front());
  return 0.9 * spread * std::pow(m, -0.2);
}

DensityModel fit_kde(std::span<const double> samples, std::optional<double> bandwidth, std::size_t grid_points) {
  if (samples.empty()) throw DataError("cannot fit a density to zero samples");
  if (grid_points < 2) throw ConfigError("density grid needs at least 2 points");
  for (double x : samples) {
    if (!std::isfinite(x)) throw DataError("non-finite sample in density fit");
  }

  double h;
  if (bandwidth) {
    h = *bandwidth;
    if (!(h > 0.0) || !std::isfinite(h)) throw DataError("bandwidth must be positive");
  } else if (samples.size() == 1) {
    h = degenerate_bandwidth(samples.front());
  } else {
    h = silverman_bandwidth(samples);
  }

  // Sorting fixes the summation order, so the fit is permutation invariant.
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  DensityModel model;
  model.bandwidth = h;
  model.sample_count = sorted.size();
  model.support_min = std::max(0.0, sorted.front() - kSupportPadding * h);
  model.support_max = sorted.back() + kSupportPadding * h;
  model.density.assign(grid_points, 0.0);

  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double t = model.node(k);
    double acc = 0.0;
    for (double x : sorted) {
      const double u = (t - x) / h;
      acc += std::exp(-0.5 * u * u);
    }
    model.density[k] = acc * norm;
  }

  const double mass = trapezoid(model.density, model.step());
  if (mass > 0.0) {
    for (double& v : model.density) v /= mass;
  }
  return model;
}

double eval_density(const DensityModel& model, double t) {
  if (model.density.empty() || !(t >= model.support_min) || !(t <= model.support_max)) return 0.0;
  const double pos = (t - model.support_min) / model.step();
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= model.density.size()) return model.density.back();
  const double frac = pos - static_cast<double>(k);
  if (frac == 0.0) return model.density[k];
  return model.density[k] + frac * (model.density[k + 1] - model.density[k]);
}

double trapezoid(std::span<const double> values, double step) {
  if (values.size() < 2) return 0.0;
  double inner = 0.0;
  for (std::size_t k = 1; k + 1 < values.size(); ++k) inner += values[k];
  return step * (inner + 0.5 * (values.front() + values.back()));
}

}  // namespace tailq
