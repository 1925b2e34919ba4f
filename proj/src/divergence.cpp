#include "tailq/divergence.hpp"

#include <algorithm>
#include <cmath>

#include "tailq/error.hpp"

namespace tailq {

namespace {

void floor_and_normalize(std::vector<double>& v, double step) {
  for (double& x : v) x = std::max(x, kDensityFloor);
  const double mass = trapezoid(v, step);
  for (double& x : v) x /= mass;
}

}  // namespace

AlignedDensityPair make_aligned_pair(std::vector<double> p, std::vector<double> q, double lo, double hi) {
  if (p.size() != q.size() || p.size() < 2) throw DataError("aligned densities need equal lengths >= 2");
  if (!(hi > lo)) throw DataError("aligned grid needs hi > lo");
  AlignedDensityPair pair{lo, hi, std::move(p), std::move(q)};
  const double step = pair.step();
  floor_and_normalize(pair.p, step);
  floor_and_normalize(pair.q, step);
  return pair;
}

AlignedDensityPair align(const DensityModel& a, const DensityModel& b) {
  const bool same_grid = a.support_min == b.support_min && a.support_max == b.support_max &&
                         a.grid_points() == b.grid_points();
  if (same_grid) return make_aligned_pair(a.density, b.density, a.support_min, a.support_max);

  const double lo = std::min(a.support_min, b.support_min);
  const double hi = std::max(a.support_max, b.support_max);
  const std::size_t n = std::max(a.grid_points(), b.grid_points());
  const double step = (hi - lo) / static_cast<double>(n - 1);
  std::vector<double> p(n), q(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (k + 1 == n) ? hi : lo + static_cast<double>(k) * step;
    p[k] = eval_density(a, t);
    q[k] = eval_density(b, t);
  }
  return make_aligned_pair(std::move(p), std::move(q), lo, hi);
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double step) {
  std::vector<double> integrand(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    integrand[k] = p[k] * std::log2(p[k] / q[k]);
  }
  return trapezoid(integrand, step);
}

double jsd(const AlignedDensityPair& pair) {
  const std::size_t n = pair.p.size();
  std::vector<double> mix(n);
  for (std::size_t k = 0; k < n; ++k) mix[k] = 0.5 * (pair.p[k] + pair.q[k]);
  const double step = pair.step();
  const double value = 0.5 * (kl_divergence(pair.p, mix, step) + kl_divergence(pair.q, mix, step));
  return std::clamp(value, 0.0, 1.0);
}

double jsd(const DensityModel& a, const DensityModel& b) { return jsd(align(a, b)); }

double rjsd(const AlignedDensityPair& pair) { return std::sqrt(jsd(pair)); }

double rjsd(const DensityModel& a, const DensityModel& b) { return std::sqrt(jsd(a, b)); }

}  // namespace tailq
