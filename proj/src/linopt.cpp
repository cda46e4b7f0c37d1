#include "xband/linopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <omp.h>

#include "xband/error.hpp"

namespace xband {

namespace {

// I_D for a1, a2 >= 0 is (a1 + a2) times the outermost level.
double bias_sq(double theta, const QamGrid& grid) {
  const double i_d = std::numbers::sqrt2 * (std::cos(theta) + std::sin(theta)) * grid.max_level();
  return i_d * i_d;
}

double pair_dsq(int k1, int k2, double cos_t, double sin_t, double optical_weight, const QamGrid& grid,
                const LinkSnr& snr) {
  const double s2 = grid.spacing * grid.spacing;
  const double opt = std::numbers::sqrt2 * (k1 * cos_t - k2 * sin_t);
  return (k1 * k1 + k2 * k2) * s2 * snr.gamma1_sq + opt * opt * s2 * optical_weight;
}

}  // namespace

double lattice_dsq(int k1, int k2, double theta, const QamGrid& grid, const LinkSnr& snr) {
  if (k1 == 0 && k2 == 0) throw DomainError("lattice pair (0, 0) is excluded");
  if (k1 < 0 || k2 < 0 || k1 >= grid.side || k2 >= grid.side) {
    throw DomainError("lattice pair indices must lie in {0, ..., sqrt(M) - 1}");
  }
  const double w = snr.gamma2_sq / (1.0 + bias_sq(theta, grid));
  return pair_dsq(k1, k2, std::cos(theta), std::sin(theta), w, grid, snr);
}

std::vector<LatticePair> lattice_pairs(double theta, const QamGrid& grid, const LinkSnr& snr) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double w = snr.gamma2_sq / (1.0 + bias_sq(theta, grid));
  std::vector<LatticePair> pairs;
  pairs.reserve(grid.order - 1);
  for (int k1 = 0; k1 < grid.side; ++k1)
    for (int k2 = 0; k2 < grid.side; ++k2)
      if (k1 + k2 >= 1) pairs.push_back({k1, k2, pair_dsq(k1, k2, c, s, w, grid, snr)});
  std::sort(pairs.begin(), pairs.end(), [](const LatticePair& a, const LatticePair& b) {
    if (a.dsq != b.dsq) return a.dsq < b.dsq;
    return a.k1 != b.k1 ? a.k1 < b.k1 : a.k2 < b.k2;
  });
  return pairs;
}

double min_lattice_dsq(double theta, const QamGrid& grid, const LinkSnr& snr) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double w = snr.gamma2_sq / (1.0 + bias_sq(theta, grid));
  double best = std::numeric_limits<double>::infinity();
  for (int k1 = 0; k1 < grid.side; ++k1)
    for (int k2 = 0; k2 < grid.side; ++k2)
      if (k1 + k2 >= 1) best = std::min(best, pair_dsq(k1, k2, c, s, w, grid, snr));
  return best;
}

P1Solution solve_p1(const QamGrid& grid, const LinkSnr& snr, const P1Options& opts) {
  if (opts.n_theta < 2) throw DomainError("n_theta must be >= 2");
  const double half_pi = std::numbers::pi / 2;
  const int n = opts.n_theta;
  const double step = half_pi / (n - 1);

  std::vector<double> value(n);
  const int workers = opts.workers > 0 ? opts.workers : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(workers)
  for (int j = 0; j < n; ++j) value[j] = min_lattice_dsq(j * step, grid, snr);

  const int best = static_cast<int>(std::max_element(value.begin(), value.end()) - value.begin());

  // Golden-section maximization on the neighbouring bracket.
  double lo = std::max(0, best - 1) * step;
  double hi = std::min(n - 1, best + 1) * step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = min_lattice_dsq(x1, grid, snr);
  double f2 = min_lattice_dsq(x2, grid, snr);
  while (hi - lo > opts.refine_tol) {
    if (f1 < f2) {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = min_lattice_dsq(x2, grid, snr);
    } else {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = min_lattice_dsq(x1, grid, snr);
    }
  }
  double theta = 0.5 * (lo + hi);
  if (value[best] > min_lattice_dsq(theta, grid, snr)) theta = best * step;
  // The objective is symmetric about pi/4; report the mirror image in [0, pi/4].
  theta = std::min(theta, half_pi - theta);

  const auto pairs = lattice_pairs(theta, grid, snr);
  P1Solution sol;
  sol.theta_star = theta;
  sol.first = pairs.front();
  sol.second = pairs.size() > 1 ? pairs[1] : pairs.front();
  return sol;
}

}  // namespace xband
