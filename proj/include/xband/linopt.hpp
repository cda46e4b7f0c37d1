#pragma once

#include <vector>

#include "xband/channel.hpp"
#include "xband/constellation.hpp"

namespace xband {

/// Index difference (k1, k2) between two lattice points, with the
/// opposite-sign convention folded into the optical term, and its weighted
/// squared distance.
struct LatticePair {
  int k1 = 0;
  int k2 = 0;
  double dsq = 0;
};

struct P1Solution {
  double theta_star = 0;
  LatticePair first;   // minimum-distance pair at theta_star
  LatticePair second;  // next pair in (dsq, k1, k2) order; equals dmin when the minimum is shared
  [[nodiscard]] double dmin() const { return first.dsq; }
  [[nodiscard]] double dsecond() const { return second.dsq; }
};

/// Weighted squared lattice distance
///   (k1^2 + k2^2) D^2 g1 + (sqrt2 k1 D cos t - sqrt2 k2 D sin t)^2 g2 / (1 + I_D(t)^2),
/// with I_D recomputed from theta. Throws DomainError for (0, 0).
double lattice_dsq(int k1, int k2, double theta, const QamGrid& grid, const LinkSnr& snr);

/// All constraint-set pairs at theta, sorted by (dsq, k1, k2).
std::vector<LatticePair> lattice_pairs(double theta, const QamGrid& grid, const LinkSnr& snr);

/// min over the constraint set at a fixed theta.
double min_lattice_dsq(double theta, const QamGrid& grid, const LinkSnr& snr);

struct P1Options {
  int n_theta = 16384;
  double refine_tol = 1e-8;
  int workers = 0;  // 0: OpenMP default
};

/// Max-min search over theta in [0, pi/2]: uniform grid, then golden-section
/// refinement on the bracket around the best grid point. The grid scan is
/// data-parallel with an ordered reduction (earliest maximizer wins).
/// theta and pi/2 - theta give the same objective; the one in [0, pi/4] is returned.
P1Solution solve_p1(const QamGrid& grid, const LinkSnr& snr, const P1Options& opts = {});

}  // namespace xband
