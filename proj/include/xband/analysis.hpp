#pragma once

#include <numbers>

#include "xband/channel.hpp"
#include "xband/linopt.hpp"

namespace xband {

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
double q_function(double x);

/// Linear Gaussian cross-band benchmark: Gaussian RF inputs of per-axis
/// variance sigma_x_sq, linear optical mapping at angle theta with DC bias i_d
/// (a free parameter here, the Gaussian support is unbounded).
struct LgcbParams {
  double sigma_x_sq = 0.5;
  double c1 = 1;  // h1 p1
  double c2 = 1;  // h2 p2
  double sigma_n_sq = 1;
  double sigma_o_sq = 1;
  double i_d = 0;
  double theta = std::numbers::pi / 4;

  [[nodiscard]] double c_t() const;
  /// Equalized form: c1 = c2 = 1, noise variances 1/gamma^2.
  static LgcbParams equalized(const LinkSnr& snr, double sigma_x_sq, double i_d = 0);
};

/// MI in bits, 1/2 log2(det K_Y / det N), with K_Y the 3x3 output covariance.
/// Throws DomainError if a determinant is not positive.
double mi_lgcb(const LgcbParams& p);

/// Two-direction QAM-style SEP from the max-min lattice distances,
/// 1 - (1 - A1 Q(sqrt(dmin)/2)) (1 - A1 Q(sqrt(dsecond)/2)), A1 = 2(1 - 1/sqrt(M)).
double sep_approx_linear(const P1Solution& sol, int order);

/// Closed-form SEP bound for the (pi/4, 1, 0) regime, evaluated as printed:
/// 1 - (1 - A1 Q(sqrt((3 g1 + 6 g2/(1+I_D^2)) / (2(M-1)))))^2.
double sep_upper_bound(const LinkSnr& snr, double i_d, int order);

}  // namespace xband
