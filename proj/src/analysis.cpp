#include "xband/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "xband/error.hpp"

namespace xband {

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double LgcbParams::c_t() const { return c1 * c2 / std::sqrt(1.0 + i_d * i_d); }

LgcbParams LgcbParams::equalized(const LinkSnr& snr, double sigma_x_sq, double i_d) {
  LgcbParams p;
  p.sigma_x_sq = sigma_x_sq;
  p.sigma_n_sq = 1.0 / snr.gamma1_sq;
  p.sigma_o_sq = 1.0 / snr.gamma2_sq;
  p.i_d = i_d;
  return p;
}

double mi_lgcb(const LgcbParams& p) {
  const double a1 = std::numbers::sqrt2 * std::cos(p.theta);
  const double a2 = std::numbers::sqrt2 * std::sin(p.theta);
  const double rf = p.c1 * p.c1 * p.sigma_x_sq + p.sigma_n_sq;
  const double cross_i = p.c_t() * a1 * p.sigma_x_sq;
  const double cross_q = p.c_t() * a2 * p.sigma_x_sq;
  // Var(y_O) = c2^2 (a1^2 + a2^2) sigma_x^2 / (1 + I_D^2) + sigma_o^2.
  const double opt = p.c2 * p.c2 * (a1 * a1 + a2 * a2) * p.sigma_x_sq / (1.0 + p.i_d * p.i_d) + p.sigma_o_sq;

  // det [[rf, 0, ci], [0, rf, cq], [ci, cq, opt]]
  const double det_k = rf * (rf * opt - cross_q * cross_q) - cross_i * (cross_i * rf);
  const double det_n = p.sigma_n_sq * p.sigma_n_sq * p.sigma_o_sq;
  if (!(det_k > 0) || !(det_n > 0)) throw DomainError("LGCB covariance is not positive definite");
  return 0.5 * std::log2(det_k / det_n);
}

double sep_approx_linear(const P1Solution& sol, int order) {
  const double a1 = 2.0 * (1.0 - 1.0 / std::sqrt(static_cast<double>(order)));
  const double p1 = a1 * q_function(std::sqrt(sol.dmin()) / 2.0);
  const double p2 = a1 * q_function(std::sqrt(sol.dsecond()) / 2.0);
  return std::clamp(1.0 - (1.0 - p1) * (1.0 - p2), 0.0, 1.0);
}

double sep_upper_bound(const LinkSnr& snr, double i_d, int order) {
  const double a1 = 2.0 * (1.0 - 1.0 / std::sqrt(static_cast<double>(order)));
  const double arg = (3.0 * snr.gamma1_sq + 6.0 * snr.gamma2_sq / (1.0 + i_d * i_d)) / (2.0 * (order - 1));
  const double p = a1 * q_function(std::sqrt(arg));
  return std::clamp(1.0 - (1.0 - p) * (1.0 - p), 0.0, 1.0);
}

}  // namespace xband
