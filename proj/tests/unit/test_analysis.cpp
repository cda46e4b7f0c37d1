#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "xband/analysis.hpp"
#include "xband/error.hpp"
#include "xband/linopt.hpp"

using namespace xband;
using doctest::Approx;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

double q_oracle(double x) {
  const big v = boost::math::erfc(big(x) / boost::multiprecision::sqrt(big(2))) / 2;
  return v.convert_to<double>();
}

}  // namespace

TEST_CASE("q function against 50-digit erfc") {
  for (double x = -6; x <= 30; x += 0.037) {
    const double want = q_oracle(x);
    // rounding of x itself is amplified by roughly x^2 in the tail
    CHECK(std::abs(q_function(x) - want) <= 1e-15 * (8 + x * x) * want + 1e-300);
  }
  CHECK(q_function(0) == 0.5);
  CHECK(q_function(1.1033) == Approx(0.13494845).epsilon(1e-7));
}

TEST_CASE("lgcb closed form example") {
  LgcbParams p;
  p.sigma_x_sq = 1;
  p.c1 = p.c2 = 1;
  p.sigma_n_sq = p.sigma_o_sq = 1;
  p.i_d = 0;
  CHECK(mi_lgcb(p) == Approx(1.5).epsilon(1e-12));
}

TEST_CASE("lgcb vanishes with the signal") {
  LgcbParams p = LgcbParams::equalized(LinkSnr{10, 10}, 1e-14);
  CHECK(mi_lgcb(p) < 1e-10);
}

TEST_CASE("lgcb does not depend on the mapping split") {
  LgcbParams p = LgcbParams::equalized(LinkSnr::from_db(5, 15), 0.5, 1.3);
  p.theta = 0;
  const double ref = mi_lgcb(p);
  for (int k = 1; k <= 100; ++k) {
    p.theta = k * (std::numbers::pi / 2) / 100;
    CHECK(std::abs(mi_lgcb(p) - ref) < 1e-12);
  }
}

TEST_CASE("lgcb falls with the bias") {
  double prev = 1e300;
  for (const double i_d : {0.0, 0.5, 1.0, 2.0}) {
    const double v = mi_lgcb(LgcbParams::equalized(LinkSnr::from_db(5, 15), 0.5, i_d));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("lgcb matches a direct 3x3 log-determinant") {
  const LgcbParams p = LgcbParams::equalized(LinkSnr::from_db(3, 12), 0.7, 0.9);
  const double a1 = std::numbers::sqrt2 * std::cos(p.theta), a2 = std::numbers::sqrt2 * std::sin(p.theta);
  const double s = p.sigma_x_sq, n = p.sigma_n_sq, o = p.sigma_o_sq, g = 1 / std::sqrt(1 + p.i_d * p.i_d);
  // columns of H: y = H x + noise, with x = (x_I, x_Q)
  const double h[3][2] = {{1, 0}, {0, 1}, {a1 * g, a2 * g}};
  double k[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k[i][j] = s * (h[i][0] * h[j][0] + h[i][1] * h[j][1]) + (i == j ? (i < 2 ? n : o) : 0);
  const double det = k[0][0] * (k[1][1] * k[2][2] - k[1][2] * k[2][1]) - k[0][1] * (k[1][0] * k[2][2] - k[1][2] * k[2][0]) +
                     k[0][2] * (k[1][0] * k[2][1] - k[1][1] * k[2][0]);
  CHECK(mi_lgcb(p) == Approx(0.5 * std::log2(det / (n * n * o))).epsilon(1e-12));
}

TEST_CASE("two-pair sep approximation") {
  const QamGrid g = make_qam(16);
  const P1Solution sol = solve_p1(g, LinkSnr::from_db(10, 10));
  CHECK(sol.dmin() == Approx(4.869565).epsilon(1e-6));
  // 1 - (1 - 1.5 Q(sqrt(4.869565)/2))^2
  CHECK(sep_approx_linear(sol, 16) == Approx(0.363842).epsilon(1e-6));
  CHECK(sep_approx_linear(sol, 16) == Approx(0.36364).epsilon(1e-3));

  P1Solution big;
  big.first.dsq = big.second.dsq = 1e6;
  CHECK(sep_approx_linear(big, 16) < 1e-100);
  P1Solution zero;
  CHECK(sep_approx_linear(zero, 16) == Approx(1 - 0.25 * 0.25));
}

TEST_CASE("remark bound reduces to square-qam ser without optics") {
  for (double db = 0; db <= 30; db += 2.5) {
    const double g1 = db_to_linear(db);
    const double textbook = 1 - std::pow(1 - 1.5 * q_oracle(std::sqrt(g1 / 10)), 2);
    CHECK(sep_upper_bound({g1, 1e-300}, 0, 16) == Approx(textbook).epsilon(1e-12));
  }
}

TEST_CASE("remark bound at equal snrs") {
  const double v = sep_upper_bound({10, 10}, std::sqrt(3.6), 16);
  CHECK(v == Approx(0.316466).epsilon(1e-6));
  CHECK(v == Approx(0.31666).epsilon(1e-3));
  CHECK(sep_upper_bound({1e9, 1e9}, 1, 16) == 0.0);
}
