#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "xband/detection.hpp"
#include "xband/error.hpp"
#include "xband/linopt.hpp"

using namespace xband;
using doctest::Approx;

constexpr double kQuarter = std::numbers::pi / 4;

TEST_CASE("lattice distance hand values") {
  const QamGrid g = make_qam(16);
  const LinkSnr snr{10, 10};
  // 0.4 * 10 + 0.4 * 10 / 4.6
  CHECK(lattice_dsq(1, 0, kQuarter, g, snr) == Approx(4.869565).epsilon(1e-6));
  CHECK(lattice_dsq(1, 1, kQuarter, g, snr) == Approx(2 * 0.4 * 10).epsilon(1e-12));
  for (const double theta : {0.0, 0.3, 1.1})
    for (int k1 = 0; k1 < 4; ++k1)
      for (int k2 = 0; k2 < 4; ++k2)
        if (k1 + k2 > 0)
          CHECK(lattice_dsq(k1, k2, theta, g, {7, 1e-14}) == Approx((k1 * k1 + k2 * k2) * 0.4 * 7).epsilon(1e-12));
}

TEST_CASE("lattice pair domain") {
  const QamGrid g = make_qam(16);
  CHECK_THROWS_AS(lattice_dsq(0, 0, 0.3, g, {1, 1}), DomainError);
  CHECK_THROWS_AS(lattice_dsq(4, 0, 0.3, g, {1, 1}), DomainError);
  CHECK_THROWS_AS(lattice_dsq(-1, 1, 0.3, g, {1, 1}), DomainError);
  CHECK(lattice_pairs(0.3, g, {1, 1}).size() == 15);
}

TEST_CASE("lattice minimum equals the brute-force pairwise minimum") {
  for (const int m : {4, 16, 64}) {
    const QamGrid g = make_qam(m);
    for (const double theta : {0.0, 0.2, 0.5, kQuarter, 1.0, 1.5}) {
      for (const LinkSnr snr : {LinkSnr{10, 10}, LinkSnr{10, 1000}, LinkSnr{100, 3}}) {
        const auto c = build_linear_constellation(g, make_linear_map(g, theta));
        CHECK(min_pairwise_dsq(c, metric_weights(snr, c)) == Approx(min_lattice_dsq(theta, g, snr)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("theta star is pi/4 when rf snr dominates") {
  const QamGrid g = make_qam(16);
  for (const auto [a, b] : {std::pair{10.0, 10.0}, {15.0, 5.0}, {20.0, 0.0}, {25.0, 20.0}, {0.0, 0.0}}) {
    const P1Solution sol = solve_p1(g, LinkSnr::from_db(a, b));
    CHECK(sol.theta_star == Approx(kQuarter).epsilon(2e-4));
    const bool axis = (sol.first.k1 == 1 && sol.first.k2 == 0) || (sol.first.k1 == 0 && sol.first.k2 == 1);
    CHECK(axis);
  }
}

TEST_CASE("theta star leaves pi/4 when the optical link dominates") {
  const QamGrid g = make_qam(16);
  const LinkSnr snr = LinkSnr::from_db(10, 30);
  const P1Solution sol = solve_p1(g, snr);
  CHECK(std::abs(sol.theta_star - kQuarter) > 0.05);
  CHECK(sol.dmin() > min_lattice_dsq(kQuarter, g, snr));

  // dense sweep oracle over [0, pi/2]
  double best = 0;
  const int n = 1'000'000;
  for (int j = 0; j < n; ++j) best = std::max(best, min_lattice_dsq(j * (std::numbers::pi / 2) / (n - 1), g, snr));
  CHECK(sol.dmin() >= best * (1 - 1e-9));
  CHECK(sol.dmin() == Approx(best).epsilon(1e-5));
}

TEST_CASE("theta star is stable under grid refinement") {
  const QamGrid g = make_qam(16);
  for (const auto [a, b] : {std::pair{10.0, 30.0}, {5.0, 25.0}, {12.0, 20.0}}) {
    const LinkSnr snr = LinkSnr::from_db(a, b);
    const P1Solution coarse = solve_p1(g, snr, {16384});
    const P1Solution fine = solve_p1(g, snr, {65536});
    CHECK(coarse.theta_star == Approx(fine.theta_star).epsilon(1e-6));
    CHECK(coarse.first.k1 == fine.first.k1);
    CHECK(coarse.first.k2 == fine.first.k2);
    CHECK(coarse.theta_star <= kQuarter);
  }
}

TEST_CASE("objective is symmetric about pi/4") {
  const QamGrid g = make_qam(16);
  const LinkSnr snr = LinkSnr::from_db(5, 25);
  for (double t = 0; t < kQuarter; t += 0.01)
    CHECK(min_lattice_dsq(t, g, snr) == Approx(min_lattice_dsq(std::numbers::pi / 2 - t, g, snr)).epsilon(1e-12));
}

TEST_CASE("second pair follows the first in sorted order") {
  const QamGrid g = make_qam(16);
  const LinkSnr snr = LinkSnr::from_db(10, 10);
  const P1Solution sol = solve_p1(g, snr);
  CHECK(sol.dsecond() >= sol.dmin());
  // at pi/4 the minimum is shared by (0,1) and (1,0)
  CHECK(sol.dsecond() == Approx(sol.dmin()));
  CHECK(sol.first.k1 + sol.first.k2 == 1);
  CHECK(sol.second.k1 + sol.second.k2 == 1);
  CHECK(sol.first.k1 != sol.second.k1);
}

TEST_CASE("rf-only saturation at pi/4") {
  const QamGrid g = make_qam(16);
  for (double db = 0; db <= 60; db += 10) {
    const LinkSnr snr = LinkSnr::from_db(10, db);
    CHECK(min_lattice_dsq(kQuarter, g, snr) <= 2 * 0.4 * 10 * (1 + 1e-12));
  }
}

TEST_CASE("worker count does not change the answer") {
  const QamGrid g = make_qam(64);
  const LinkSnr snr = LinkSnr::from_db(8, 27);
  P1Options one{4096, 1e-8, 1}, many{4096, 1e-8, 4};
  const P1Solution a = solve_p1(g, snr, one), b = solve_p1(g, snr, many);
  CHECK(a.theta_star == b.theta_star);
  CHECK(a.dmin() == b.dmin());
  CHECK_THROWS_AS(solve_p1(g, snr, {1}), DomainError);
}
