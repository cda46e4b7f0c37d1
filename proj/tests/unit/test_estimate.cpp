#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xband/analysis.hpp"
#include "xband/error.hpp"
#include "xband/estimate.hpp"
#include "xband/linopt.hpp"

using namespace xband;
using doctest::Approx;

namespace {

Constellation3D linear_opt(const LinkSnr& snr, int m = 16) {
  const QamGrid g = make_qam(m);
  return build_linear_constellation(g, make_linear_map(g, solve_p1(g, snr).theta_star));
}

ConfusionMatrix diagonal(int m, std::uint64_t per_row) {
  ConfusionMatrix cm(m);
  for (int i = 0; i < m; ++i) cm.at(i, i) = per_row;
  cm.n_total = per_row * m;
  return cm;
}

ConfusionMatrix uniform(int m, std::uint64_t per_cell) {
  ConfusionMatrix cm(m);
  std::fill(cm.counts.begin(), cm.counts.end(), per_cell);
  cm.n_total = per_cell * m * m;
  return cm;
}

}  // namespace

TEST_CASE("noiseless channel gives a diagonal matrix") {
  const LinkSnr snr{1e12, 1e12};
  for (const auto& c : {linear_opt(snr), build_mcbm_constellation(make_qam(16)), build_cbpam_constellation(16)}) {
    const ConfusionMatrix cm = run_confusion(c, snr, 10'000, DetectorKind::ml, {});
    CHECK(cm.n_total == 10'000);
    CHECK(cm.errors() == 0);
  }
}

TEST_CASE("ml and fast detectors give identical matrices") {
  const LinkSnr snr = LinkSnr::from_db(10, 10);
  const auto c = linear_opt(snr);
  const McOptions opts{3, 1 << 16, 0};
  CHECK(run_confusion(c, snr, 2'000'000, DetectorKind::ml, opts) ==
        run_confusion(c, snr, 2'000'000, DetectorKind::fast, opts));
}

TEST_CASE("row sums follow the multinomial") {
  const LinkSnr snr = LinkSnr::from_db(10, 10);
  const ConfusionMatrix cm = run_confusion(linear_opt(snr), snr, 1'600'000, DetectorKind::fast, {});
  const double sd = std::sqrt(1.6e6 / 16 * 15 / 16);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(static_cast<double>(cm.row_sum(i)) - 1e5) < 4 * sd);
}

TEST_CASE("parallel result matches the serial reference for any worker count") {
  const LinkSnr snr = LinkSnr::from_db(8, 15);
  const auto c = linear_opt(snr);
  const McOptions base{11, 1 << 16, 1};
  const ConfusionMatrix ref = run_confusion_serial(c, snr, 700'001, DetectorKind::ml, base);
  for (const int w : {1, 2, 3, 8}) {
    McOptions o = base;
    o.workers = w;
    CHECK(run_confusion(c, snr, 700'001, DetectorKind::ml, o) == ref);
  }
  McOptions other = base;
  other.seed = 12;
  CHECK_FALSE(run_confusion(c, snr, 700'001, DetectorKind::ml, other) == ref);
}

TEST_CASE("confusion argument checks") {
  const LinkSnr snr{10, 10};
  const auto mc = build_mcbm_constellation(make_qam(16));
  CHECK_THROWS_AS(run_confusion(mc, snr, 1000, DetectorKind::fast, {}), ConfigError);
  CHECK_THROWS_AS(run_confusion(mc, snr, 0, DetectorKind::ml, {}), ConfigError);
  CHECK_THROWS_AS(run_confusion(mc, LinkSnr{0, 1}, 10, DetectorKind::ml, {}), DomainError);
  CHECK(detector_from_string("fast") == DetectorKind::fast);
  CHECK(to_string(DetectorKind::ml) == "ml");
  CHECK_THROWS_AS(detector_from_string("sphere"), ConfigError);
}

TEST_CASE("sep from confusion") {
  CHECK(sep_from_confusion(diagonal(16, 100)) == 0.0);
  CHECK(sep_from_confusion(uniform(16, 7)) == Approx(15.0 / 16));
  CHECK_THROWS_AS(sep_from_confusion(ConfusionMatrix(4)), DomainError);
}

TEST_CASE("monte carlo sep tracks the two-pair approximation") {
  const LinkSnr snr = LinkSnr::from_db(10, 10);
  const QamGrid g = make_qam(16);
  const P1Solution sol = solve_p1(g, snr);
  const auto c = build_linear_constellation(g, make_linear_map(g, sol.theta_star));
  const ConfusionMatrix cm = run_confusion(c, snr, 1'000'000, DetectorKind::fast, {});
  const double approx = sep_approx_linear(sol, 16);
  CHECK(std::abs(sep_from_confusion(cm) - approx) / approx < 0.25);
}

TEST_CASE("discrete mutual information") {
  CHECK(mi_discrete(diagonal(16, 1000)) == Approx(4.0).epsilon(1e-15));
  CHECK(mi_discrete(uniform(16, 5)) == Approx(0.0));

  ConfusionMatrix bsc(2);
  bsc.at(0, 0) = bsc.at(1, 1) = 89;
  bsc.at(0, 1) = bsc.at(1, 0) = 11;
  bsc.n_total = 200;
  const double hb = -0.11 * std::log2(0.11) - 0.89 * std::log2(0.89);
  CHECK(mi_discrete(bsc) == Approx(1 - hb).epsilon(1e-12));
  CHECK(mi_discrete(bsc) == Approx(0.500084).epsilon(1e-6));
}

TEST_CASE("continuous input moments") {
  RngStream r(1, stream_id(Purpose::test, 20));
  const int n = 1'000'000;
  {
    const auto spec = ContinuousInputSpec::gaussian(1.0, std::numbers::pi / 4, 0);
    double si = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const Vec3 x = sample_continuous(spec, r);
      si += x[0] * x[0], sq += x[1] * x[1];
    }
    CHECK(std::abs(si / n - 1) < 0.01);
    CHECK(std::abs(sq / n - 1) < 0.01);
  }
  {
    const auto spec = ContinuousInputSpec::chi_square(0.5);
    double si = 0, sq = 0;
    std::vector<double> xo(n);
    for (int i = 0; i < n; ++i) {
      const Vec3 x = sample_continuous(spec, r);
      si += x[0] * x[0], sq += x[1] * x[1];
      xo[i] = x[2];
    }
    CHECK(std::abs(si / n - 0.5) < 0.01);
    CHECK(std::abs(sq / n - 0.5) < 0.01);

    // the optical input is exponential: KS distance to the fitted law
    double mean = 0;
    for (const double v : xo) mean += v;
    mean /= n;
    std::sort(xo.begin(), xo.end());
    double ks = 0;
    for (int i = 0; i < n; ++i) {
      const double f = 1 - std::exp(-xo[i] / mean);
      ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    CHECK(ks < 0.005);
    CHECK(xo.front() >= 0.0);
  }
}

TEST_CASE("nested estimator against the closed form") {
  const auto spec = ContinuousInputSpec::gaussian(1.0, std::numbers::pi / 4, 0);
  const MiEstimate e = mi_continuous_nested(spec, LinkSnr{1, 1}, 5000, 5000, 1);
  CHECK(e.value == Approx(1.5).epsilon(0.1 / 1.5));
  CHECK(e.std_error > 0);
  CHECK(e.std_error < 0.05);
}

TEST_CASE("nested estimator vanishes without signal") {
  const auto spec = ContinuousInputSpec::gaussian(1e-12, std::numbers::pi / 4, 0);
  const MiEstimate e = mi_continuous_nested(spec, LinkSnr{10, 10}, 2000, 2000, 1);
  CHECK(std::abs(e.value) < 3 * e.std_error);
  CHECK(e.std_error < 0.05);
}

TEST_CASE("nested estimator is worker-count invariant") {
  const auto spec = ContinuousInputSpec::chi_square(0.5);
  const MiEstimate a = mi_continuous_nested(spec, LinkSnr::from_db(0, 10), 2000, 2000, 5, 1);
  const MiEstimate b = mi_continuous_nested(spec, LinkSnr::from_db(0, 10), 2000, 2000, 5, 3);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("exponential inputs beat biased gaussian inputs at low rf snr") {
  const LinkSnr snr = LinkSnr::from_db(-10, 20);
  // a Gaussian drive needs roughly three standard deviations of bias to stay non-negative
  const double i_d = 3.0;
  const MiEstimate lx = mi_continuous_nested(ContinuousInputSpec::chi_square(0.5), snr, 8000, 8000, 2);
  const MiEstimate lg =
      mi_continuous_nested(ContinuousInputSpec::gaussian(0.5, std::numbers::pi / 4, i_d), snr, 8000, 8000, 2);
  CHECK(lx.value - lg.value > 3 * std::hypot(lx.std_error, lg.std_error));
}

TEST_CASE("nested estimator argument checks") {
  const auto spec = ContinuousInputSpec::gaussian(1.0, 0.3, 0);
  CHECK_THROWS_AS(mi_continuous_nested(spec, LinkSnr{1, 1}, 999, 5000, 1), ConfigError);
  CHECK_THROWS_AS(mi_continuous_nested(spec, LinkSnr{1, INFINITY}, 5000, 5000, 1), DomainError);
}

TEST_CASE("constellation mutual information is bounded by log2 M") {
  const LinkSnr snr = LinkSnr::from_db(30, 30);
  const MiEstimate e = mi_constellation_nested(linear_opt(snr), snr, 4000, 1);
  CHECK(e.value == Approx(4.0).epsilon(0.01));
  const LinkSnr low = LinkSnr::from_db(-10, -10);
  const MiEstimate f = mi_constellation_nested(linear_opt(low), low, 4000, 1);
  CHECK(f.value < 0.5);
  CHECK(f.value > -0.05);
}
