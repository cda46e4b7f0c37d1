#pragma once

#include <vector>

#include "xband/channel.hpp"
#include "xband/constellation.hpp"

namespace xband {

struct Detection {
  int index = 0;
  double metric = 0;  // weighted squared distance to the chosen point
};

/// Weighted projection of a plane-frame observation onto t = a1 x + a2 y.
/// `residual` is a1 X + a2 Y - t at the projected point's stationarity.
struct PlanePoint {
  double x = 0;
  double y = 0;
  double residual = 0;
};

inline double weighted_dsq(const Vec3& r, const Vec3& p, const MetricWeights& w) {
  const double di = r[0] - p[0];
  const double dq = r[1] - p[1];
  const double d_o = r[2] - p[2];
  return w.w_i * di * di + w.w_q * dq * dq + w.w_o * d_o * d_o;
}

/// Constellation points expressed in `frame`. Plane-frame coordinates of
/// linear constellations are computed as a1 x + a2 y, not recovered from x_O.
std::vector<Vec3> detection_points(const Constellation3D& c, Frame frame);

/// Smallest weighted squared distance over all symbol pairs, in the weights' frame.
double min_pairwise_dsq(const Constellation3D& c, const MetricWeights& w);

/// Exhaustive ML search, ties to the lowest index.
class MlDetector {
 public:
  MlDetector(const Constellation3D& c, const MetricWeights& w);

  [[nodiscard]] Detection detect(const Vec3& r) const;
  /// Throws ConfigError when the observation frame does not match the weights.
  [[nodiscard]] Detection operator()(const Observation& r) const;
  [[nodiscard]] const std::vector<Vec3>& points() const { return points_; }

 private:
  std::vector<Vec3> points_;
  MetricWeights weights_;
};

Detection detect_ml(const Constellation3D& c, const Observation& r, const MetricWeights& w);

PlanePoint project_to_plane(const Observation& r, const LinearMap& map, const MetricWeights& w);

/// Constant-time ML detector for linear (planar) constellations.
///
/// The metric restricted to the plane is a 2x2 quadratic form in the lattice
/// indices. Its off-diagonal term w_o a1 a2 is generally non-zero, so per-axis
/// rounding of the projection is not always the nearest lattice point. The
/// detector takes the box-constrained continuous minimizer k_c, bounds the
/// integer minimizer to the ellipse (k - k_c)' A (k - k_c) <= R with
/// R = max over |d|<=1/2 of d' A d, and scans the O(1) index rows inside it,
/// solving each row exactly. The row count depends only on the conditioning
/// of the metric, never on M or on the observation.
class PlanarDetector {
 public:
  PlanarDetector(const QamGrid& grid, const LinearMap& map, const MetricWeights& w);

  [[nodiscard]] Detection detect(const Vec3& r) const;
  [[nodiscard]] Detection operator()(const Observation& r) const;

  /// Per-axis round-and-clamp of the projection (half away from zero),
  /// without the exactness correction.
  [[nodiscard]] Detection round_only(const Vec3& r) const;

  [[nodiscard]] PlanePoint project(const Vec3& r) const;
  /// Upper bound on metric evaluations per detection.
  [[nodiscard]] int max_candidates() const;

 private:
  [[nodiscard]] double form(double di, double dq) const {
    return a11_ * di * di + 2.0 * a12_ * di * dq + a22_ * dq * dq;
  }

  int side_;
  double spacing_;
  double center_;
  LinearMap map_;
  MetricWeights weights_;
  double denom_;            // 1 + w_o (a1^2/w_i + a2^2/w_q)
  double a11_, a12_, a22_;  // plane metric in index units
  double row_halfwidth_;
  std::vector<Vec3> points_;
};

Detection detect_fast(const Observation& r, const QamGrid& grid, const LinearMap& map, const MetricWeights& w);
Detection detect_round(const Observation& r, const QamGrid& grid, const LinearMap& map, const MetricWeights& w);

}  // namespace xband
