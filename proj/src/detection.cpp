#include "xband/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xband/error.hpp"

namespace xband {

namespace {

void require_frame(Frame got, Frame want) {
  if (got != want) {
    throw ConfigError(want == Frame::plane ? "detector expects a plane-frame observation"
                                           : "detector expects an intensity-frame observation");
  }
}

}  // namespace

std::vector<Vec3> detection_points(const Constellation3D& c, Frame frame) {
  if (frame == Frame::intensity) return c.points;
  if (!c.map) throw ConfigError("plane frame requires a linear constellation");
  std::vector<Vec3> out;
  out.reserve(c.points.size());
  for (const auto& p : c.points) out.push_back({p[0], p[1], c.map->plane(p[0], p[1])});
  return out;
}

double min_pairwise_dsq(const Constellation3D& c, const MetricWeights& w) {
  const auto pts = detection_points(c, w.frame);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, weighted_dsq(pts[i], pts[j], w));
  return best;
}

MlDetector::MlDetector(const Constellation3D& c, const MetricWeights& w)
    : points_(detection_points(c, w.frame)), weights_(w) {
  if (points_.empty()) throw ConfigError("empty constellation");
  if (!(w.w_i > 0 && w.w_q > 0 && w.w_o > 0)) throw DomainError("metric weights must be positive");
}

Detection MlDetector::detect(const Vec3& r) const {
  Detection best{0, weighted_dsq(r, points_[0], weights_)};
  for (int k = 1; k < static_cast<int>(points_.size()); ++k) {
    const double d = weighted_dsq(r, points_[k], weights_);
    if (d < best.metric) best = {k, d};
  }
  return best;
}

Detection MlDetector::operator()(const Observation& r) const {
  require_frame(r.frame, weights_.frame);
  return detect(r.y);
}

Detection detect_ml(const Constellation3D& c, const Observation& r, const MetricWeights& w) {
  return MlDetector(c, w)(r);
}

PlanePoint project_to_plane(const Observation& r, const LinearMap& map, const MetricWeights& w) {
  require_frame(r.frame, Frame::plane);
  require_frame(w.frame, Frame::plane);
  const double denom = 1.0 + w.w_o * (map.a1 * map.a1 / w.w_i + map.a2 * map.a2 / w.w_q);
  const double s = (map.a1 * r.y[0] + map.a2 * r.y[1] - r.y[2]) / denom;
  return {r.y[0] - (w.w_o * map.a1 / w.w_i) * s, r.y[1] - (w.w_o * map.a2 / w.w_q) * s, s};
}

PlanarDetector::PlanarDetector(const QamGrid& grid, const LinearMap& map, const MetricWeights& w)
    : side_(grid.side),
      spacing_(grid.spacing),
      center_(0.5 * (grid.side - 1)),
      map_(map),
      weights_(w) {
  require_frame(w.frame, Frame::plane);
  if (!(w.w_i > 0 && w.w_q > 0 && w.w_o > 0)) throw DomainError("metric weights must be positive");
  denom_ = 1.0 + w.w_o * (map.a1 * map.a1 / w.w_i + map.a2 * map.a2 / w.w_q);
  const double s2 = spacing_ * spacing_;
  a11_ = s2 * (w.w_i + w.w_o * map.a1 * map.a1);
  a12_ = s2 * w.w_o * map.a1 * map.a2;
  a22_ = s2 * (w.w_q + w.w_o * map.a2 * map.a2);
  const double det = a11_ * a22_ - a12_ * a12_;
  const double reach = 0.25 * (a11_ + a22_ + 2.0 * std::abs(a12_));
  row_halfwidth_ = std::sqrt(reach * a22_ / det) * (1.0 + 1e-9) + 1e-9;

  points_.reserve(grid.points.size());
  for (const auto& p : grid.points) points_.push_back({p[0], p[1], map.plane(p[0], p[1])});
}

PlanePoint PlanarDetector::project(const Vec3& r) const {
  const double s = (map_.a1 * r[0] + map_.a2 * r[1] - r[2]) / denom_;
  return {r[0] - (weights_.w_o * map_.a1 / weights_.w_i) * s, r[1] - (weights_.w_o * map_.a2 / weights_.w_q) * s,
          s};
}

int PlanarDetector::max_candidates() const {
  return 2 * (static_cast<int>(std::floor(2.0 * row_halfwidth_)) + 1);
}

Detection PlanarDetector::detect(const Vec3& r) const {
  const PlanePoint pp = project(r);
  const double p_i = pp.x / spacing_ + center_;
  const double p_q = pp.y / spacing_ + center_;
  const double top = side_ - 1;

  // Row coordinate of the box-constrained continuous minimizer.
  double kc_i = p_i;
  if (p_i < 0 || p_i > top || p_q < 0 || p_q > top) {
    double best = std::numeric_limits<double>::infinity();
    for (const double edge : {0.0, top}) {
      const double q = std::clamp(p_q - (a12_ / a22_) * (edge - p_i), 0.0, top);
      const double fq = form(edge - p_i, q - p_q);
      if (fq < best) best = fq, kc_i = edge;
      const double i = std::clamp(p_i - (a12_ / a11_) * (edge - p_q), 0.0, top);
      const double fi = form(i - p_i, edge - p_q);
      if (fi < best) best = fi, kc_i = i;
    }
  }

  const int row_lo = std::max(0, static_cast<int>(std::ceil(kc_i - row_halfwidth_)));
  const int row_hi = std::min(side_ - 1, static_cast<int>(std::floor(kc_i + row_halfwidth_)));

  Detection best{-1, std::numeric_limits<double>::infinity()};
  for (int ki = row_lo; ki <= row_hi; ++ki) {
    const double m = std::clamp(p_q - (a12_ / a22_) * (ki - p_i), 0.0, top);
    const int q0 = static_cast<int>(std::floor(m));
    for (int kq = q0; kq <= std::min(q0 + 1, side_ - 1); ++kq) {
      const int idx = ki * side_ + kq;
      const double d = weighted_dsq(r, points_[idx], weights_);
      if (d < best.metric || (d == best.metric && idx < best.index)) best = {idx, d};
    }
  }
  return best;
}

Detection PlanarDetector::operator()(const Observation& r) const {
  require_frame(r.frame, Frame::plane);
  return detect(r.y);
}

Detection PlanarDetector::round_only(const Vec3& r) const {
  const PlanePoint pp = project(r);
  const auto nearest = [&](double coord) {
    return static_cast<int>(std::clamp<long>(std::lround(coord / spacing_ + center_), 0, side_ - 1));
  };
  const int idx = nearest(pp.x) * side_ + nearest(pp.y);
  return {idx, weighted_dsq(r, points_[idx], weights_)};
}

Detection detect_fast(const Observation& r, const QamGrid& grid, const LinearMap& map, const MetricWeights& w) {
  return PlanarDetector(grid, map, w)(r);
}

Detection detect_round(const Observation& r, const QamGrid& grid, const LinearMap& map, const MetricWeights& w) {
  require_frame(r.frame, Frame::plane);
  return PlanarDetector(grid, map, w).round_only(r.y);
}

}  // namespace xband
