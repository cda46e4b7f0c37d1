#include "xband/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "xband/error.hpp"

namespace xband {

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::linear: return "linear";
    case Kind::learned: return "learned";
    case Kind::mcbm: return "mcbm";
    case Kind::cbpam: return "cbpam";
  }
  return "unknown";
}

Kind kind_from_string(std::string_view name) {
  if (name == "linear") return Kind::linear;
  if (name == "learned") return Kind::learned;
  if (name == "mcbm") return Kind::mcbm;
  if (name == "cbpam") return Kind::cbpam;
  throw ConfigError("unknown constellation kind '" + std::string(name) + "'");
}

QamGrid make_qam(int order) {
  if (order < 4) throw InvalidOrder("QAM order must be >= 4, got " + std::to_string(order));
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  if (side * side != order) {
    throw InvalidOrder("QAM order must be a perfect square, got " + std::to_string(order));
  }

  QamGrid grid;
  grid.order = order;
  grid.side = side;
  // Per-axis mean square of +-(2m-1)spacing/2 is spacing^2 (M-1)/12 = 1/2.
  grid.spacing = std::sqrt(6.0 / (order - 1));
  grid.levels.resize(side);
  for (int k = 0; k < side; ++k) grid.levels[k] = (k - 0.5 * (side - 1)) * grid.spacing;
  grid.points.reserve(order);
  for (int i = 0; i < side; ++i)
    for (int q = 0; q < side; ++q) grid.points.push_back({grid.levels[i], grid.levels[q]});
  return grid;
}

LinearMap make_linear_map(const QamGrid& grid, double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2)) {
    throw DomainError("mapping angle must lie in [0, pi/2], got " + std::to_string(theta));
  }
  LinearMap map;
  map.theta = theta;
  map.a1 = std::numbers::sqrt2 * std::cos(theta);
  map.a2 = std::numbers::sqrt2 * std::sin(theta);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& p : grid.points) lowest = std::min(lowest, map.plane(p[0], p[1]));
  map.i_d = -lowest;
  map.norm = std::sqrt(1.0 + map.i_d * map.i_d);
  return map;
}

Constellation3D build_linear_constellation(const QamGrid& grid, const LinearMap& map) {
  Constellation3D c;
  c.kind = Kind::linear;
  c.map = map;
  c.points.reserve(grid.points.size());
  for (const auto& p : grid.points) {
    // The minimizing symbol maps to exactly zero; guard against -0.0/roundoff.
    const double x_o = std::max(0.0, (map.plane(p[0], p[1]) + map.i_d) / map.norm);
    c.points.push_back({p[0], p[1], x_o});
  }
  return c;
}

Constellation3D build_mcbm_constellation(const QamGrid& grid) {
  Constellation3D c;
  c.kind = Kind::mcbm;
  c.points.reserve(grid.points.size());
  for (const auto& p : grid.points) c.points.push_back({p[0], p[1], std::hypot(p[0], p[1])});
  return c;
}

Constellation3D build_cbpam_constellation(int order) {
  if (order < 2) throw InvalidOrder("PAM order must be >= 2, got " + std::to_string(order));
  double sum_sq = 0;
  for (int i = 0; i < order; ++i) sum_sq += static_cast<double>(i) * i;
  const double step = std::sqrt(order / sum_sq);

  Constellation3D c;
  c.kind = Kind::cbpam;
  c.points.reserve(order);
  for (int i = 0; i < order; ++i) c.points.push_back({i * step, 0.0, i * step});
  return c;
}

Constellation3D build_learned_constellation(const QamGrid& grid, const std::vector<double>& intensities) {
  if (intensities.size() != grid.points.size()) {
    throw ConfigError("learned constellation needs one intensity per QAM symbol");
  }
  Constellation3D c;
  c.kind = Kind::learned;
  c.points.reserve(grid.points.size());
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    if (!(intensities[i] >= 0.0)) throw DomainError("optical intensities must be non-negative");
    c.points.push_back({grid.points[i][0], grid.points[i][1], intensities[i]});
  }
  return c;
}

double mean_square_optical(const Constellation3D& c) {
  double acc = 0;
  for (const auto& p : c.points) acc += p[2] * p[2];
  return acc / c.size();
}

double mean_optical(const Constellation3D& c) {
  double acc = 0;
  for (const auto& p : c.points) acc += p[2];
  return acc / c.size();
}

}  // namespace xband
