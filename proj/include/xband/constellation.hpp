#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace xband {

using Vec3 = std::array<double, 3>;

/// Unit-energy square M-QAM in equalized coordinates.
///
/// Symbol index is `i_level * side + q_level`, both level indices ascending,
/// so index 0 is the (-,-) corner.
struct QamGrid {
  int order = 0;        // M
  int side = 0;         // sqrt(M)
  double spacing = 0;   // level spacing, per axis
  std::vector<double> levels;                   // side values, ascending
  std::vector<std::array<double, 2>> points;    // M (x_I, x_Q) pairs

  [[nodiscard]] double max_level() const { return levels.back(); }
  [[nodiscard]] int index_of(int i_level, int q_level) const { return i_level * side + q_level; }
  [[nodiscard]] int i_level(int index) const { return index / side; }
  [[nodiscard]] int q_level(int index) const { return index % side; }
};

/// RF -> optical linear mapping: x_O = (a1 x_I + a2 x_Q + I_D) / norm.
struct LinearMap {
  double theta = 0;
  double a1 = 0;
  double a2 = 0;
  double i_d = 0;
  double norm = 1;  // sqrt(1 + I_D^2)

  // Optical coordinate with the bias and normalization removed.
  [[nodiscard]] double plane(double x_i, double x_q) const { return a1 * x_i + a2 * x_q; }
};

enum class Kind { linear, learned, mcbm, cbpam };

std::string_view to_string(Kind kind);
Kind kind_from_string(std::string_view name);

struct Constellation3D {
  std::vector<Vec3> points;  // (x_I, x_Q, x_O), optical axis in the intensity frame
  Kind kind = Kind::linear;
  std::optional<LinearMap> map;  // present iff kind == linear

  [[nodiscard]] int size() const { return static_cast<int>(points.size()); }
};

/// Throws InvalidOrder unless M is a perfect square >= 4.
QamGrid make_qam(int order);

/// Throws DomainError unless theta lies in [0, pi/2].
LinearMap make_linear_map(const QamGrid& grid, double theta);

Constellation3D build_linear_constellation(const QamGrid& grid, const LinearMap& map);

/// Magnitude-based baseline: x_O = |s|.
Constellation3D build_mcbm_constellation(const QamGrid& grid);

/// Unipolar M-PAM on the RF in-phase axis and the optical axis, mean level^2 = 1.
Constellation3D build_cbpam_constellation(int order);

/// Learned intensities attached to the QAM grid (one per symbol, same order).
Constellation3D build_learned_constellation(const QamGrid& grid, const std::vector<double>& intensities);

double mean_square_optical(const Constellation3D& c);
double mean_optical(const Constellation3D& c);

}  // namespace xband
