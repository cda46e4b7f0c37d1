#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "xband/channel.hpp"
#include "xband/constellation.hpp"

namespace xband {

/// M x M transition counts, row = transmitted, column = detected.
struct ConfusionMatrix {
  int order = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_total = 0;

  explicit ConfusionMatrix(int m = 0) : order(m), counts(static_cast<std::size_t>(m) * m, 0) {}

  [[nodiscard]] std::uint64_t at(int i, int j) const { return counts[static_cast<std::size_t>(i) * order + j]; }
  std::uint64_t& at(int i, int j) { return counts[static_cast<std::size_t>(i) * order + j]; }
  [[nodiscard]] std::uint64_t row_sum(int i) const;
  [[nodiscard]] std::uint64_t errors() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

enum class DetectorKind { ml, fast };
DetectorKind detector_from_string(std::string_view name);
std::string_view to_string(DetectorKind kind);

/// Symbol stream decomposition. Symbols [c*chunk, (c+1)*chunk) always use
/// random stream (seed, c), whatever the worker count.
struct McOptions {
  std::uint64_t seed = 1;
  int chunk = 1 << 16;
  int workers = 0;  // 0: OpenMP default
};

/// Transmits n equiprobable symbols through the channel and detects them.
/// `fast` requires a linear constellation (ConfigError otherwise).
ConfusionMatrix run_confusion(const Constellation3D& c, const LinkSnr& snr, std::uint64_t n, DetectorKind detector,
                              const McOptions& opts);

/// Single-threaded reference with the identical stream decomposition.
ConfusionMatrix run_confusion_serial(const Constellation3D& c, const LinkSnr& snr, std::uint64_t n,
                                     DetectorKind detector, const McOptions& opts);

/// Off-diagonal mass over n_total.
double sep_from_confusion(const ConfusionMatrix& cm);
/// Binomial standard error of sep_from_confusion.
double sep_stderr(const ConfusionMatrix& cm);

/// Post-detection MI in bits with equiprobable inputs and empirical
/// conditionals, clipped to [0, log2 M].
double mi_discrete(const ConfusionMatrix& cm);

enum class InputFamily { gaussian, scaled_chi_square_1 };

/// Continuous RF input law plus the linear optical map applied to it.
struct ContinuousInputSpec {
  InputFamily family = InputFamily::gaussian;
  double sigma_x_sq = 0.5;
  double a1 = 1;
  double a2 = 1;
  double i_d = 0;

  static ContinuousInputSpec gaussian(double sigma_x_sq, double theta, double i_d);
  /// Per-axis scale sigma_x/sqrt(3), theta = pi/4, no bias: the optical input is exponential.
  static ContinuousInputSpec chi_square(double sigma_x_sq);
};

/// Noiseless channel means (x_I, x_Q, (a1 x_I + a2 x_Q + I_D)/sqrt(1 + I_D^2)).
Vec3 sample_continuous(const ContinuousInputSpec& spec, RngStream& rng);

struct MiEstimate {
  double value = 0;
  double std_error = 0;
};

/// Nested Monte Carlo MI: h(Y) from outer samples with an inner mixture
/// density over an independent input sample, minus the Gaussian noise
/// entropy. Standard error by a 20-group jackknife over the outer samples.
MiEstimate mi_continuous_nested(const ContinuousInputSpec& spec, const LinkSnr& snr, int n_outer, int n_inner,
                                std::uint64_t seed, int workers = 0);

/// Continuous-output MI of a discrete constellation (exact finite mixture).
MiEstimate mi_constellation_nested(const Constellation3D& c, const LinkSnr& snr, int n_outer, std::uint64_t seed,
                                   int workers = 0);

}  // namespace xband
