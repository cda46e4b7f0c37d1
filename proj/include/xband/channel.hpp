#pragma once

#include "xband/constellation.hpp"
#include "xband/rng.hpp"

namespace xband {

double db_to_linear(double db);
double linear_to_db(double value);

/// Received SNRs of the two links (linear scale). After equalization these
/// are the only channel parameters left: RF noise has variance 1/gamma1_sq
/// per axis, optical noise 1/gamma2_sq in the intensity frame.
struct LinkSnr {
  double gamma1_sq = 1;
  double gamma2_sq = 1;

  static LinkSnr from_db(double gamma1_db, double gamma2_db);
  [[nodiscard]] double gamma1_db() const { return linear_to_db(gamma1_sq); }
  [[nodiscard]] double gamma2_db() const { return linear_to_db(gamma2_sq); }
  /// Throws DomainError unless both SNRs are finite and positive.
  void validate() const;
};

/// Which optical coordinate an observation carries.
///  intensity: raw equalized intensity y_O, noise variance 1/gamma2^2.
///  plane:     t = sqrt(1+I_D^2) y_O - I_D, noise variance (1+I_D^2)/gamma2^2;
///             linear constellations lie on t = a1 x + a2 y in this frame.
enum class Frame { intensity, plane };

struct Observation {
  Vec3 y{};
  Frame frame = Frame::intensity;
};

/// Inverse noise variances of the detection metric, tagged with the frame
/// they are valid in.
struct MetricWeights {
  double w_i = 1;
  double w_q = 1;
  double w_o = 1;
  Frame frame = Frame::intensity;

  [[nodiscard]] MetricWeights scaled(double factor) const {
    return {w_i * factor, w_q * factor, w_o * factor, frame};
  }
};

/// Linear constellations detect in the plane frame, everything else in the
/// intensity frame.
Frame detection_frame(const Constellation3D& c);
MetricWeights metric_weights(const LinkSnr& snr, const Constellation3D& c);
MetricWeights intensity_weights(const LinkSnr& snr);
MetricWeights plane_weights(const LinkSnr& snr, const LinearMap& map);

/// Zero-mean noise in the intensity frame: variances (1/g1, 1/g1, 1/g2).
Vec3 noise_sample(const LinkSnr& snr, RngStream& rng);

Observation to_plane(const Observation& obs, const LinearMap& map);

/// Point `index` plus channel noise, expressed in `frame` (plane frame only
/// for linear constellations). Throws std::out_of_range on a bad index.
Observation transmit(const Constellation3D& c, int index, const LinkSnr& snr, RngStream& rng, Frame frame);
Observation transmit(const Constellation3D& c, int index, const LinkSnr& snr, RngStream& rng);

}  // namespace xband
