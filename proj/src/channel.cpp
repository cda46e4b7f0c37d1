#include "xband/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "xband/error.hpp"

namespace xband {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double value) { return 10.0 * std::log10(value); }

LinkSnr LinkSnr::from_db(double gamma1_db, double gamma2_db) {
  return {db_to_linear(gamma1_db), db_to_linear(gamma2_db)};
}

void LinkSnr::validate() const {
  const auto ok = [](double g) { return std::isfinite(g) && g > 0.0; };
  if (!ok(gamma1_sq) || !ok(gamma2_sq)) {
    throw DomainError("link SNRs must be finite and positive (gamma1^2=" + std::to_string(gamma1_sq) +
                      ", gamma2^2=" + std::to_string(gamma2_sq) + ")");
  }
}

Frame detection_frame(const Constellation3D& c) {
  return c.kind == Kind::linear ? Frame::plane : Frame::intensity;
}

MetricWeights intensity_weights(const LinkSnr& snr) {
  return {snr.gamma1_sq, snr.gamma1_sq, snr.gamma2_sq, Frame::intensity};
}

MetricWeights plane_weights(const LinkSnr& snr, const LinearMap& map) {
  return {snr.gamma1_sq, snr.gamma1_sq, snr.gamma2_sq / (1.0 + map.i_d * map.i_d), Frame::plane};
}

MetricWeights metric_weights(const LinkSnr& snr, const Constellation3D& c) {
  if (c.kind == Kind::linear) {
    if (!c.map) throw ConfigError("linear constellation without a mapping");
    return plane_weights(snr, *c.map);
  }
  return intensity_weights(snr);
}

Vec3 noise_sample(const LinkSnr& snr, RngStream& rng) {
  const double rf = 1.0 / std::sqrt(snr.gamma1_sq);
  const double opt = 1.0 / std::sqrt(snr.gamma2_sq);
  const double n_i = rng.normal() * rf;
  const double n_q = rng.normal() * rf;
  const double n_o = rng.normal() * opt;
  return {n_i, n_q, n_o};
}

Observation to_plane(const Observation& obs, const LinearMap& map) {
  if (obs.frame == Frame::plane) return obs;
  return {{obs.y[0], obs.y[1], map.norm * obs.y[2] - map.i_d}, Frame::plane};
}

Observation transmit(const Constellation3D& c, int index, const LinkSnr& snr, RngStream& rng, Frame frame) {
  if (index < 0 || index >= c.size()) {
    throw std::out_of_range("symbol index " + std::to_string(index) + " outside [0, " +
                            std::to_string(c.size()) + ")");
  }
  const Vec3& x = c.points[index];
  const Vec3 n = noise_sample(snr, rng);
  Observation obs{{x[0] + n[0], x[1] + n[1], x[2] + n[2]}, Frame::intensity};
  if (frame == Frame::plane) {
    if (!c.map) throw ConfigError("plane frame requires a linear constellation");
    obs = to_plane(obs, *c.map);
  }
  return obs;
}

Observation transmit(const Constellation3D& c, int index, const LinkSnr& snr, RngStream& rng) {
  return transmit(c, index, snr, rng, detection_frame(c));
}

}  // namespace xband
