#include "xband/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <omp.h>

#include "xband/detection.hpp"
#include "xband/error.hpp"

namespace xband {

std::uint64_t ConfusionMatrix::row_sum(int i) const {
  std::uint64_t s = 0;
  for (int j = 0; j < order; ++j) s += at(i, j);
  return s;
}

std::uint64_t ConfusionMatrix::errors() const {
  std::uint64_t s = 0;
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j)
      if (i != j) s += at(i, j);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  n_total += other.n_total;
  return *this;
}

DetectorKind detector_from_string(std::string_view name) {
  if (name == "ml") return DetectorKind::ml;
  if (name == "fast") return DetectorKind::fast;
  throw ConfigError("unknown detector '" + std::string(name) + "' (expected ml or fast)");
}

std::string_view to_string(DetectorKind kind) { return kind == DetectorKind::ml ? "ml" : "fast"; }

namespace {

struct ChunkPlan {
  std::uint64_t n;
  std::uint64_t chunk;
  std::uint64_t count;
  [[nodiscard]] std::uint64_t length(std::uint64_t c) const { return std::min(chunk, n - c * chunk); }
};

ChunkPlan plan_chunks(std::uint64_t n, const McOptions& opts) {
  if (opts.chunk < 1) throw ConfigError("chunk size must be positive");
  const auto chunk = static_cast<std::uint64_t>(opts.chunk);
  return {n, chunk, (n + chunk - 1) / chunk};
}

template <class Detect>
void accumulate_chunk(const Constellation3D& c, const LinkSnr& snr, const LinearMap* plane_map, std::uint64_t seed,
                      std::uint64_t chunk_index, std::uint64_t length, const Detect& detect, ConfusionMatrix& out) {
  RngStream rng(seed, stream_id(Purpose::symbols, chunk_index));
  const int m = c.size();
  for (std::uint64_t s = 0; s < length; ++s) {
    const int idx = rng.below(m);
    const Vec3 n = noise_sample(snr, rng);
    const Vec3& x = c.points[idx];
    Vec3 y{x[0] + n[0], x[1] + n[1], x[2] + n[2]};
    if (plane_map) y[2] = plane_map->norm * y[2] - plane_map->i_d;
    ++out.at(idx, detect(y).index);
  }
  out.n_total += length;
}

template <class Detect>
ConfusionMatrix run_chunks(const Constellation3D& c, const LinkSnr& snr, std::uint64_t n, const McOptions& opts,
                           const Detect& detect, bool parallel) {
  const ChunkPlan plan = plan_chunks(n, opts);
  const LinearMap* plane_map = c.kind == Kind::linear ? &*c.map : nullptr;
  std::vector<ConfusionMatrix> partial(plan.count, ConfusionMatrix(c.size()));
  const auto count = static_cast<std::int64_t>(plan.count);
  if (parallel) {
    const int workers = opts.workers > 0 ? opts.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::int64_t k = 0; k < count; ++k) {
      const auto ci = static_cast<std::uint64_t>(k);
      accumulate_chunk(c, snr, plane_map, opts.seed, ci, plan.length(ci), detect, partial[ci]);
    }
  } else {
    for (std::int64_t k = 0; k < count; ++k) {
      const auto ci = static_cast<std::uint64_t>(k);
      accumulate_chunk(c, snr, plane_map, opts.seed, ci, plan.length(ci), detect, partial[ci]);
    }
  }
  ConfusionMatrix total(c.size());
  for (const auto& p : partial) total += p;
  return total;
}

ConfusionMatrix dispatch(const Constellation3D& c, const LinkSnr& snr, std::uint64_t n, DetectorKind detector,
                         const McOptions& opts, bool parallel) {
  snr.validate();
  if (n == 0) throw ConfigError("number of symbols must be positive");
  const MetricWeights w = metric_weights(snr, c);
  if (detector == DetectorKind::fast) {
    if (c.kind != Kind::linear) throw ConfigError("fast detector requires a linear constellation");
    const PlanarDetector planar(make_qam(c.size()), *c.map, w);
    return run_chunks(c, snr, n, opts, [&](const Vec3& y) { return planar.detect(y); }, parallel);
  }
  const MlDetector ml(c, w);
  return run_chunks(c, snr, n, opts, [&](const Vec3& y) { return ml.detect(y); }, parallel);
}

}  // namespace

ConfusionMatrix run_confusion(const Constellation3D& c, const LinkSnr& snr, std::uint64_t n, DetectorKind detector,
                              const McOptions& opts) {
  return dispatch(c, snr, n, detector, opts, true);
}

ConfusionMatrix run_confusion_serial(const Constellation3D& c, const LinkSnr& snr, std::uint64_t n,
                                     DetectorKind detector, const McOptions& opts) {
  return dispatch(c, snr, n, detector, opts, false);
}

double sep_from_confusion(const ConfusionMatrix& cm) {
  if (cm.n_total == 0) throw DomainError("empty confusion matrix");
  return static_cast<double>(cm.errors()) / static_cast<double>(cm.n_total);
}

double sep_stderr(const ConfusionMatrix& cm) {
  const double p = sep_from_confusion(cm);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(cm.n_total));
}

double mi_discrete(const ConfusionMatrix& cm) {
  if (cm.n_total == 0) throw DomainError("empty confusion matrix");
  const int m = cm.order;
  std::vector<double> cond(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> column(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const auto row = static_cast<double>(cm.row_sum(i));
    if (row == 0) continue;
    for (int j = 0; j < m; ++j) {
      cond[static_cast<std::size_t>(i) * m + j] = static_cast<double>(cm.at(i, j)) / row;
      column[j] += cond[static_cast<std::size_t>(i) * m + j];
    }
  }
  double acc = 0;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const double p = cond[static_cast<std::size_t>(i) * m + j];
      if (p > 0) acc += p / m * std::log2(p / column[j]);
    }
  return std::clamp(std::log2(static_cast<double>(m)) + acc, 0.0, std::log2(static_cast<double>(m)));
}

ContinuousInputSpec ContinuousInputSpec::gaussian(double sigma_x_sq, double theta, double i_d) {
  return {InputFamily::gaussian, sigma_x_sq, std::numbers::sqrt2 * std::cos(theta),
          std::numbers::sqrt2 * std::sin(theta), i_d};
}

ContinuousInputSpec ContinuousInputSpec::chi_square(double sigma_x_sq) {
  return {InputFamily::scaled_chi_square_1, sigma_x_sq, 1.0, 1.0, 0.0};
}

Vec3 sample_continuous(const ContinuousInputSpec& spec, RngStream& rng) {
  double x_i, x_q;
  if (spec.family == InputFamily::gaussian) {
    const double sd = std::sqrt(spec.sigma_x_sq);
    x_i = sd * rng.normal();
    x_q = sd * rng.normal();
  } else {
    // E[(s Z^2)^2] = 3 s^2 = sigma_x^2.
    const double scale = std::sqrt(spec.sigma_x_sq / 3.0);
    const double z_i = rng.normal();
    const double z_q = rng.normal();
    x_i = scale * z_i * z_i;
    x_q = scale * z_q * z_q;
  }
  const double x_o = (spec.a1 * x_i + spec.a2 * x_q + spec.i_d) / std::sqrt(1.0 + spec.i_d * spec.i_d);
  return {x_i, x_q, x_o};
}

namespace {

struct Mixture {
  std::vector<double> mx, my, mz;
  [[nodiscard]] std::size_t size() const { return mx.size(); }
};

// log of (1/K) sum_k exp(-1/2 [g1 |y_rf - m_rf|^2 + g2 (y_o - m_o)^2]).
double log_mixture(const Vec3& y, const Mixture& mix, double g1, double g2, std::vector<double>& scratch) {
  const std::size_t k = mix.size();
  scratch.resize(k);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const double dx = y[0] - mix.mx[j];
    const double dy = y[1] - mix.my[j];
    const double dz = y[2] - mix.mz[j];
    const double e = -0.5 * (g1 * (dx * dx + dy * dy) + g2 * dz * dz);
    scratch[j] = e;
    top = std::max(top, e);
  }
  double sum = 0;
  for (std::size_t j = 0; j < k; ++j) sum += std::exp(scratch[j] - top);
  return top + std::log(sum / static_cast<double>(k));
}

// MI = mean_n[-log2 fhat(y_n)] - 1/2 log2((2 pi e)^3 det N); the Gaussian
// normalizers cancel, leaving -ln(mixture)/ln2 - 1.5 log2(e) per sample.
MiEstimate nested_estimate(const std::vector<Vec3>& outer, const Mixture& mix, const LinkSnr& snr, int workers) {
  const auto n = static_cast<std::int64_t>(outer.size());
  std::vector<double> value(outer.size());
  const double g1 = snr.gamma1_sq, g2 = snr.gamma2_sq;
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      value[i] = (-log_mixture(outer[i], mix, g1, g2, scratch) - 1.5) / std::numbers::ln2;
    }
  }

  constexpr int groups = 20;
  std::vector<double> group_sum(groups, 0.0);
  std::vector<std::int64_t> group_n(groups, 0);
  double total = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    group_sum[i % groups] += value[i];
    ++group_n[i % groups];
    total += value[i];
  }
  std::vector<double> loo(groups);
  double loo_mean = 0;
  for (int g = 0; g < groups; ++g) {
    loo[g] = (total - group_sum[g]) / static_cast<double>(n - group_n[g]);
    loo_mean += loo[g] / groups;
  }
  double var = 0;
  for (int g = 0; g < groups; ++g) var += (loo[g] - loo_mean) * (loo[g] - loo_mean);
  var *= static_cast<double>(groups - 1) / groups;
  return {total / static_cast<double>(n), std::sqrt(var)};
}

void check_noise(const LinkSnr& snr) {
  if (!(std::isfinite(snr.gamma1_sq) && std::isfinite(snr.gamma2_sq) && snr.gamma1_sq > 0 && snr.gamma2_sq > 0)) {
    throw DomainError("degenerate noise covariance");
  }
}

}  // namespace

MiEstimate mi_continuous_nested(const ContinuousInputSpec& spec, const LinkSnr& snr, int n_outer, int n_inner,
                                std::uint64_t seed, int workers) {
  check_noise(snr);
  if (n_outer < 1000 || n_inner < 1000) throw ConfigError("nested MI needs n_outer, n_inner >= 1000");

  Mixture mix;
  mix.mx.resize(n_inner), mix.my.resize(n_inner), mix.mz.resize(n_inner);
  RngStream inner(seed, stream_id(Purpose::continuous_inner, 0));
  for (int k = 0; k < n_inner; ++k) {
    const Vec3 m = sample_continuous(spec, inner);
    mix.mx[k] = m[0], mix.my[k] = m[1], mix.mz[k] = m[2];
  }

  std::vector<Vec3> outer(n_outer);
  RngStream rng(seed, stream_id(Purpose::continuous_outer, 0));
  for (auto& y : outer) {
    const Vec3 m = sample_continuous(spec, rng);
    const Vec3 n = noise_sample(snr, rng);
    y = {m[0] + n[0], m[1] + n[1], m[2] + n[2]};
  }
  return nested_estimate(outer, mix, snr, workers);
}

MiEstimate mi_constellation_nested(const Constellation3D& c, const LinkSnr& snr, int n_outer, std::uint64_t seed,
                                   int workers) {
  check_noise(snr);
  if (n_outer < 1000) throw ConfigError("nested MI needs n_outer >= 1000");
  Mixture mix;
  for (const auto& p : c.points) mix.mx.push_back(p[0]), mix.my.push_back(p[1]), mix.mz.push_back(p[2]);

  std::vector<Vec3> outer(n_outer);
  RngStream rng(seed, stream_id(Purpose::continuous_outer, 1));
  for (auto& y : outer) {
    const Vec3& x = c.points[rng.below(c.size())];
    const Vec3 n = noise_sample(snr, rng);
    y = {x[0] + n[0], x[1] + n[1], x[2] + n[2]};
  }
  return nested_estimate(outer, mix, snr, workers);
}

}  // namespace xband
