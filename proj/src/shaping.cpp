#include "xband/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include "json.hpp"
#include <omp.h>

#include "xband/error.hpp"

namespace xband {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].begin(), weights[l].end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void MlpParams::assign(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) throw ConfigError("parameter vector has the wrong length");
  auto it = flat.begin();
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy_n(it, weights[l].size(), weights[l].begin());
    it += static_cast<std::ptrdiff_t>(weights[l].size());
    std::copy_n(it, biases[l].size(), biases[l].begin());
    it += static_cast<std::ptrdiff_t>(biases[l].size());
  }
}

MlpParams MlpParams::zeros(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ConfigError("an MLP needs at least two layer sizes");
  MlpParams p;
  p.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l + 1] < 1) throw ConfigError("layer sizes must be positive");
    p.weights.emplace_back(static_cast<std::size_t>(sizes[l]) * sizes[l + 1], 0.0);
    p.biases.emplace_back(sizes[l + 1], 0.0);
  }
  return p;
}

MlpParams MlpParams::init(const std::vector<int>& sizes, RngStream& rng) {
  MlpParams p = zeros(sizes);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double sd = std::sqrt(2.0 / sizes[l]);
    for (auto& w : p.weights[l]) w = sd * rng.normal();
  }
  for (auto& b : p.biases[0]) b = rng.normal();
  // Outputs start near softplus(0.5413) = 1 with a moderate spread.
  auto& last = p.weights.back();
  for (auto& w : last) w *= 0.5;
  for (auto& b : p.biases.back()) b = std::log(std::expm1(1.0));
  return p;
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Pointwise nets take one column per symbol; joint nets take all 2M
// coordinates as a single column. Both layouts store x_I, x_Q of symbol j
// at flat positions 2j and 2j + 1.
Eigen::MatrixXd grid_inputs(const QamGrid& grid, int input_size) {
  if (input_size != 2 && input_size != 2 * grid.order) throw ConfigError("network input size must be 2 or 2M");
  Eigen::MatrixXd x(input_size, 2 * grid.order / input_size);
  for (int j = 0; j < grid.order; ++j) x.data()[2 * j] = grid.points[j][0], x.data()[2 * j + 1] = grid.points[j][1];
  return x;
}

// Read-only view of the layer weights, either from MlpParams or straight
// from a flat parameter vector.
struct Layers {
  std::vector<int> sizes;
  std::vector<const double*> w;
  std::vector<const double*> b;
  std::size_t count = 0;
};

Layers layers_of(const MlpParams& net) {
  Layers v{net.sizes, {}, {}, net.parameter_count()};
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    v.w.push_back(net.weights[l].data());
    v.b.push_back(net.biases[l].data());
  }
  return v;
}

Layers layers_of(const std::vector<int>& sizes, const double* flat) {
  Layers v{sizes, {}, {}, 0};
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    v.w.push_back(flat + v.count);
    v.count += static_cast<std::size_t>(sizes[l]) * sizes[l + 1];
    v.b.push_back(flat + v.count);
    v.count += sizes[l + 1];
  }
  return v;
}

// Pre-activations of every layer for the whole grid batch.
struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> act;  // act[0] is the input
  std::vector<double> z;
};

ForwardPass forward(const Layers& net, const Eigen::MatrixXd& input) {
  ForwardPass fp;
  fp.act.push_back(input);
  const std::size_t n_layers = net.w.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const ConstMatMap w(net.w[l], net.sizes[l + 1], net.sizes[l]);
    const Eigen::Map<const Eigen::VectorXd> b(net.b[l], net.sizes[l + 1]);
    Eigen::MatrixXd pre = w * fp.act.back();
    pre.colwise() += b;
    fp.pre.push_back(pre);
    if (l + 1 < n_layers) fp.act.push_back(pre.cwiseMax(0.0));
  }
  const auto& out = fp.pre.back();
  fp.z.resize(out.size());
  for (Eigen::Index j = 0; j < out.size(); ++j) fp.z[j] = softplus(out.data()[j]);
  return fp;
}

std::vector<double> backward(const Layers& net, const ForwardPass& fp, const std::vector<double>& dz) {
  const std::size_t n_layers = net.w.size();
  const auto& out = fp.pre.back();
  Eigen::MatrixXd delta(out.rows(), out.cols());
  for (Eigen::Index j = 0; j < out.size(); ++j) delta.data()[j] = dz[j] * sigmoid(out.data()[j]);

  std::vector<double> grad(net.count);
  std::vector<std::size_t> offset(n_layers);
  for (std::size_t l = 0, o = 0; l < n_layers; ++l) {
    offset[l] = o;
    o += static_cast<std::size_t>(net.sizes[l] + 1) * net.sizes[l + 1];
  }
  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t n_w = static_cast<std::size_t>(net.sizes[l]) * net.sizes[l + 1];
    MatMap gw(grad.data() + offset[l], net.sizes[l + 1], net.sizes[l]);
    gw = delta * fp.act[l].transpose();
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offset[l] + n_w, net.sizes[l + 1]);
    gb = delta.rowwise().sum();
    if (l == 0) break;
    const ConstMatMap w(net.w[l], net.sizes[l + 1], net.sizes[l]);
    Eigen::MatrixXd back = w.transpose() * delta;
    delta = back.cwiseProduct((fp.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return grad;
}

// Loss pieces in a form that survives high SNR: L_d can be far below the
// smallest double while its gradient direction still matters.
struct LossEval {
  double log_ld = 0;   // log L_d
  double le = 0;       // L_e
  double log_total = 0;
  std::vector<double> dlog_total;  // d log L / dz
};

struct PairTable {
  int m = 0;
  std::vector<double> rf;  // -kappa * RF part of d_ij^2
  double opt_scale = 0;    // kappa * w_o
};

PairTable pair_table(const QamGrid& grid, const MetricWeights& w, double kappa) {
  PairTable t;
  t.m = grid.order;
  t.rf.resize(static_cast<std::size_t>(t.m) * t.m);
  for (int i = 0; i < t.m; ++i)
    for (int j = 0; j < t.m; ++j) {
      const double di = grid.points[i][0] - grid.points[j][0];
      const double dq = grid.points[i][1] - grid.points[j][1];
      t.rf[static_cast<std::size_t>(i) * t.m + j] = -kappa * (w.w_i * di * di + w.w_q * dq * dq);
    }
  t.opt_scale = kappa * w.w_o;
  return t;
}

LossEval evaluate(const PairTable& t, const std::vector<double>& z, double lambda, bool with_grad) {
  const int m = t.m;
  std::vector<double> expo(static_cast<std::size_t>(m) * m, -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const double dz = z[i] - z[j];
      const double e = t.rf[static_cast<std::size_t>(i) * m + j] - t.opt_scale * dz * dz;
      expo[static_cast<std::size_t>(i) * m + j] = e;
      top = std::max(top, e);
    }
  double sum = 0;
  for (const double e : expo) sum += std::exp(e - top);

  LossEval out;
  out.log_ld = top + std::log(sum);
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / m;
  out.le = (mean - 1.0) * (mean - 1.0);
  const double log_pen = lambda * out.le > 0 ? std::log(lambda * out.le) : -std::numeric_limits<double>::infinity();
  const double hi = std::max(out.log_ld, log_pen);
  out.log_total = hi + std::log(std::exp(out.log_ld - hi) + std::exp(log_pen - hi));
  if (!with_grad) return out;

  // d log L/dz = (L_d/L) d log L_d/dz + (lambda/L) dL_e/dz
  const double share_d = std::exp(out.log_ld - out.log_total);
  // lambda dL_e/dz / L = share_e * 2 / (M (mean - 1)), safe when L underflows
  const double pen_term = out.le > 0 ? std::exp(log_pen - out.log_total) * 2.0 / (m * (mean - 1.0)) : 0.0;
  out.dlog_total.assign(m, 0.0);
  for (int j = 0; j < m; ++j) {
    double acc = 0;
    for (int i = 0; i < m; ++i) {
      if (i == j) continue;
      const double p = std::exp(expo[static_cast<std::size_t>(i) * m + j] - out.log_ld);
      acc += p * (z[j] - z[i]);
    }
    // Both (i,j) and (j,i) terms, each with d/dz_j of -kappa w_o (z_i - z_j)^2.
    out.dlog_total[j] = share_d * (-4.0 * t.opt_scale * acc);
    out.dlog_total[j] += pen_term;
  }
  return out;
}

MetricWeights training_weights(const ShapingConfig& cfg) { return intensity_weights(cfg.snr); }

// Objective over a flat parameter vector: log L and its gradient.
class Objective {
 public:
  Objective(const QamGrid& grid, const ShapingConfig& cfg)
      : cfg_(cfg), grid_(grid), table_(pair_table(grid, training_weights(cfg), cfg.kappa)) {
    if (cfg.mode == ShapingMode::network) use_shape(MlpParams::zeros(cfg.layer_sizes(grid.order)));
  }

  // Network shape taken from an existing parameter set.
  void use_shape(const MlpParams& net) {
    cfg_.mode = ShapingMode::network;
    sizes_ = net.sizes;
    count_ = net.parameter_count();
    input_ = grid_inputs(grid_, net.sizes.front());
  }

  [[nodiscard]] std::vector<double> intensities(const std::vector<double>& theta) {
    if (cfg_.mode == ShapingMode::direct) {
      std::vector<double> z(theta.size());
      std::transform(theta.begin(), theta.end(), z.begin(), softplus);
      return z;
    }
    if (theta.size() != count_) throw ConfigError("parameter vector has the wrong length");
    return forward(layers_of(sizes_, theta.data()), input_).z;
  }

  LossEval value(const std::vector<double>& theta) { return evaluate(table_, intensities(theta), cfg_.lambda, false); }

  LossEval gradient(const std::vector<double>& theta, std::vector<double>& grad) {
    if (cfg_.mode == ShapingMode::direct) {
      std::vector<double> z = intensities(theta);
      LossEval ev = evaluate(table_, z, cfg_.lambda, true);
      grad.resize(theta.size());
      for (std::size_t j = 0; j < theta.size(); ++j) grad[j] = ev.dlog_total[j] * sigmoid(theta[j]);
      return ev;
    }
    if (theta.size() != count_) throw ConfigError("parameter vector has the wrong length");
    const Layers view = layers_of(sizes_, theta.data());
    const ForwardPass fp = forward(view, input_);
    LossEval ev = evaluate(table_, fp.z, cfg_.lambda, true);
    grad = backward(view, fp, ev.dlog_total);
    return ev;
  }

 private:
  ShapingConfig cfg_;
  QamGrid grid_;
  PairTable table_;
  Eigen::MatrixXd input_;
  std::vector<int> sizes_;
  std::size_t count_ = 0;
};

std::vector<double> initial_parameters(const QamGrid& grid, const ShapingConfig& cfg, int restart) {
  RngStream rng(cfg.seed, stream_id(Purpose::shaping_init, static_cast<std::uint64_t>(restart)));
  if (cfg.mode == ShapingMode::direct) {
    // softplus^-1(1) plus a small spread
    const double center = std::log(std::expm1(1.0));
    std::vector<double> u(grid.order);
    for (auto& v : u) v = center + 0.5 * rng.normal();
    return u;
  }
  return MlpParams::init(cfg.layer_sizes(grid.order), rng).flatten();
}

struct RunResult {
  std::vector<double> theta;
  LossEval loss;
  int accepted = 0;
  int rejected = 0;
};

RunResult run_adam(const QamGrid& grid, const ShapingConfig& cfg, int restart) {
  Objective obj(grid, cfg);
  RunResult r;
  r.theta = initial_parameters(grid, cfg, restart);
  const std::size_t n = r.theta.size();
  std::vector<double> m1(n, 0.0), m2(n, 0.0), grad, trial(n), dir(n);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  constexpr int max_halvings = 30;
  constexpr int patience = 50;  // consecutive stalled steps before stopping
  int stalled = 0;

  double lr = cfg.learning_rate;
  double b1t = 1, b2t = 1;
  r.loss = obj.gradient(r.theta, grad);
  for (int step = 0; step < cfg.steps; ++step) {
    if (!std::isfinite(r.loss.log_total)) throw TrainingFailure("shaping loss is not finite", step);
    b1t *= beta1, b2t *= beta2;
    for (std::size_t k = 0; k < n; ++k) {
      m1[k] = beta1 * m1[k] + (1 - beta1) * grad[k];
      m2[k] = beta2 * m2[k] + (1 - beta2) * grad[k] * grad[k];
      dir[k] = (m1[k] / (1 - b1t)) / (std::sqrt(m2[k] / (1 - b2t)) + eps);
    }
    bool accepted = false;
    for (int h = 0; h <= max_halvings && !accepted; ++h) {
      for (std::size_t k = 0; k < n; ++k) trial[k] = r.theta[k] - lr * dir[k];
      const LossEval ev = obj.value(trial);
      if (std::isnan(ev.log_total)) throw TrainingFailure("shaping loss is not finite", step);
      if (ev.log_total <= r.loss.log_total) {
        accepted = true;
      } else {
        lr *= 0.5;
        ++r.rejected;
      }
    }
    lr = cfg.learning_rate;
    if (!accepted) {
      if (++stalled >= patience) break;
      // The momentum direction is not a descent direction: restart the moments.
      std::fill(m1.begin(), m1.end(), 0.0);
      std::fill(m2.begin(), m2.end(), 0.0);
      b1t = b2t = 1;
      continue;
    }
    stalled = 0;
    r.theta.swap(trial);
    r.loss = obj.gradient(r.theta, grad);
    ++r.accepted;
  }
  return r;
}

LossTerms terms_from(const LossEval& ev, double lambda) {
  return {std::exp(ev.log_ld), ev.le, std::exp(ev.log_ld) + lambda * ev.le};
}

}  // namespace

std::vector<double> mlp_forward(const MlpParams& net, const QamGrid& grid) {
  return forward(layers_of(net), grid_inputs(grid, net.sizes.front())).z;
}

void ShapingConfig::validate() const {
  if (!(kappa >= 0 && lambda > 0 && learning_rate > 0)) throw ConfigError("kappa, lambda and learning rate must be positive");
  if (steps < 0 || restarts < 1 || hidden < 1 || hidden_layers < 1) throw ConfigError("invalid shaping schedule");
  snr.validate();
}

std::vector<int> ShapingConfig::layer_sizes(int order) const {
  const bool joint = layout == MlpLayout::joint;
  std::vector<int> sizes{joint ? 2 * order : 2};
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(hidden);
  sizes.push_back(joint ? order : 1);
  return sizes;
}

double loss_distance(const QamGrid& grid, const std::vector<double>& z, const MetricWeights& w, double kappa) {
  if (z.size() != grid.points.size()) throw ConfigError("one intensity per symbol expected");
  double sum = 0;
  for (int i = 0; i < grid.order; ++i)
    for (int j = 0; j < grid.order; ++j) {
      if (i == j) continue;
      const Vec3 a{grid.points[i][0], grid.points[i][1], z[i]};
      const Vec3 b{grid.points[j][0], grid.points[j][1], z[j]};
      const double di = a[0] - b[0], dq = a[1] - b[1], d_o = a[2] - b[2];
      sum += std::exp(-kappa * (w.w_i * di * di + w.w_q * dq * dq + w.w_o * d_o * d_o));
    }
  return sum;
}

double loss_energy(const std::vector<double>& z) {
  if (z.empty()) throw ConfigError("energy loss needs at least one intensity");
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
  return (mean - 1.0) * (mean - 1.0);
}

LossTerms shaping_loss(const QamGrid& grid, const std::vector<double>& z, const ShapingConfig& cfg) {
  const double ld = loss_distance(grid, z, training_weights(cfg), cfg.kappa);
  const double le = loss_energy(z);
  return {ld, le, ld + cfg.lambda * le};
}

std::vector<double> loss_gradient(const QamGrid& grid, const ShapingConfig& cfg, const MlpParams& net,
                                  LossTerms* loss) {
  Objective obj(grid, cfg);
  obj.use_shape(net);
  std::vector<double> grad;
  const LossEval ev = obj.gradient(net.flatten(), grad);
  // d L = L d log L
  const double total = std::exp(ev.log_total);
  for (auto& g : grad) g *= total;
  if (loss) *loss = terms_from(ev, cfg.lambda);
  return grad;
}

LearnedConstellation train_shaper(const QamGrid& grid, const ShapingConfig& cfg) {
  cfg.validate();
  std::vector<RunResult> runs(cfg.restarts);
  std::vector<std::string> failures(cfg.restarts);
  std::vector<std::size_t> failure_step(cfg.restarts, 0);
  const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (int k = 0; k < cfg.restarts; ++k) {
    try {
      runs[k] = run_adam(grid, cfg, k);
    } catch (const TrainingFailure& e) {
      failures[k] = e.what();
      failure_step[k] = e.step;
    }
  }
  for (int k = 0; k < cfg.restarts; ++k)
    if (!failures[k].empty()) throw TrainingFailure("restart " + std::to_string(k) + ": shaping diverged", failure_step[k]);

  int best = 0;
  for (int k = 1; k < cfg.restarts; ++k)
    if (runs[k].loss.log_total < runs[best].loss.log_total) best = k;

  LearnedConstellation out;
  out.grid = grid;
  out.config = cfg;
  out.restart = best;
  out.accepted_steps = runs[best].accepted;
  out.rejected_trials = runs[best].rejected;
  out.loss = terms_from(runs[best].loss, cfg.lambda);
  if (cfg.mode == ShapingMode::network) {
    out.network = MlpParams::zeros(cfg.layer_sizes(grid.order));
    out.network.assign(runs[best].theta);
    out.intensities = mlp_forward(out.network, grid);
  } else {
    out.intensities.resize(grid.order);
    std::transform(runs[best].theta.begin(), runs[best].theta.end(), out.intensities.begin(), softplus);
  }
  return out;
}

double grad_check(const QamGrid& grid, const ShapingConfig& cfg, const MlpParams& at) {
  const std::vector<double> analytic = loss_gradient(grid, cfg, at);
  double scale = 0;
  for (const double g : analytic) scale = std::max(scale, std::abs(g));

  RngStream rng(cfg.seed, stream_id(Purpose::grad_check, 0));
  const int n = static_cast<int>(analytic.size());
  constexpr double h = 1e-4;
  MlpParams probe = at;
  const std::vector<double> base = at.flatten();
  std::vector<double> theta = base;
  const auto loss_at = [&](const std::vector<double>& v) {
    probe.assign(v);
    return shaping_loss(grid, mlp_forward(probe, grid), cfg).total;
  };
  double worst = 0;
  for (int s = 0; s < std::min(200, n); ++s) {
    const int k = rng.below(n);
    theta[k] = base[k] + h;
    const double up = loss_at(theta);
    theta[k] = base[k] - h;
    const double down = loss_at(theta);
    theta[k] = base[k];
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6 * scale});
    if (denom > 0) worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

double grad_check(const QamGrid& grid, const ShapingConfig& cfg) {
  RngStream rng(cfg.seed, stream_id(Purpose::grad_check, 1));
  return grad_check(grid, cfg, MlpParams::init(cfg.layer_sizes(grid.order), rng));
}

Constellation3D to_constellation(const LearnedConstellation& learned) {
  return build_learned_constellation(learned.grid, learned.intensities);
}

std::string network_json(const LearnedConstellation& learned) {
  const ShapingConfig& c = learned.config;
  nlohmann::json j;
  j["sizes"] = learned.network.sizes;
  j["weights"] = learned.network.weights;
  j["biases"] = learned.network.biases;
  j["config"] = {{"kappa", c.kappa},
                 {"lambda", c.lambda},
                 {"learning_rate", c.learning_rate},
                 {"steps", c.steps},
                 {"restarts", c.restarts},
                 {"hidden", c.hidden},
                 {"hidden_layers", c.hidden_layers},
                 {"seed", c.seed},
                 {"gamma1_db", c.snr.gamma1_db()},
                 {"gamma2_db", c.snr.gamma2_db()},
                 {"mode", c.mode == ShapingMode::network ? "network" : "direct"},
                 {"layout", c.layout == MlpLayout::joint ? "joint" : "pointwise"},
                 {"distance", "squared weighted metric"}};
  j["loss"] = {{"distance", learned.loss.distance}, {"energy", learned.loss.energy}, {"total", learned.loss.total}};
  j["restart"] = learned.restart;
  j["intensities"] = learned.intensities;
  return j.dump(2);
}

}  // namespace xband
