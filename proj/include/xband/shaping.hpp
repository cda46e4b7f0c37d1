#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xband/channel.hpp"
#include "xband/constellation.hpp"

namespace xband {

/// MLP producing one intensity per QAM symbol, either pointwise
/// (2 -> 1 per symbol) or joint (2M -> M). ReLU hidden layers, softplus
/// output. Weights of layer l are stored row-major, sizes[l+1] x sizes[l].
struct MlpParams {
  std::vector<int> sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] std::vector<double> flatten() const;
  void assign(const std::vector<double>& flat);

  /// He-normal weights, unit-normal first-layer biases, output layer
  /// scaled so the initial intensities sit around 1.
  static MlpParams init(const std::vector<int>& sizes, RngStream& rng);
  static MlpParams zeros(const std::vector<int>& sizes);
};

/// Intensities z_j = net(x_I,j, x_Q,j) for every grid point.
std::vector<double> mlp_forward(const MlpParams& net, const QamGrid& grid);

enum class MlpLayout {
  pointwise,  // [2, H, ..., H, 1] applied to each symbol
  joint,      // [2M, H, ..., H, M] applied to the whole constellation
};

enum class ShapingMode {
  network,  // intensities produced by the MLP
  direct,   // z_j = softplus(u_j) with u free
};

struct ShapingConfig {
  double kappa = 1;
  double lambda = 100;
  double learning_rate = 1e-3;
  int steps = 20000;
  int restarts = 4;
  int hidden = 128;
  int hidden_layers = 3;
  std::uint64_t seed = 1;
  LinkSnr snr;
  ShapingMode mode = ShapingMode::network;
  MlpLayout layout = MlpLayout::joint;
  int workers = 0;

  /// Throws ConfigError on non-positive hyperparameters.
  void validate() const;
  [[nodiscard]] std::vector<int> layer_sizes(int order) const;
};

struct LossTerms {
  double distance = 0;
  double energy = 0;
  double total = 0;
};

struct LearnedConstellation {
  QamGrid grid;
  std::vector<double> intensities;
  ShapingConfig config;
  LossTerms loss;
  MlpParams network;      // empty in direct mode
  int restart = 0;        // index of the kept restart
  int accepted_steps = 0;
  int rejected_trials = 0;
};

/// sum_{i != j} exp(-kappa d_ij^2), d_ij^2 the weighted squared distance
/// between 3D points (grid point, z) with the optical axis taken as is.
double loss_distance(const QamGrid& grid, const std::vector<double>& z, const MetricWeights& w, double kappa);

/// (mean(z) - 1)^2
double loss_energy(const std::vector<double>& z);

LossTerms shaping_loss(const QamGrid& grid, const std::vector<double>& z, const ShapingConfig& cfg);

/// Adam on L_d + lambda L_e with monotone acceptance: a step that raises the
/// loss is retried at half the rate, the rate is restored after a success.
/// Keeps the lowest-loss restart. Throws TrainingFailure on a non-finite loss.
LearnedConstellation train_shaper(const QamGrid& grid, const ShapingConfig& cfg);

/// Max relative error between backprop and central differences (h = 1e-4)
/// over 200 random parameter coordinates. Errors are relative to
/// max(|analytic|, |numeric|, 1e-6 max|grad|).
double grad_check(const QamGrid& grid, const ShapingConfig& cfg);
double grad_check(const QamGrid& grid, const ShapingConfig& cfg, const MlpParams& at);

/// Analytic gradient of the total loss with respect to the flattened parameters.
std::vector<double> loss_gradient(const QamGrid& grid, const ShapingConfig& cfg, const MlpParams& net,
                                  LossTerms* loss = nullptr);

Constellation3D to_constellation(const LearnedConstellation& learned);

/// {"sizes":..., "weights":[...], "biases":[...], "config":{...}}
std::string network_json(const LearnedConstellation& learned);

}  // namespace xband
