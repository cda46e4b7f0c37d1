#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xband/estimate.hpp"
#include "xband/io.hpp"
#include "xband/shaping.hpp"

namespace xband {

inline constexpr std::string_view kVersion = "xband 1.0.0";

enum class Scheme { linear, dnn_gen, mcbm, cbpam, lgcb, lxcb };
std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);

struct ExperimentConfig {
  Scheme scheme = Scheme::linear;
  int order = 16;
  std::vector<double> gamma1_db;
  double gamma2_db = 10;
  std::uint64_t n_symbols = 10'000'000;
  std::uint64_t seed = 1;
  DetectorKind detector = DetectorKind::ml;
  std::vector<std::string> metrics;  // empty: scheme default
  int chunk = 1 << 16;
  int workers = 0;
  int n_theta = 16384;

  // dnn-gen
  ShapingConfig shaping;
  std::optional<double> train_gamma1_db;  // train once at this RF SNR instead of per point

  // lgcb / lxcb
  double sigma_x_sq = 0.5;
  double i_d = 0;
  double theta = 0.785398163397448;  // pi/4
  int mi_outer = 20000;
  int mi_inner = 20000;

  std::string output;

  /// Throws ConfigError when the sweep is empty, n < 1e4 for Monte Carlo
  /// SEP metrics, a metric does not apply to the scheme, and similar.
  void validate() const;
  [[nodiscard]] std::vector<std::string> effective_metrics() const;
};

/// Range helper: start, start+step, ... up to stop inclusive (with 1e-9 slack).
std::vector<double> db_range(double start, double stop, double step);

/// Builds a config from a JSON object; unknown keys throw ConfigError.
ExperimentConfig config_from_json(std::string_view json_text);
/// Applies one `key=value` style override using the JSON key names.
void apply_override(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// One row per (gamma1 point, metric) in sweep order.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg);

/// Comment lines describing the run, the CSV header and all rows.
std::string sweep_csv(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows, bool timestamp);

/// First gamma1 (dB) at which a decreasing SEP curve reaches `target`, by
/// linear interpolation of log10(SEP) between the bracketing grid points.
/// Zero estimates are replaced by 0.5/n. NaN when the curve never crosses.
double sep_crossing_db(const std::vector<double>& gamma1_db, const std::vector<double>& sep,
                       const std::vector<std::uint64_t>& n, double target);

struct GapRow {
  double gamma2_db = 0;
  std::string scheme_a;
  std::string scheme_b;
  double target = 0;
  double crossing_a_db = 0;
  double crossing_b_db = 0;
  double gap_db = 0;  // crossing_b - crossing_a: positive when a reaches the target earlier
};

inline constexpr std::string_view kGapHeader = "gamma2_db,scheme_a,scheme_b,target_sep,crossing_a_db,crossing_b_db,gap_db";

/// Horizontal SEP gaps between the sep-mc curves of different sources at
/// matching gamma2. With one source, every scheme pair inside it is
/// compared. Throws SchemaError when matched curves use different gamma1 grids.
std::vector<GapRow> compare_report(const std::vector<std::vector<ResultRow>>& sources,
                                   const std::vector<double>& targets = {1e-2, 1e-3});
std::string gap_csv(const std::vector<GapRow>& rows);

}  // namespace xband
