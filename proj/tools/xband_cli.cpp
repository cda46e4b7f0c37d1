// xband: command-line runner for cross-band modulation experiments.
#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "xband/analysis.hpp"
#include "xband/detection.hpp"
#include "xband/error.hpp"
#include "xband/linopt.hpp"
#include "xband/sweep.hpp"

using namespace xband;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool quick = false;
  bool no_timestamp = false;
  std::string output;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "JSON experiment config");
  sub->add_option("--seed", o.seed, "RNG seed");
  sub->add_option("--workers", o.workers, "OpenMP worker count (0: default)");
  sub->add_flag("--quick", o.quick, "1e6 symbols instead of 1e7");
  sub->add_flag("--no-timestamp", o.no_timestamp, "omit the generated-at comment line");
  sub->add_option("-o,--output", o.output, "output path (default: config output or stdout)");
  sub->allow_extras();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

enum class GridKind { sep, mi };

// Config file, then `--key value` extras, then the dedicated flags.
ExperimentConfig load_config(const CLI::App* sub, const CommonOptions& o, GridKind grid) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : config_from_json(read_file(o.config_path));
  const auto extras = sub->remaining();
  for (std::size_t k = 0; k < extras.size(); ++k) {
    std::string tok = extras[k];
    if (!tok.starts_with("--")) throw ConfigError("unexpected argument '" + tok + "'");
    tok = tok.substr(2);
    std::string value;
    if (const auto eq = tok.find('='); eq != std::string::npos) {
      value = tok.substr(eq + 1);
      tok.resize(eq);
    } else {
      if (k + 1 >= extras.size()) throw ConfigError("missing value for --" + tok);
      value = extras[++k];
    }
    std::ranges::replace(tok, '-', '_');
    apply_override(cfg, tok, value);
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.quick) cfg.n_symbols = 1'000'000;
  if (!o.output.empty()) cfg.output = o.output;
  if (cfg.gamma1_db.empty()) cfg.gamma1_db = grid == GridKind::sep ? db_range(0, 34, 1) : db_range(-20, 20, 1);
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

std::string stamp_line(bool suppressed) {
  if (suppressed) return {};
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return std::string("# generated ") + buf + '\n';
}

std::string header_line(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << "# " << kVersion << " m=" << cfg.order << " gamma2_db=" << format_real(cfg.gamma2_db)
    << " n_theta=" << cfg.n_theta << '\n';
  return s.str();
}

Constellation3D build_scheme(const ExperimentConfig& cfg, double gamma1_db, std::optional<double> theta) {
  const LinkSnr snr = LinkSnr::from_db(gamma1_db, cfg.gamma2_db);
  switch (cfg.scheme) {
    case Scheme::linear: {
      const QamGrid grid = make_qam(cfg.order);
      double t = 0;
      if (theta) {
        t = *theta;
      } else {
        P1Options opts;
        opts.n_theta = cfg.n_theta;
        opts.workers = cfg.workers;
        t = solve_p1(grid, snr, opts).theta_star;
      }
      return build_linear_constellation(grid, make_linear_map(grid, t));
    }
    case Scheme::dnn_gen: {
      ShapingConfig sc = cfg.shaping;
      sc.snr = snr;
      if (sc.workers == 0) sc.workers = cfg.workers;
      return to_constellation(train_shaper(make_qam(cfg.order), sc));
    }
    case Scheme::mcbm: return build_mcbm_constellation(make_qam(cfg.order));
    case Scheme::cbpam: return build_cbpam_constellation(cfg.order);
    default: throw ConfigError("scheme " + std::string(to_string(cfg.scheme)) + " has no finite constellation");
  }
}

int run_simulate(const CLI::App* sub, const CommonOptions& o, const std::string& confusion_path) {
  ExperimentConfig cfg = load_config(sub, o, GridKind::sep);
  if (!confusion_path.empty()) {
    if (cfg.gamma1_db.size() != 1) throw ConfigError("--confusion needs exactly one gamma1 point");
    cfg.validate();
    const Constellation3D c = build_scheme(cfg, cfg.gamma1_db.front(), std::nullopt);
    McOptions mc{cfg.seed, cfg.chunk, cfg.workers};
    const ConfusionMatrix cm =
        run_confusion(c, LinkSnr::from_db(cfg.gamma1_db.front(), cfg.gamma2_db), cfg.n_symbols, cfg.detector, mc);
    std::ostringstream s;
    write_confusion_csv(s, cm);
    emit(confusion_path, s.str());
  }
  emit(cfg.output, sweep_csv(cfg, run_sweep(cfg), !o.no_timestamp));
  return 0;
}

int run_optimize_linear(const CLI::App* sub, const CommonOptions& o) {
  const ExperimentConfig cfg = load_config(sub, o, GridKind::sep);
  const QamGrid grid = make_qam(cfg.order);
  std::ostringstream s;
  s << header_line(cfg) << stamp_line(o.no_timestamp);
  s << "gamma1_db,gamma2_db,theta_star,k1,k2,k1p,k2p,dmin,dsecond\n";
  P1Options opts;
  opts.n_theta = cfg.n_theta;
  opts.workers = cfg.workers;
  for (const double g1 : cfg.gamma1_db) {
    const P1Solution sol = solve_p1(grid, LinkSnr::from_db(g1, cfg.gamma2_db), opts);
    s << format_real(g1) << ',' << format_real(cfg.gamma2_db) << ',' << format_real(sol.theta_star) << ','
      << sol.first.k1 << ',' << sol.first.k2 << ',' << sol.second.k1 << ',' << sol.second.k2 << ','
      << format_real(sol.dmin()) << ',' << format_real(sol.dsecond()) << '\n';
  }
  emit(cfg.output, s.str());
  return 0;
}

int run_value_table(const CLI::App* sub, const CommonOptions& o, bool closed_form_mi) {
  const ExperimentConfig cfg = load_config(sub, o, closed_form_mi ? GridKind::mi : GridKind::sep);
  std::ostringstream s;
  s << header_line(cfg);
  if (closed_form_mi) {
    s << "# sigma_x_sq=" << format_real(cfg.sigma_x_sq) << " i_d=" << format_real(cfg.i_d)
      << " theta=" << format_real(cfg.theta) << '\n';
  }
  s << stamp_line(o.no_timestamp) << "gamma1_db,gamma2_db,value\n";
  const QamGrid grid = closed_form_mi ? QamGrid{} : make_qam(cfg.order);
  P1Options opts;
  opts.n_theta = cfg.n_theta;
  opts.workers = cfg.workers;
  for (const double g1 : cfg.gamma1_db) {
    const LinkSnr snr = LinkSnr::from_db(g1, cfg.gamma2_db);
    double value = 0;
    if (closed_form_mi) {
      LgcbParams p = LgcbParams::equalized(snr, cfg.sigma_x_sq, cfg.i_d);
      p.theta = cfg.theta;
      value = mi_lgcb(p);
    } else {
      value = sep_approx_linear(solve_p1(grid, snr, opts), cfg.order);
    }
    s << format_real(g1) << ',' << format_real(cfg.gamma2_db) << ',' << format_real(value) << '\n';
  }
  emit(cfg.output, s.str());
  return 0;
}

int run_mi_continuous(const CLI::App* sub, const CommonOptions& o) {
  ExperimentConfig cfg = load_config(sub, o, GridKind::mi);
  if (cfg.scheme != Scheme::lgcb && cfg.scheme != Scheme::lxcb) throw ConfigError("mi-continuous needs scheme lgcb or lxcb");
  cfg.metrics = {"mi-continuous"};
  emit(cfg.output, sweep_csv(cfg, run_sweep(cfg), !o.no_timestamp));
  return 0;
}

int run_shape_dnn(const CLI::App* sub, const CommonOptions& o, const std::string& prefix) {
  ExperimentConfig cfg = load_config(sub, o, GridKind::sep);
  const double g1 = cfg.train_gamma1_db.value_or(cfg.gamma1_db.front());
  cfg.shaping.snr = LinkSnr::from_db(g1, cfg.gamma2_db);
  if (cfg.shaping.workers == 0) cfg.shaping.workers = cfg.workers;
  cfg.shaping.validate();
  const QamGrid grid = make_qam(cfg.order);
  const LearnedConstellation learned = train_shaper(grid, cfg.shaping);
  const Constellation3D c = to_constellation(learned);
  std::ostringstream csv;
  write_constellation_csv(csv, c);
  emit(prefix + ".csv", csv.str());
  emit(prefix + ".json", constellation_sidecar_json(c) + '\n');
  emit(prefix + ".network.json", network_json(learned) + '\n');
  const MetricWeights w = intensity_weights(cfg.shaping.snr);
  std::cout << "loss," << format_real(learned.loss.total) << "\nrestart," << learned.restart << "\ndmin,"
            << format_real(min_pairwise_dsq(c, w)) << "\nmean_intensity," << format_real(mean_optical(c)) << '\n';
  return 0;
}

int run_export(const CLI::App* sub, const CommonOptions& o, std::optional<double> theta, const std::string& prefix) {
  const ExperimentConfig cfg = load_config(sub, o, GridKind::sep);
  const Constellation3D c = build_scheme(cfg, cfg.gamma1_db.front(), theta);
  std::ostringstream csv;
  write_constellation_csv(csv, c);
  if (prefix.empty()) {
    std::cout << csv.str();
  } else {
    emit(prefix + ".csv", csv.str());
    emit(prefix + ".json", constellation_sidecar_json(c) + '\n');
  }
  return 0;
}

int run_compare(const std::vector<std::string>& paths, const std::vector<double>& targets, const std::string& output) {
  std::vector<std::vector<ResultRow>> sources;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw SchemaError("cannot open " + p);
    sources.push_back(read_results(in));
  }
  emit(output, gap_csv(compare_report(sources, targets)));
  return 0;
}

int run_bench_detect(const std::vector<int>& orders, std::uint64_t n, double g1, double g2) {
  const LinkSnr snr = LinkSnr::from_db(g1, g2);
  std::cout << "detector,m,symbols,seconds,symbols_per_sec,max_candidates\n";
  for (const int m : orders) {
    const QamGrid grid = make_qam(m);
    const P1Solution sol = solve_p1(grid, snr);
    const Constellation3D c = build_linear_constellation(grid, make_linear_map(grid, sol.theta_star));
    const MetricWeights w = metric_weights(snr, c);
    const MlDetector ml(c, w);
    const PlanarDetector fast(grid, *c.map, w);
    const auto pts = detection_points(c, w.frame);
    RngStream rng(1, stream_id(Purpose::test, 0));
    std::vector<Vec3> obs(n);
    for (auto& y : obs) {
      const Vec3 nz = noise_sample(snr, rng);
      const Vec3& x = pts[rng.below(m)];
      y = {x[0] + nz[0], x[1] + nz[1], x[2] + nz[2] * c.map->norm};
    }
    const auto time = [&](const char* name, auto&& detect, int cands) {
      const auto t0 = std::chrono::steady_clock::now();
      volatile std::uint64_t sink = 0;
      for (const auto& y : obs) sink = sink + static_cast<std::uint64_t>(detect(y).index);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << name << ',' << m << ',' << n << ',' << format_sig(s, 6) << ','
                << format_sig(static_cast<double>(n) / s, 6) << ',' << cands << '\n';
    };
    time("ml", [&](const Vec3& y) { return ml.detect(y); }, m);
    time("fast", [&](const Vec3& y) { return fast.detect(y); }, fast.max_candidates());
    time("round", [&](const Vec3& y) { return fast.round_only(y); }, 1);
  }
  return 0;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const InvalidOrder*>(&e)) return "invalid_order";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const TrainingFailure*>(&e)) return "training";
  return "internal";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) + ": RF/optical cross-band modulation simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOptions common;
  std::string confusion_path;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo and closed-form sweep, one CSV row per metric");
  add_common(simulate, common);
  simulate->add_option("--confusion", confusion_path, "also write the confusion matrix (single gamma1 point)");

  auto* optimize = app.add_subcommand("optimize-linear", "optimal mapping angle per gamma1 point");
  add_common(optimize, common);

  std::string prefix = "learned";
  auto* shape = app.add_subcommand("shape-dnn", "train a learned constellation");
  add_common(shape, common);
  shape->add_option("--prefix", prefix, "writes PREFIX.csv, PREFIX.json, PREFIX.network.json");

  auto* mi_closed = app.add_subcommand("mi-closed-form", "linear Gaussian benchmark MI");
  add_common(mi_closed, common);
  auto* sep_approx = app.add_subcommand("sep-approx", "two-pair SEP approximation for the linear scheme");
  add_common(sep_approx, common);
  auto* mi_cont = app.add_subcommand("mi-continuous", "nested Monte Carlo MI for continuous inputs");
  add_common(mi_cont, common);

  std::optional<double> theta;
  std::string export_prefix;
  auto* exporter = app.add_subcommand("export-constellation", "write the constellation of a scheme");
  add_common(exporter, common);
  exporter->add_option("--theta", theta, "fixed mapping angle for the linear scheme (default: optimized)");
  exporter->add_option("--prefix", export_prefix, "writes PREFIX.csv and PREFIX.json (default: CSV to stdout)");

  std::vector<std::string> compare_paths;
  std::vector<double> targets{1e-2, 1e-3};
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "horizontal SEP gaps between result files");
  compare->add_option("files", compare_paths, "result CSV files")->required()->check(CLI::ExistingFile);
  compare->add_option("--targets", targets, "target SEP levels");
  compare->add_option("-o,--output", compare_out, "output path (default: stdout)");

  std::vector<int> bench_orders{4, 16, 64, 256};
  std::uint64_t bench_n = 1'000'000;
  double bench_g1 = 15, bench_g2 = 20;
  auto* bench = app.add_subcommand("bench-detect", "detector throughput, exhaustive vs planar");
  bench->add_option("--m", bench_orders, "constellation orders");
  bench->add_option("-n", bench_n, "observations per detector");
  bench->add_option("--gamma1-db", bench_g1);
  bench->add_option("--gamma2-db", bench_g2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error,usage," << e.what() << '\n';
    return 64;
  }

  try {
    if (*simulate) return run_simulate(simulate, common, confusion_path);
    if (*optimize) return run_optimize_linear(optimize, common);
    if (*shape) return run_shape_dnn(shape, common, prefix);
    if (*mi_closed) return run_value_table(mi_closed, common, true);
    if (*sep_approx) return run_value_table(sep_approx, common, false);
    if (*mi_cont) return run_mi_continuous(mi_cont, common);
    if (*exporter) return run_export(exporter, common, theta, export_prefix);
    if (*compare) return run_compare(compare_paths, targets, compare_out);
    if (*bench) return run_bench_detect(bench_orders, bench_n, bench_g1, bench_g2);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::ranges::replace(msg, '\n', ' ');
    std::cerr << "error," << error_kind(e) << ',' << msg << '\n';
    return error_kind(e) == "internal" ? 70 : 65;
  }
  return 0;
}
