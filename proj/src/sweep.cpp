#include "xband/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <sstream>

#include "json.hpp"

#include "xband/analysis.hpp"
#include "xband/detection.hpp"
#include "xband/error.hpp"
#include "xband/linopt.hpp"

namespace xband {

using nlohmann::json;

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::linear: return "linear";
    case Scheme::dnn_gen: return "dnn-gen";
    case Scheme::mcbm: return "mcbm";
    case Scheme::cbpam: return "cbpam";
    case Scheme::lgcb: return "lgcb";
    case Scheme::lxcb: return "lxcb";
  }
  return "?";
}

Scheme scheme_from_string(std::string_view name) {
  for (Scheme s : {Scheme::linear, Scheme::dnn_gen, Scheme::mcbm, Scheme::cbpam, Scheme::lgcb, Scheme::lxcb})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

namespace {

const std::vector<std::string>& allowed_metrics(Scheme s) {
  static const std::map<Scheme, std::vector<std::string>> table{
      {Scheme::linear, {"sep-mc", "sep-approx", "sep-bound", "mi-discrete", "mi-output", "theta-star", "dmin"}},
      {Scheme::dnn_gen, {"sep-mc", "mi-discrete", "mi-output", "dmin", "dmin-vs-linear"}},
      {Scheme::mcbm, {"sep-mc", "mi-discrete", "mi-output", "dmin"}},
      {Scheme::cbpam, {"sep-mc", "mi-discrete", "mi-output", "dmin"}},
      {Scheme::lgcb, {"mi-closed-form", "mi-continuous"}},
      {Scheme::lxcb, {"mi-continuous"}},
  };
  return table.at(s);
}

bool needs_confusion(const std::vector<std::string>& metrics) {
  return std::ranges::any_of(metrics, [](const std::string& m) { return m == "sep-mc" || m == "mi-discrete"; });
}

}  // namespace

std::vector<std::string> ExperimentConfig::effective_metrics() const {
  if (!metrics.empty()) return metrics;
  switch (scheme) {
    case Scheme::linear: return {"sep-mc", "sep-approx"};
    case Scheme::lgcb: return {"mi-closed-form"};
    case Scheme::lxcb: return {"mi-continuous"};
    default: return {"sep-mc"};
  }
}

void ExperimentConfig::validate() const {
  if (gamma1_db.empty()) throw ConfigError("gamma1 sweep is empty");
  for (const double g : gamma1_db)
    if (!std::isfinite(g)) throw ConfigError("gamma1 values must be finite");
  if (!std::isfinite(gamma2_db)) throw ConfigError("gamma2 must be finite");
  const auto used = effective_metrics();
  const auto& allowed = allowed_metrics(scheme);
  for (const auto& m : used) {
    if (std::ranges::find(allowed, m) == allowed.end()) {
      throw ConfigError("metric '" + m + "' does not apply to scheme " + std::string(to_string(scheme)));
    }
  }
  if (needs_confusion(used) && n_symbols < 10'000) throw ConfigError("Monte Carlo SEP runs need n >= 10000");
  if (chunk < 1) throw ConfigError("chunk must be positive");
  if (n_theta < 2) throw ConfigError("n_theta must be >= 2");
  if (detector == DetectorKind::fast && scheme != Scheme::linear) {
    throw ConfigError("fast detector requires the linear scheme");
  }
  if (scheme == Scheme::cbpam) {
    if (order < 2) throw InvalidOrder("CB-PAM order must be >= 2");
  } else if (scheme != Scheme::lgcb && scheme != Scheme::lxcb) {
    make_qam(order);
  }
  if (!(sigma_x_sq > 0) || i_d < 0) throw ConfigError("sigma_x_sq must be positive and i_d non-negative");
  if (mi_outer < 1000 || mi_inner < 1000) throw ConfigError("mi_outer and mi_inner must be >= 1000");
  if (scheme == Scheme::dnn_gen) shaping.validate();
}

std::vector<double> db_range(double start, double stop, double step) {
  if (!(step > 0) || stop < start) throw ConfigError("range needs step > 0 and stop >= start");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double v = start + k * step;
    if (v > stop + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

namespace {

std::vector<double> parse_gamma_list(const json& v) {
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) return v.get<std::vector<double>>();
  if (v.is_object()) return db_range(v.at("start").get<double>(), v.at("stop").get<double>(), v.at("step").get<double>());
  if (v.is_string()) {
    // "a:b:c" range or "a,b,c" list
    const std::string s = v.get<std::string>();
    std::vector<double> parts;
    std::stringstream ss(s);
    std::string tok;
    const char sep = s.find(':') != std::string::npos ? ':' : ',';
    while (std::getline(ss, tok, sep)) parts.push_back(std::stod(tok));
    if (sep == ':') {
      if (parts.size() != 3) throw ConfigError("range must be start:stop:step");
      return db_range(parts[0], parts[1], parts[2]);
    }
    return parts;
  }
  throw ConfigError("gamma1_db must be a number, list, range object or string");
}

void apply_shaping_key(ShapingConfig& s, const std::string& key, const json& v) {
  if (key == "kappa") s.kappa = v.get<double>();
  else if (key == "lambda") s.lambda = v.get<double>();
  else if (key == "learning_rate") s.learning_rate = v.get<double>();
  else if (key == "steps") s.steps = v.get<int>();
  else if (key == "restarts") s.restarts = v.get<int>();
  else if (key == "hidden") s.hidden = v.get<int>();
  else if (key == "hidden_layers") s.hidden_layers = v.get<int>();
  else if (key == "seed") s.seed = v.get<std::uint64_t>();
  else if (key == "layout") {
    const auto name = v.get<std::string>();
    if (name == "joint") s.layout = MlpLayout::joint;
    else if (name == "pointwise") s.layout = MlpLayout::pointwise;
    else throw ConfigError("shaping.layout must be joint or pointwise");
  } else if (key == "mode") {
    const auto name = v.get<std::string>();
    if (name == "network") s.mode = ShapingMode::network;
    else if (name == "direct") s.mode = ShapingMode::direct;
    else throw ConfigError("shaping.mode must be network or direct");
  } else {
    throw ConfigError("unknown shaping key '" + key + "'");
  }
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const json& v) {
  if (key.starts_with("shaping.")) return apply_shaping_key(cfg.shaping, key.substr(8), v);
  if (key == "shaping") {
    for (const auto& [k, val] : v.items()) apply_shaping_key(cfg.shaping, k, val);
  } else if (key == "scheme") cfg.scheme = scheme_from_string(v.get<std::string>());
  else if (key == "m") cfg.order = v.get<int>();
  else if (key == "gamma1_db") cfg.gamma1_db = parse_gamma_list(v);
  else if (key == "gamma2_db") cfg.gamma2_db = v.get<double>();
  else if (key == "n") cfg.n_symbols = v.get<std::uint64_t>();
  else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
  else if (key == "detector") cfg.detector = detector_from_string(v.get<std::string>());
  else if (key == "metrics") {
    if (v.is_string()) {
      cfg.metrics.clear();
      std::stringstream ss(v.get<std::string>());
      for (std::string tok; std::getline(ss, tok, ',');) cfg.metrics.push_back(tok);
    } else {
      cfg.metrics = v.get<std::vector<std::string>>();
    }
  } else if (key == "chunk") cfg.chunk = v.get<int>();
  else if (key == "workers") cfg.workers = v.get<int>();
  else if (key == "n_theta") cfg.n_theta = v.get<int>();
  else if (key == "train_gamma1_db") {
    if (v.is_null()) cfg.train_gamma1_db.reset();
    else cfg.train_gamma1_db = v.get<double>();
  } else if (key == "sigma_x_sq") cfg.sigma_x_sq = v.get<double>();
  else if (key == "i_d") cfg.i_d = v.get<double>();
  else if (key == "theta") cfg.theta = v.get<double>();
  else if (key == "mi_outer") cfg.mi_outer = v.get<int>();
  else if (key == "mi_inner") cfg.mi_inner = v.get<int>();
  else if (key == "output") cfg.output = v.get<std::string>();
  else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

ExperimentConfig config_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) apply_key(cfg, key, value);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

void apply_override(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = std::string(value);
  try {
    apply_key(cfg, std::string(key), v);
  } catch (const json::exception& e) {
    throw ConfigError("bad value for " + std::string(key) + ": " + e.what());
  }
}

namespace {

struct Built {
  Constellation3D constellation;
  std::optional<P1Solution> p1;
  double linear_dmin = 0;  // dnn-gen only
};

Constellation3D linear_at(const QamGrid& grid, const LinkSnr& snr, int n_theta, int workers, P1Solution* out) {
  P1Options opts;
  opts.n_theta = n_theta;
  opts.workers = workers;
  const P1Solution sol = solve_p1(grid, snr, opts);
  if (out) *out = sol;
  return build_linear_constellation(grid, make_linear_map(grid, sol.theta_star));
}

double dmin_of(const Constellation3D& c, const LinkSnr& snr) { return min_pairwise_dsq(c, metric_weights(snr, c)); }

// Trains at snr; retries once with the next seed when the result is closer
// packed than the optimized linear constellation, keeping the better one.
LearnedConstellation train_checked(const QamGrid& grid, ShapingConfig sc, const LinkSnr& snr, int n_theta,
                                   int workers) {
  sc.snr = snr;
  if (sc.workers == 0) sc.workers = workers;
  const double lin = dmin_of(linear_at(grid, snr, n_theta, workers, nullptr), snr);
  LearnedConstellation best = train_shaper(grid, sc);
  if (dmin_of(to_constellation(best), snr) < lin) {
    sc.seed += 1;
    LearnedConstellation again = train_shaper(grid, sc);
    if (dmin_of(to_constellation(again), snr) > dmin_of(to_constellation(best), snr)) best = std::move(again);
  }
  return best;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto metrics = cfg.effective_metrics();
  const std::string scheme(to_string(cfg.scheme));
  std::vector<ResultRow> rows;
  const auto emit = [&](double g1, const std::string& metric, double value, double se, std::uint64_t n,
                        std::uint64_t seed) { rows.push_back({scheme, g1, cfg.gamma2_db, metric, value, se, n, seed}); };

  McOptions mc;
  mc.seed = cfg.seed;
  mc.chunk = cfg.chunk;
  mc.workers = cfg.workers;

  std::optional<QamGrid> grid;
  if (cfg.scheme != Scheme::cbpam && cfg.scheme != Scheme::lgcb && cfg.scheme != Scheme::lxcb) grid = make_qam(cfg.order);

  std::optional<LearnedConstellation> shared;
  if (cfg.scheme == Scheme::dnn_gen && cfg.train_gamma1_db) {
    shared = train_checked(*grid, cfg.shaping, LinkSnr::from_db(*cfg.train_gamma1_db, cfg.gamma2_db), cfg.n_theta,
                           cfg.workers);
  }

  for (const double g1 : cfg.gamma1_db) {
    const LinkSnr snr = LinkSnr::from_db(g1, cfg.gamma2_db);

    if (cfg.scheme == Scheme::lgcb || cfg.scheme == Scheme::lxcb) {
      for (const auto& m : metrics) {
        if (m == "mi-closed-form") {
          LgcbParams p = LgcbParams::equalized(snr, cfg.sigma_x_sq, cfg.i_d);
          p.theta = cfg.theta;
          emit(g1, m, mi_lgcb(p), 0, 0, 0);
        } else {
          const auto spec = cfg.scheme == Scheme::lgcb ? ContinuousInputSpec::gaussian(cfg.sigma_x_sq, cfg.theta, cfg.i_d)
                                                       : ContinuousInputSpec::chi_square(cfg.sigma_x_sq);
          const MiEstimate e = mi_continuous_nested(spec, snr, cfg.mi_outer, cfg.mi_inner, cfg.seed, cfg.workers);
          emit(g1, m, e.value, e.std_error, static_cast<std::uint64_t>(cfg.mi_outer), cfg.seed);
        }
      }
      continue;
    }

    Built b;
    switch (cfg.scheme) {
      case Scheme::linear: {
        P1Solution sol;
        b.constellation = linear_at(*grid, snr, cfg.n_theta, cfg.workers, &sol);
        b.p1 = sol;
        break;
      }
      case Scheme::dnn_gen: {
        const LearnedConstellation learned =
            shared ? *shared : train_checked(*grid, cfg.shaping, snr, cfg.n_theta, cfg.workers);
        b.constellation = to_constellation(learned);
        break;
      }
      case Scheme::mcbm: b.constellation = build_mcbm_constellation(*grid); break;
      case Scheme::cbpam: b.constellation = build_cbpam_constellation(cfg.order); break;
      default: break;
    }

    std::optional<ConfusionMatrix> cm;
    if (needs_confusion(metrics)) cm = run_confusion(b.constellation, snr, cfg.n_symbols, cfg.detector, mc);

    for (const auto& m : metrics) {
      if (m == "sep-mc") {
        emit(g1, m, sep_from_confusion(*cm), sep_stderr(*cm), cm->n_total, cfg.seed);
      } else if (m == "mi-discrete") {
        emit(g1, m, mi_discrete(*cm), 0, cm->n_total, cfg.seed);
      } else if (m == "sep-approx") {
        emit(g1, m, sep_approx_linear(*b.p1, cfg.order), 0, 0, 0);
      } else if (m == "sep-bound") {
        emit(g1, m, sep_upper_bound(snr, b.constellation.map->i_d, cfg.order), 0, 0, 0);
      } else if (m == "theta-star") {
        emit(g1, m, b.p1->theta_star, 0, 0, 0);
      } else if (m == "dmin") {
        emit(g1, m, dmin_of(b.constellation, snr), 0, 0, 0);
      } else if (m == "dmin-vs-linear") {
        const double lin = dmin_of(linear_at(*grid, snr, cfg.n_theta, cfg.workers, nullptr), snr);
        emit(g1, m, dmin_of(b.constellation, snr) / lin, 0, 0, 0);
      } else if (m == "mi-output") {
        const MiEstimate e = mi_constellation_nested(b.constellation, snr, cfg.mi_outer, cfg.seed, cfg.workers);
        emit(g1, m, e.value, e.std_error, static_cast<std::uint64_t>(cfg.mi_outer), cfg.seed);
      }
    }
  }
  return rows;
}

std::string sweep_csv(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows, bool timestamp) {
  std::ostringstream out;
  out << "# " << kVersion << " scheme=" << to_string(cfg.scheme) << " m=" << cfg.order
      << " detector=" << to_string(cfg.detector) << " chunk=" << cfg.chunk << " n_theta=" << cfg.n_theta;
  if (cfg.scheme == Scheme::dnn_gen) {
    const auto& s = cfg.shaping;
    out << " kappa=" << format_real(s.kappa) << " lambda=" << format_real(s.lambda)
        << " lr=" << format_real(s.learning_rate) << " steps=" << s.steps << " restarts=" << s.restarts
        << " hidden=" << s.hidden << "x" << s.hidden_layers
        << " layout=" << (s.layout == MlpLayout::joint ? "joint" : "pointwise")
        << " mode=" << (s.mode == ShapingMode::network ? "network" : "direct") << " shaping_seed=" << s.seed;
    if (cfg.train_gamma1_db) out << " train_gamma1_db=" << format_real(*cfg.train_gamma1_db);
  }
  if (cfg.scheme == Scheme::lgcb || cfg.scheme == Scheme::lxcb) {
    out << " sigma_x_sq=" << format_real(cfg.sigma_x_sq) << " i_d=" << format_real(cfg.i_d)
        << " theta=" << format_real(cfg.theta) << " mi_inner=" << cfg.mi_inner;
  }
  if (cfg.scheme == Scheme::mcbm || cfg.scheme == Scheme::cbpam) out << " baseline=reimplementation";
  out << '\n';
  if (timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "# generated " << buf << '\n';
  }
  out << kResultHeader << '\n';
  for (const auto& r : rows) write_result_row(out, r);
  return out.str();
}

double sep_crossing_db(const std::vector<double>& gamma1_db, const std::vector<double>& sep,
                       const std::vector<std::uint64_t>& n, double target) {
  if (gamma1_db.size() != sep.size() || sep.size() != n.size()) throw SchemaError("curve columns differ in length");
  const auto floor_of = [&](std::size_t k) {
    return sep[k] > 0 ? sep[k] : 0.5 / static_cast<double>(std::max<std::uint64_t>(n[k], 1));
  };
  for (std::size_t k = 1; k < sep.size(); ++k) {
    const double a = floor_of(k - 1), b = floor_of(k);
    if (a > target && b <= target) {
      const double la = std::log10(a), lb = std::log10(b), lt = std::log10(target);
      return gamma1_db[k - 1] + (gamma1_db[k] - gamma1_db[k - 1]) * (la - lt) / (la - lb);
    }
  }
  if (!sep.empty() && floor_of(0) <= target) return gamma1_db.front();
  return std::nan("");
}

namespace {

struct Curve {
  std::string scheme;
  double gamma2_db;
  std::vector<double> g1;
  std::vector<double> sep;
  std::vector<std::uint64_t> n;
};

std::vector<Curve> curves_of(const std::vector<ResultRow>& rows) {
  std::vector<Curve> out;
  for (const auto& r : rows) {
    if (r.metric != "sep-mc") continue;
    auto it = std::ranges::find_if(out, [&](const Curve& c) { return c.scheme == r.scheme && c.gamma2_db == r.gamma2_db; });
    if (it == out.end()) {
      out.push_back({r.scheme, r.gamma2_db, {}, {}, {}});
      it = std::prev(out.end());
    }
    it->g1.push_back(r.gamma1_db);
    it->sep.push_back(r.value);
    it->n.push_back(r.n);
  }
  for (auto& c : out)
    if (!std::ranges::is_sorted(c.g1)) throw SchemaError("gamma1 values must be ascending within a curve");
  return out;
}

void compare_pair(const Curve& a, const Curve& b, const std::vector<double>& targets, std::vector<GapRow>& out) {
  if (a.g1 != b.g1) {
    throw SchemaError("gamma1 grids differ between " + a.scheme + " and " + b.scheme + " at gamma2 = " +
                      format_real(a.gamma2_db) + " dB");
  }
  for (const double t : targets) {
    const double ca = sep_crossing_db(a.g1, a.sep, a.n, t);
    const double cb = sep_crossing_db(b.g1, b.sep, b.n, t);
    out.push_back({a.gamma2_db, a.scheme, b.scheme, t, ca, cb, cb - ca});
  }
}

}  // namespace

std::vector<GapRow> compare_report(const std::vector<std::vector<ResultRow>>& sources,
                                   const std::vector<double>& targets) {
  std::vector<std::vector<Curve>> curves;
  for (const auto& s : sources) curves.push_back(curves_of(s));
  std::vector<GapRow> out;
  if (curves.size() == 1) {
    const auto& cs = curves.front();
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = i + 1; j < cs.size(); ++j)
        if (cs[i].gamma2_db == cs[j].gamma2_db) compare_pair(cs[i], cs[j], targets, out);
    return out;
  }
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (std::size_t j = i + 1; j < curves.size(); ++j)
      for (const auto& a : curves[i])
        for (const auto& b : curves[j])
          if (a.gamma2_db == b.gamma2_db) compare_pair(a, b, targets, out);
  return out;
}

std::string gap_csv(const std::vector<GapRow>& rows) {
  std::ostringstream out;
  out << kGapHeader << '\n';
  for (const auto& r : rows) {
    out << format_real(r.gamma2_db) << ',' << r.scheme_a << ',' << r.scheme_b << ',' << format_real(r.target) << ','
        << format_real(r.crossing_a_db) << ',' << format_real(r.crossing_b_db) << ',' << format_real(r.gap_db) << '\n';
  }
  return out.str();
}

}  // namespace xband
