#include "bjj/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <string_view>

#include <CLI11.hpp>

#include "bjj/analytic.hpp"
#include "bjj/errors.hpp"
#include "bjj/estimation.hpp"
#include "bjj/io.hpp"
#include "bjj/numeric.hpp"

namespace bjj::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMs = 1e-3;

// ---------------------------------------------------------------------------
// Config parsing

const json* find(const json& obj, std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + " must be finite");
  return x;
}

double require_number(const json& obj, std::string_view key, const std::string& ctx) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(ctx + "." + std::string(key) + " is required");
  return number_at(*v, ctx + "." + std::string(key));
}

std::optional<double> optional_number(const json& obj, std::string_view key, const std::string& ctx) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  return number_at(*v, ctx + "." + std::string(key));
}

void require_object(const json& v, const std::string& ctx) {
  if (!v.is_object()) throw ConfigError(ctx + " must be a JSON object");
}

std::uint64_t parse_seed(std::string_view text, const std::string& ctx) {
  std::uint64_t s = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), s);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(ctx + " must be an unsigned 64-bit integer, got '" + std::string(text) + "'");
  }
  return s;
}

TmbhParams parse_tmbh(const json& b) {
  require_object(b, "tmbh");
  const double J = kTwoPi * require_number(b, "J_hz", "tmbh");
  const double N = require_number(b, "N", "tmbh");
  const auto U_hz = optional_number(b, "U_hz", "tmbh");
  const auto Lambda = optional_number(b, "Lambda", "tmbh");
  if (U_hz.has_value() == Lambda.has_value()) {
    throw ConfigError("tmbh needs exactly one of U_hz and Lambda");
  }
  TmbhParams p;
  p.J = J;
  p.N = N;
  p.U = U_hz ? kTwoPi * *U_hz : 2.0 * J * *Lambda / N;
  p.epsilon = kTwoPi * optional_number(b, "epsilon_hz", "tmbh").value_or(0.0);
  p.eta = optional_number(b, "eta", "tmbh").value_or(0.0);
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("tmbh: ") + e.what());
  }
  return p;
}

PendulumParams parse_pendulum(const json& b, const std::string& ctx) {
  require_object(b, ctx);
  PendulumParams P;
  P.k0 = require_number(b, "k0", ctx);
  P.omega0 = require_number(b, "omega0", ctx);
  P.N0 = require_number(b, "N0", ctx);
  if (const auto t = optional_number(b, "tau_ms", ctx)) P.tau = *t * kMs;
  if (const auto t = optional_number(b, "tau2_ms", ctx)) P.tau2 = *t * kMs;
  P.delta_phi = optional_number(b, "delta_phi", ctx).value_or(0.0);
  P.delta_n = optional_number(b, "delta_n", ctx).value_or(0.0);
  const double sigma = optional_number(b, "sigma0", ctx).value_or(1.0);
  if (sigma != 1.0 && sigma != -1.0) throw ConfigError(ctx + ".sigma0 must be +1 or -1");
  P.sigma0 = static_cast<int>(sigma);
  if (!(P.k0 >= 0.0) || !(P.omega0 > 0.0) || !(P.N0 >= 0.0) || !(P.tau > 0.0) ||
      (P.tau2 && !(*P.tau2 > 0.0))) {
    throw ConfigError(ctx + " requires k0 >= 0, omega0 > 0, N0 >= 0, tau_ms > 0");
  }
  return P;
}

InitialState parse_initial(const json& b, const std::string& ctx) {
  require_object(b, ctx);
  InitialState s;
  s.n0 = optional_number(b, "n0", ctx).value_or(0.0);
  const auto phi = optional_number(b, "phi0", ctx);
  const auto phi_pi = optional_number(b, "phi0_pi", ctx);
  if (phi && phi_pi) throw ConfigError(ctx + " needs at most one of phi0 and phi0_pi");
  s.phi0 = phi ? *phi : std::numbers::pi * phi_pi.value_or(0.0);
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
  return s;
}

Model parse_model(const std::string& s) {
  if (s == "tmbh-numeric") return Model::TmbhNumeric;
  if (s == "pendulum-numeric") return Model::PendulumNumeric;
  if (s == "analytic") return Model::Analytic;
  throw ConfigError("model must be one of tmbh-numeric, pendulum-numeric, analytic; got '" + s + "'");
}

// ---------------------------------------------------------------------------
// JSON output helpers

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json pendulum_json(const PendulumParams& P) {
  json b = {{"k0", P.k0},
            {"omega0", P.omega0},
            {"N0", P.N0},
            {"tau_ms", nullable(P.tau / kMs)},
            {"delta_phi", P.delta_phi},
            {"delta_n", P.delta_n},
            {"sigma0", P.sigma0}};
  if (P.tau2) b["tau2_ms"] = *P.tau2 / kMs;
  return b;
}

json tmbh_json(const TmbhParams& p) {
  return {{"J_hz", p.J / kTwoPi},     {"U_hz", p.U / kTwoPi}, {"Lambda", p.Lambda()},
          {"epsilon_hz", p.epsilon / kTwoPi}, {"eta", p.eta},      {"N", p.N}};
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(nullable(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json estimate_json(double value, double sigma, double scale = 1.0) {
  return {{"value", nullable(value * scale)}, {"sigma", nullable(sigma * scale)}};
}

void write_json(const fs::path& path, const json& doc) { io::write_text(path, doc.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Runs

struct Run {
  std::size_t index = 0;
  std::optional<InitialState> s0;
  PendulumParams P;
};

std::string suffix(const RunConfig& cfg, std::size_t i) {
  const std::size_t runs = cfg.pendulum ? 1 : cfg.initial.size();
  return runs > 1 ? "_" + std::to_string(i) : std::string{};
}

std::vector<Run> resolve_runs(const RunConfig& cfg) {
  std::vector<Run> runs;
  if (cfg.pendulum) {
    Run r;
    r.P = *cfg.pendulum;
    if (!cfg.initial.empty()) r.s0 = cfg.initial.front();
    runs.push_back(r);
    return runs;
  }
  if (!cfg.tmbh) throw ConfigError("a tmbh or pendulum parameter block is required");
  if (cfg.initial.empty()) throw ConfigError("the tmbh block needs at least one initial state");
  for (std::size_t i = 0; i < cfg.initial.size(); ++i) {
    Run r;
    r.index = i;
    r.s0 = cfg.initial[i];
    r.P = param_map::to_pendulum(*cfg.tmbh, cfg.initial[i], cfg.map);
    runs.push_back(r);
  }
  return runs;
}

std::vector<double> time_grid(const RunConfig& cfg) {
  if (!(cfg.time.t_end > 0.0) || cfg.time.n_points < 2) {
    throw ConfigError("time.t_end must be > 0 and time.n_points >= 2");
  }
  return numeric::linspace_grid(cfg.time.t_end, cfg.time.n_points);
}

Trajectory analytic_trajectory(const PendulumParams& P, const std::vector<double>& grid,
                               std::optional<double> guard = std::nullopt) {
  Trajectory tr;
  tr.source = TrajectorySource::Analytic;
  tr.times = grid;
  for (double t : grid) {
    const auto pi = analytic::evaluate_piecewise(t, P, guard);
    tr.phi.push_back(pi.phi);
    tr.n.push_back(pi.n);
  }
  return tr;
}

Trajectory pendulum_trajectory(const RunConfig& cfg, const Run& run, const std::vector<double>& grid) {
  const PendulumParams& P = run.P;
  numeric::PendulumState st;
  double to_n = 0.0;  // n = to_n * dphi + delta_n
  if (cfg.tmbh && run.s0) {
    st.phi0 = std::remainder(run.s0->phi0, kTwoPi);
    st.dphi0 = analytic::initial_phase_velocity(*run.s0, *cfg.tmbh);
    const double stiffness = cfg.tmbh->Lambda() + (cfg.map.approximate_lambda ? 1.0 : run.s0->lambda());
    to_n = 1.0 / (2.0 * cfg.tmbh->J * stiffness);
  } else if (P.k0 > 0.0) {
    const double w = param_map::damped_frequency(P.omega0, P.tau);
    const auto start = analytic::evaluate_piecewise(0.0, P);
    to_n = P.N0 / (2.0 * w * P.k0);
    st.phi0 = start.phi;
    st.dphi0 = (start.n - P.delta_n) / to_n;
  }
  Trajectory tr = numeric::integrate_pendulum(P.omega0, P.tau, st, grid);
  for (std::size_t i = 0; i < tr.size(); ++i) tr.n[i] = to_n * tr.dphi[i] + P.delta_n;
  return tr;
}

Trajectory model_trajectory(const RunConfig& cfg, const Run& run, Model model,
                            const std::vector<double>& grid) {
  switch (model) {
    case Model::TmbhNumeric:
      if (!cfg.tmbh || !run.s0) throw ConfigError("tmbh-numeric needs a tmbh block and an initial state");
      return numeric::integrate_tmbh(*cfg.tmbh, *run.s0, grid);
    case Model::PendulumNumeric: return pendulum_trajectory(cfg, run, grid);
    case Model::Analytic: return analytic_trajectory(run.P, grid);
  }
  return {};
}

io::Series to_series(const Trajectory& tr, bool phase) {
  io::Series s{phase ? "phi" : "n", {}};
  const auto& v = phase ? tr.phi : tr.n;
  for (std::size_t i = 0; i < tr.size(); ++i) s.samples.push_back({tr.times[i], v[i]});
  return s;
}

json run_summary(const RunConfig& cfg, const Run& run) {
  json j = {{"index", run.index},
            {"k0", run.P.k0},
            {"regime", std::string(to_string(analytic::classify_regime(run.P.k0)))},
            {"pendulum", pendulum_json(run.P)}};
  if (cfg.tmbh && run.s0) {
    j["alpha"] = numeric::alpha_invariant(run.s0->n0, run.s0->phi0, cfg.tmbh->Lambda());
    j["initial"] = {{"n0", run.s0->n0}, {"phi0", run.s0->phi0}};
  }
  if (run.P.k0 > 1.0 && run.P.damped()) {
    j["separatrix_crossing_ms"] = analytic::separatrix_crossing_time(run.P.k0, run.P.tau) / kMs;
  }
  return j;
}

std::string model_name(Model m) {
  switch (m) {
    case Model::TmbhNumeric: return "tmbh-numeric";
    case Model::PendulumNumeric: return "pendulum-numeric";
    case Model::Analytic: return "analytic";
  }
  return "";
}

io::Series load_series(const std::optional<fs::path>& given, const fs::path& fallback,
                       const std::string& column) {
  const fs::path path = given.value_or(fallback);
  if (!given && !fs::exists(path)) return {column, {}};
  io::Series s = io::read_csv(path);
  if (s.column != column) {
    throw ConfigError(path.string() + ": expected column '" + column + "', found '" + s.column + "'");
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    std::string flag = overrides[i];
    if (flag.rfind("--", 0) != 0 || flag.size() <= 2) {
      throw ConfigError("unexpected argument '" + flag + "'");
    }
    flag = flag.substr(2);
    std::string value;
    if (const auto eq = flag.find('='); eq != std::string::npos) {
      value = flag.substr(eq + 1);
      flag = flag.substr(0, eq);
    } else {
      if (i + 1 >= overrides.size()) throw ConfigError("override --" + flag + " has no value");
      value = overrides[++i];
    }
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::parse_error&) {
      parsed = value;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = flag.find('.', start);
      std::string key = flag.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      std::replace(key.begin(), key.end(), '-', '_');
      if (key.empty()) throw ConfigError("malformed override --" + flag);
      json* next = nullptr;
      if (node->is_array() && std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        const std::size_t idx = std::stoul(key);
        if (idx >= node->size()) throw ConfigError("override --" + flag + ": index out of range");
        next = &(*node)[idx];
      } else {
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw ConfigError("override --" + flag + " descends into a non-object");
        next = &(*node)[key];
      }
      node = next;
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    *node = std::move(parsed);
  }
}

RunConfig parse_config(const json& doc, Mode mode) {
  require_object(doc, "config");
  RunConfig cfg;
  cfg.mode = mode;
  if (const json* m = find(doc, "model")) {
    if (!m->is_string()) throw ConfigError("model must be a string");
    cfg.model = parse_model(m->get<std::string>());
  }
  if (const json* b = find(doc, "tmbh")) {
    cfg.tmbh = parse_tmbh(*b);
    cfg.n_atoms = cfg.tmbh->N;
  }
  if (const json* b = find(doc, "pendulum")) {
    cfg.pendulum = parse_pendulum(*b, "pendulum");
    if (const auto N = optional_number(*b, "N", "pendulum")) cfg.n_atoms = *N;
    cfg.n_atoms_sigma = optional_number(*b, "N_sigma", "pendulum").value_or(0.0);
  }
  if (const json* b = find(doc, "initial")) {
    if (b->is_array()) {
      for (std::size_t i = 0; i < b->size(); ++i) {
        cfg.initial.push_back(parse_initial((*b)[i], "initial[" + std::to_string(i) + "]"));
      }
    } else {
      cfg.initial.push_back(parse_initial(*b, "initial"));
    }
  }
  if (const json* b = find(doc, "time")) {
    require_object(*b, "time");
    const auto t = optional_number(*b, "t_end", "time");
    const auto t_ms = optional_number(*b, "t_end_ms", "time");
    if (t && t_ms) throw ConfigError("time needs at most one of t_end and t_end_ms");
    cfg.time.t_end = t ? *t : t_ms.value_or(0.0) * kMs;
    const double n = optional_number(*b, "n_points", "time").value_or(0.0);
    if (n < 0.0 || n != std::floor(n)) throw ConfigError("time.n_points must be a non-negative integer");
    cfg.time.n_points = static_cast<std::size_t>(n);
  }
  if (const json* b = find(doc, "noise")) {
    require_object(*b, "noise");
    cfg.noise.sigma_phi = optional_number(*b, "sigma_phi", "noise").value_or(0.0);
    cfg.noise.sigma_n = optional_number(*b, "sigma_n", "noise").value_or(0.0);
    if (cfg.noise.sigma_phi < 0.0 || cfg.noise.sigma_n < 0.0) throw ConfigError("noise sigmas must be >= 0");
    if (const json* s = find(*b, "seed")) {
      if (s->is_number_unsigned()) {
        cfg.noise.seed = s->get<std::uint64_t>();
      } else if (s->is_string()) {
        cfg.noise.seed = parse_seed(s->get<std::string>(), "noise.seed");
      } else {
        throw ConfigError("noise.seed must be an unsigned integer");
      }
    }
  }
  if (const json* b = find(doc, "fit")) {
    require_object(*b, "fit");
    cfg.fit.weight_phase = optional_number(*b, "weight_phase", "fit");
    cfg.fit.weight_imbalance = optional_number(*b, "weight_imbalance", "fit");
    if (const auto g = optional_number(*b, "guard_ms", "fit")) cfg.fit.guard = *g * kMs;
    if (const json* s = find(*b, "starts")) {
      if (!s->is_array()) throw ConfigError("fit.starts must be an array of pendulum blocks");
      for (std::size_t i = 0; i < s->size(); ++i) {
        cfg.fit.extra_starts.push_back(parse_pendulum((*s)[i], "fit.starts[" + std::to_string(i) + "]"));
      }
    }
  }
  if (const json* b = find(doc, "map")) {
    require_object(*b, "map");
    if (const json* a = find(*b, "approximate_lambda")) {
      if (!a->is_boolean()) throw ConfigError("map.approximate_lambda must be a boolean");
      cfg.map.approximate_lambda = a->get<bool>();
    }
  }
  if (const json* b = find(doc, "paths")) {
    require_object(*b, "paths");
    auto path_at = [&](std::string_view key) -> std::optional<fs::path> {
      const json* v = find(*b, key);
      if (!v) return std::nullopt;
      if (!v->is_string()) throw ConfigError("paths." + std::string(key) + " must be a string");
      return fs::path(v->get<std::string>());
    };
    if (auto p = path_at("output_dir")) cfg.paths.output_dir = *p;
    cfg.paths.phase = path_at("phase");
    cfg.paths.imbalance = path_at("imbalance");
  }
  return cfg;
}

RunConfig load_config(const fs::path& file, Mode mode, const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(io::read_text(file));
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  if (const char* env = std::getenv("BJJ_SEED"); env && *env) {
    doc["noise"]["seed"] = parse_seed(env, "BJJ_SEED");
  }
  apply_overrides(doc, overrides);
  return parse_config(doc, mode);
}

// ---------------------------------------------------------------------------

json cmd_simulate(const RunConfig& cfg) {
  const auto grid = time_grid(cfg);
  json summary = {{"model", model_name(cfg.model)}, {"runs", json::array()}};
  for (const Run& run : resolve_runs(cfg)) {
    const Trajectory tr = model_trajectory(cfg, run, cfg.model, grid);
    const std::string sfx = suffix(cfg, run.index);
    io::write_csv(cfg.paths.output_dir / ("phase" + sfx + ".csv"), to_series(tr, true));
    io::write_csv(cfg.paths.output_dir / ("imbalance" + sfx + ".csv"), to_series(tr, false));
    summary["runs"].push_back(run_summary(cfg, run));
  }
  write_json(cfg.paths.output_dir / "summary.json", summary);
  return summary;
}

json cmd_compare(const RunConfig& cfg) {
  const auto grid = time_grid(cfg);
  const Model numeric_model = cfg.model == Model::TmbhNumeric ? Model::TmbhNumeric : Model::PendulumNumeric;
  json summary = {{"numeric_model", model_name(numeric_model)}, {"runs", json::array()}};
  for (const Run& run : resolve_runs(cfg)) {
    const Trajectory a = analytic_trajectory(run.P, grid);
    const Trajectory b = model_trajectory(cfg, run, numeric_model, grid);
    std::string csv = "t,phi_analytic,phi_numeric,n_analytic,n_numeric\n";
    double max_dphi = 0.0, max_dn = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      max_dphi = std::max(max_dphi, std::abs(std::remainder(a.phi[i] - b.phi[i], kTwoPi)));
      max_dn = std::max(max_dn, std::abs(a.n[i] - b.n[i]));
      csv += io::format_double(grid[i]) + "," + io::format_double(a.phi[i]) + "," +
             io::format_double(b.phi[i]) + "," + io::format_double(a.n[i]) + "," +
             io::format_double(b.n[i]) + "\n";
    }
    io::write_text(cfg.paths.output_dir / ("compare" + suffix(cfg, run.index) + ".csv"), csv);
    json j = run_summary(cfg, run);
    j["max_abs_delta_phi"] = max_dphi;
    j["max_abs_delta_n"] = max_dn;
    summary["runs"].push_back(std::move(j));
  }
  write_json(cfg.paths.output_dir / "compare.json", summary);
  return summary;
}

json cmd_synth(const RunConfig& cfg) {
  const auto grid = time_grid(cfg);
  io::SplitMix64 rng(cfg.noise.seed);
  json summary = {{"seed", cfg.noise.seed},
                  {"sigma_phi", cfg.noise.sigma_phi},
                  {"sigma_n", cfg.noise.sigma_n},
                  {"runs", json::array()}};
  for (const Run& run : resolve_runs(cfg)) {
    const Trajectory tr = analytic_trajectory(run.P, grid);
    io::Series phase = to_series(tr, true);
    io::Series imb = to_series(tr, false);
    if (cfg.noise.sigma_phi > 0.0) {
      for (auto& s : phase.samples) s.value += cfg.noise.sigma_phi * rng.normal();
    }
    if (cfg.noise.sigma_n > 0.0) {
      for (auto& s : imb.samples) s.value += cfg.noise.sigma_n * rng.normal();
    }
    const std::string sfx = suffix(cfg, run.index);
    io::write_csv(cfg.paths.output_dir / ("phase" + sfx + ".csv"), phase);
    io::write_csv(cfg.paths.output_dir / ("imbalance" + sfx + ".csv"), imb);
    summary["runs"].push_back(run_summary(cfg, run));
  }
  write_json(cfg.paths.output_dir / "synth.json", summary);
  return summary;
}

json cmd_fit(const RunConfig& cfg) {
  estimation::DataSet d;
  d.phase = load_series(cfg.paths.phase, cfg.paths.output_dir / "phase.csv", "phi").samples;
  d.imbalance = load_series(cfg.paths.imbalance, cfg.paths.output_dir / "imbalance.csv", "n").samples;
  if (d.size() == 0) throw ConfigError("fit found no input samples (paths.phase / paths.imbalance)");
  try {
    d.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("input data: ") + e.what());
  }
  if (d.size() < estimation::kNumParams + 1) throw ConfigError("fit needs at least 7 data points");
  d.weight_phase = cfg.fit.weight_phase;
  d.weight_imbalance = cfg.fit.weight_imbalance;
  d.n_atoms = cfg.n_atoms.value_or(0.0);
  d.n_atoms_sigma = cfg.n_atoms_sigma;

  const std::vector<Run> runs = resolve_runs(cfg);
  PendulumParams guess = runs.front().P;
  if (!guess.damped()) throw ConfigError("fit needs a finite pendulum.tau_ms initial guess");
  if (!(guess.k0 > 0.0) || !(guess.N0 > 0.0 && guess.N0 < 1.0)) {
    throw ConfigError("fit guess needs k0 > 0 and 0 < N0 < 1");
  }
  estimation::FitOptions opts;
  opts.guard = cfg.fit.guard;
  estimation::FitReport rep;
  if (cfg.fit.extra_starts.empty()) {
    rep = estimation::fit(d, guess, opts);
  } else {
    std::vector<PendulumParams> starts{guess};
    starts.insert(starts.end(), cfg.fit.extra_starts.begin(), cfg.fit.extra_starts.end());
    rep = estimation::fit_multistart(d, starts, opts);
  }

  const PendulumParams& P = rep.params;
  const auto& s = rep.sigmas;
  json pend = {{"k0", estimate_json(P.k0, s[0])},
               {"omega0", estimate_json(P.omega0, s[1])},
               {"N0", estimate_json(P.N0, s[2])},
               {"tau_ms", estimate_json(P.tau, s[3], 1.0 / kMs)},
               {"delta_phi", estimate_json(P.delta_phi, s[4])},
               {"delta_n", estimate_json(P.delta_n, s[5])},
               {"sigma0", P.sigma0}};
  json derived = {{"J_hz", estimate_json(rep.derived.J.value, rep.derived.J.sigma, 1.0 / kTwoPi)},
                  {"Lambda", estimate_json(rep.derived.Lambda.value, rep.derived.Lambda.sigma)},
                  {"epsilon_hz", estimate_json(rep.derived.epsilon.value, rep.derived.epsilon.sigma, 1.0 / kTwoPi)},
                  {"eta", estimate_json(rep.derived.eta.value, rep.derived.eta.sigma)},
                  {"lambda", rep.derived.lambda},
                  {"N", d.n_atoms}};
  json order = json::array();
  for (auto name : estimation::kParamNames) order.push_back(std::string(name));
  json report = {{"pendulum", pend},
                 {"derived_tmbh", derived},
                 {"parameter_order", order},
                 {"correlation", matrix_json(rep.correlation)},
                 {"covariance", matrix_json(rep.covariance)},
                 {"mse", nullable(rep.mse)},
                 {"cost", nullable(rep.cost)},
                 {"n_data", rep.n_data},
                 {"iterations", rep.iterations},
                 {"converged", rep.converged},
                 {"rank_deficient", rep.rank_deficient},
                 {"regime", std::string(to_string(rep.regime))},
                 {"rigidity", {{"delta", rep.rigidity_delta}, {"ok", rep.rigidity_ok}}},
                 {"warnings", rep.warnings}};
  write_json(cfg.paths.output_dir / "fit_report.json", report);
  return report;
}

json cmd_convert(const RunConfig& cfg) {
  if (cfg.pendulum.has_value() == cfg.tmbh.has_value()) {
    throw ConfigError("convert needs exactly one of the tmbh and pendulum blocks");
  }
  json out;
  if (cfg.pendulum) {
    if (!cfg.n_atoms) throw ConfigError("convert from pendulum needs pendulum.N");
    std::optional<InitialState> s0;
    if (!cfg.initial.empty()) s0 = cfg.initial.front();
    const auto conv = param_map::to_tmbh(*cfg.pendulum, s0, *cfg.n_atoms, cfg.map);
    out = {{"map", conv.used_general_map ? "general" : "simplified"}, {"tmbh", tmbh_json(conv.params)}};
    if (!conv.warning.empty()) out["warning"] = conv.warning;
  } else {
    if (cfg.initial.empty()) throw ConfigError("convert from tmbh needs an initial state");
    const auto P = param_map::to_pendulum(*cfg.tmbh, cfg.initial.front(), cfg.map);
    out = {{"pendulum", pendulum_json(P)}};
  }
  write_json(cfg.paths.output_dir / "converted.json", out);
  return out;
}

json cmd_validate(const RunConfig& cfg) {
  json verdict = {{"runs", json::array()}};
  for (const Run& run : resolve_runs(cfg)) {
    const Regime regime = analytic::classify_regime(run.P.k0);
    json j = {{"index", run.index}, {"k", run.P.k0}, {"regime", std::string(to_string(regime))}};
    try {
      const auto rc = analytic::rigidity_check(run.P, regime);
      j["delta"] = rc.delta;
      j["ok"] = rc.ok;
    } catch (const DomainError& e) {
      j["delta"] = nullptr;
      j["ok"] = false;
      j["error"] = e.what();
    }
    if (run.P.k0 > 1.0 && run.P.damped()) {
      j["separatrix_crossing_ms"] = analytic::separatrix_crossing_time(run.P.k0, run.P.tau) / kMs;
    }
    verdict["runs"].push_back(std::move(j));
  }
  write_json(cfg.paths.output_dir / "verdict.json", verdict);
  return verdict;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& argv) {
  CLI::App app{"Bosonic Josephson junction toolkit"};
  app.require_subcommand(1);
  app.name("bjj");
  struct Entry {
    const char* name;
    const char* help;
    Mode mode;
    json (*fn)(const RunConfig&);
  };
  static const Entry entries[] = {
      {"simulate", "integrate or evaluate trajectories", Mode::Simulate, cmd_simulate},
      {"synth", "sample the analytic model with seeded Gaussian noise", Mode::Synth, cmd_synth},
      {"fit", "fit the damped pendulum model to phase/imbalance CSVs", Mode::Fit, cmd_fit},
      {"convert", "map between pendulum and TMBH parameters", Mode::Convert, cmd_convert},
      {"validate", "regime classification and rigid-pendulum check", Mode::Validate, cmd_validate},
      {"compare", "analytic versus numeric trajectories", Mode::Compare, cmd_compare},
  };
  std::string config_path;
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    auto* sc = app.add_subcommand(e.name, e.help);
    sc->add_option("--config", config_path, "JSON configuration file")->required();
    sc->allow_extras();
    sc->footer("Any config field can be overridden as --block.field value (dashes map to underscores).");
    subs.push_back(sc);
  }
  try {
    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const Entry& e = entries[i];
    try {
      const RunConfig cfg = load_config(config_path, e.mode, subs[i]->remaining());
      e.fn(cfg);
      return kExitOk;
    } catch (const ConfigError& ex) {
      std::cerr << "bjj " << e.name << ": config error: " << ex.what() << "\n";
      return kExitConfig;
    } catch (const nlohmann::json::exception& ex) {
      std::cerr << "bjj " << e.name << ": config error: " << ex.what() << "\n";
      return kExitConfig;
    } catch (const DegeneracyError& ex) {
      std::cerr << "bjj " << e.name << ": degenerate parameters: " << ex.what() << "\n";
      return kExitDegenerate;
    } catch (const std::exception& ex) {
      std::cerr << "bjj " << e.name << ": numeric failure: " << ex.what() << "\n";
      return kExitNumeric;
    }
  }
  return kExitConfig;
}

}  // namespace bjj::cli
