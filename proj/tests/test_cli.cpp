#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "bjj/cli.hpp"
#include "bjj/errors.hpp"
#include "bjj/io.hpp"

using namespace bjj;
using namespace bjj::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("bjj_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  fs::path config(const json& doc, const std::string& name = "config.json") const {
    json d = doc;
    if (!d.contains("paths")) d["paths"]["output_dir"] = (dir / "out").string();
    io::write_text(dir / name, d.dump(2));
    return dir / name;
  }
  fs::path out() const { return dir / "out"; }
};

int invoke(const std::string& cmd, const fs::path& config, std::vector<std::string> extra = {}) {
  std::vector<std::string> argv{"bjj", cmd, "--config", config.string()};
  argv.insert(argv.end(), extra.begin(), extra.end());
  return run(argv);
}

json read_json(const fs::path& p) { return json::parse(io::read_text(p)); }

json three_phase_config() {
  return {{"model", "tmbh-numeric"},
          {"tmbh", {{"J_hz", 50.0}, {"Lambda", 40.0}, {"N", 5000}}},
          {"initial", json::array({{{"n0", 0.0}, {"phi0_pi", 0.1}},
                                   {{"n0", 0.0}, {"phi0_pi", 0.45}},
                                   {{"n0", 0.0}, {"phi0_pi", 0.8}}})},
          {"time", {{"t_end_ms", 20.0}, {"n_points", 201}}}};
}

json reference_config() {
  return {{"model", "analytic"},
          {"pendulum",
           {{"k0", 0.57}, {"omega0", 2623.0}, {"N0", 0.12}, {"tau_ms", 8.9}, {"delta_phi", -2.0},
            {"delta_n", -0.03}, {"N", 3500}, {"N_sigma", 300}}},
          {"time", {{"t_end_ms", 30.0}, {"n_points", 150}}},
          {"noise", {{"sigma_phi", 0.15}, {"sigma_n", 0.01}, {"seed", 7}}},
          {"fit", {{"weight_phase", 0.15}, {"weight_imbalance", 0.01}}}};
}

}  // namespace

TEST_CASE("overrides edit nested keys") {
  json doc = {{"time", {{"t_end", 1.0}}}, {"initial", json::array({{{"n0", 0.0}}})}};
  apply_overrides(doc, {"--time.n-points", "50", "--initial.0.n0=0.25", "--model", "analytic",
                        "--noise.seed=12"});
  CHECK(doc["time"]["n_points"] == 50);
  CHECK(doc["time"]["t_end"] == 1.0);
  CHECK(doc["initial"][0]["n0"] == 0.25);
  CHECK(doc["model"] == "analytic");
  CHECK(doc["noise"]["seed"] == 12);
  CHECK_THROWS_AS(apply_overrides(doc, {"--time.t-end"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(doc, {"stray"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(doc, {"--initial.3.n0", "1"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(doc, {"--model.x", "1"}), ConfigError);
}

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_config(three_phase_config(), Mode::Simulate);
  CHECK(cfg.model == Model::TmbhNumeric);
  REQUIRE(cfg.tmbh.has_value());
  CHECK(cfg.tmbh->Lambda() == doctest::Approx(40.0).epsilon(1e-14));
  CHECK(cfg.initial.size() == 3);
  CHECK(cfg.time.t_end == doctest::Approx(0.02));

  json bad = three_phase_config();
  bad["tmbh"]["U_hz"] = 0.8;
  CHECK_THROWS_AS(parse_config(bad, Mode::Simulate), ConfigError);
  bad = three_phase_config();
  bad["model"] = "euler";
  CHECK_THROWS_AS(parse_config(bad, Mode::Simulate), ConfigError);
  bad = three_phase_config();
  bad["initial"][0]["n0"] = 1.5;
  CHECK_THROWS_AS(parse_config(bad, Mode::Simulate), ConfigError);
  bad = reference_config();
  bad["pendulum"]["sigma0"] = 0.5;
  CHECK_THROWS_AS(parse_config(bad, Mode::Synth), ConfigError);
  bad = reference_config();
  bad["noise"]["seed"] = -3;
  CHECK_THROWS_AS(parse_config(bad, Mode::Synth), ConfigError);
}

TEST_CASE("exit codes") {
  Scratch s("exit");
  CHECK(run({"bjj"}) == kExitConfig);
  CHECK(run({"bjj", "simulate"}) == kExitConfig);
  CHECK(run({"bjj", "simulate", "--config", (s.dir / "missing.json").string()}) == kExitConfig);
  io::write_text(s.dir / "broken.json", "{ not json");
  CHECK(run({"bjj", "simulate", "--config", (s.dir / "broken.json").string()}) == kExitConfig);
  CHECK(invoke("simulate", s.config(three_phase_config()), {"--model", "euler"}) == kExitConfig);

  // Overdamped analytic model: omega0 tau < 1.
  json over = reference_config();
  over["pendulum"]["tau_ms"] = 0.1;
  CHECK(invoke("simulate", s.config(over)) == kExitNumeric);

  // Zero energy ratio has no simplified TMBH image.
  json degenerate = reference_config();
  degenerate["pendulum"]["k0"] = 0.0;
  CHECK(invoke("convert", s.config(degenerate)) == kExitDegenerate);

  CHECK(invoke("simulate", s.config(three_phase_config())) == kExitOk);
  CHECK(run({"bjj", "--help"}) == kExitOk);
}

TEST_CASE("the built executable reports exit codes") {
  const char* exe = std::getenv("BJJ_CLI");
  if (exe == nullptr || *exe == '\0') return;
  Scratch s("exe");
  const fs::path cfg = s.config(three_phase_config());
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(std::string(exe) + " simulate --config " + cfg.string()) == 0);
  CHECK(fs::exists(s.out() / "phase_2.csv"));
  CHECK(status(std::string(exe) + " simulate --config " + (s.dir / "nope.json").string()) == 2);
  CHECK(status(std::string(exe) + " frobnicate") == 2);
}

TEST_CASE("simulate: alpha invariants of three start phases and the ground state") {
  Scratch s("sim");
  REQUIRE(invoke("simulate", s.config(three_phase_config())) == kExitOk);
  const json summary = read_json(s.out() / "summary.json");
  REQUIRE(summary["runs"].size() == 3);
  CHECK(summary["runs"][0]["alpha"].get<double>() == doctest::Approx(-0.951).epsilon(1e-3));
  CHECK(summary["runs"][1]["alpha"].get<double>() == doctest::Approx(-0.156).epsilon(3e-3));
  CHECK(summary["runs"][2]["alpha"].get<double>() == doctest::Approx(0.809).epsilon(1e-3));
  CHECK(summary["runs"][2]["regime"] == "josephson-oscillation");
  for (int i = 0; i < 3; ++i) {
    const auto phase = io::read_csv(s.out() / ("phase_" + std::to_string(i) + ".csv"));
    CHECK(phase.samples.size() == 201);
    CHECK(phase.column == "phi");
  }

  json ground = three_phase_config();
  ground["initial"] = {{"n0", 0.0}, {"phi0", 0.0}};
  REQUIRE(invoke("simulate", s.config(ground)) == kExitOk);
  const auto phase = io::read_csv(s.out() / "phase.csv");
  const auto imb = io::read_csv(s.out() / "imbalance.csv");
  for (const auto& p : phase.samples) CHECK(p.value == 0.0);
  for (const auto& p : imb.samples) CHECK(p.value == 0.0);
}

TEST_CASE("compare: undamped k0 = 0.5 analytic versus pendulum integration") {
  Scratch s("compare");
  const double omega0 = 1000.0;
  const double period_ms = 4.0 * 1.685750354812596 / omega0 * 1e3;  // 4 K(0.25) / omega0
  json cfg = {{"model", "pendulum-numeric"},
              {"pendulum", {{"k0", 0.5}, {"omega0", omega0}, {"N0", 0.1}, {"delta_phi", 0.3}}},
              {"time", {{"t_end_ms", 10.0 * period_ms}, {"n_points", 1001}}}};
  REQUIRE(invoke("compare", s.config(cfg)) == kExitOk);
  const json summary = read_json(s.out() / "compare.json");
  CHECK(summary["runs"][0]["max_abs_delta_phi"].get<double>() < 1e-6);
  CHECK(summary["runs"][0]["max_abs_delta_n"].get<double>() < 1e-6);
  CHECK(fs::exists(s.out() / "compare.csv"));
}

TEST_CASE("synth: zero noise equals the analytic simulation; seeds are deterministic") {
  Scratch s("synth");
  json quiet = reference_config();
  quiet["noise"] = {{"sigma_phi", 0.0}, {"sigma_n", 0.0}, {"seed", 1}};
  quiet["paths"] = {{"output_dir", (s.dir / "a").string()}};
  REQUIRE(invoke("synth", s.config(quiet)) == kExitOk);
  quiet["paths"] = {{"output_dir", (s.dir / "b").string()}};
  REQUIRE(invoke("simulate", s.config(quiet)) == kExitOk);
  CHECK(io::read_text(s.dir / "a/phase.csv") == io::read_text(s.dir / "b/phase.csv"));
  CHECK(io::read_text(s.dir / "a/imbalance.csv") == io::read_text(s.dir / "b/imbalance.csv"));

  auto synth_to = [&](const std::string& sub, std::vector<std::string> extra = {}) {
    json c = reference_config();
    c["paths"] = {{"output_dir", (s.dir / sub).string()}};
    REQUIRE(invoke("synth", s.config(c, sub + ".json"), extra) == kExitOk);
    return io::read_text(s.dir / sub / "phase.csv") + io::read_text(s.dir / sub / "imbalance.csv");
  };
  const std::string first = synth_to("s1");
  CHECK(synth_to("s2") == first);
  CHECK(synth_to("s3", {"--noise.seed", "8"}) != first);

  ::setenv("BJJ_SEED", "8", 1);
  const std::string env8 = synth_to("s4");
  const std::string flag7 = synth_to("s5", {"--noise.seed", "7"});
  ::unsetenv("BJJ_SEED");
  CHECK(env8 == synth_to("s6", {"--noise.seed", "8"}));
  CHECK(flag7 == first);
  ::setenv("BJJ_SEED", "not-a-number", 1);
  json c = reference_config();
  CHECK(invoke("synth", s.config(c)) == kExitConfig);
  ::unsetenv("BJJ_SEED");
}

TEST_CASE("synth then fit recovers the generating parameters") {
  Scratch s("fit");
  const fs::path cfg = s.config(reference_config());
  REQUIRE(invoke("synth", cfg) == kExitOk);
  REQUIRE(invoke("fit", cfg, {"--pendulum.k0", "0.6", "--pendulum.tau-ms", "9.5"}) == kExitOk);
  const json rep = read_json(s.out() / "fit_report.json");
  CHECK(rep["converged"] == true);
  CHECK(rep["n_data"] == 300);
  const json& p = rep["pendulum"];
  auto within = [&](const char* key, double truth) {
    const double v = p[key]["value"].get<double>(), sg = p[key]["sigma"].get<double>();
    CAPTURE(key);
    CHECK(std::abs(v - truth) < 4.0 * sg);
  };
  within("k0", 0.57);
  within("omega0", 2623.0);
  within("N0", 0.12);
  within("tau_ms", 8.9);
  within("delta_phi", -2.0);
  within("delta_n", -0.03);
  CHECK(rep["derived_tmbh"]["J_hz"]["value"].get<double>() == doctest::Approx(22.0).epsilon(0.15));
  CHECK(rep["correlation"][2][2] == 1.0);

  const std::string before = io::read_text(s.out() / "fit_report.json");
  REQUIRE(invoke("fit", cfg, {"--pendulum.k0", "0.6", "--pendulum.tau-ms", "9.5"}) == kExitOk);
  CHECK(io::read_text(s.out() / "fit_report.json") == before);

  json no_tau = reference_config();
  no_tau["pendulum"].erase("tau_ms");
  CHECK(invoke("fit", s.config(no_tau, "no_tau.json")) == kExitConfig);
}

TEST_CASE("convert and validate") {
  Scratch s("convert");
  json pend = reference_config();
  REQUIRE(invoke("convert", s.config(pend)) == kExitOk);
  json out = read_json(s.out() / "converted.json");
  CHECK(out["map"] == "simplified");
  CHECK(out["tmbh"]["J_hz"].get<double>() == doctest::Approx(21.97).epsilon(1e-3));
  CHECK(out["tmbh"]["Lambda"].get<double>() == doctest::Approx(89.25).epsilon(1e-3));
  CHECK(out["tmbh"]["eta"].get<double>() == doctest::Approx(31.6).epsilon(2e-3));

  json tm = {{"tmbh", {{"J_hz", 50.0}, {"Lambda", 40.0}, {"N", 5000}}}, {"initial", {{"n0", 0.0}, {"phi0_pi", 0.8}}}};
  REQUIRE(invoke("convert", s.config(tm)) == kExitOk);
  out = read_json(s.out() / "converted.json");
  CHECK(out["pendulum"]["k0"].get<double>() == doctest::Approx(0.951).epsilon(1e-3));

  json both = tm;
  both["pendulum"] = pend["pendulum"];
  CHECK(invoke("convert", s.config(both)) == kExitConfig);

  json st = {{"tmbh", {{"J_hz", 50.0}, {"Lambda", 40.0}, {"N", 5000}}},
             {"initial", json::array({{{"n0", 0.0}, {"phi0_pi", 0.1}}, {{"n0", 0.6}, {"phi0_pi", -1.0}}})}};
  REQUIRE(invoke("validate", s.config(st)) == kExitOk);
  out = read_json(s.out() / "verdict.json");
  CHECK(out["runs"][0]["regime"] == "josephson-oscillation");
  CHECK(out["runs"][1]["regime"] == "self-trapped");
  CHECK(out["runs"][0]["ok"].is_boolean());
}
