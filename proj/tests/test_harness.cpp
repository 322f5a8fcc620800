#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "benign/config.hpp"
#include "benign/experiment.hpp"
#include "benign/io.hpp"
#include "benign/verify.hpp"

using namespace benign;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("benign_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string field_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.d == 64);
  CHECK(c.n == 16);
  CHECK(c.m == 8);
  CHECK(c.u_norm == 2.0);
  CHECK(c.v_norm == 0.4);
  CHECK(c.sigma_p == 0.1);
  CHECK(c.weak_count == 2);
  CHECK(c.etas == std::vector<double>{1.2, 0.1});
  CHECK(c.seeds.size() == 5);
  CHECK(c.steps == 6000);
  CHECK(c.n_test == 32);
  CHECK(c.weak_count_test == 4);
  CHECK(c.mode == TrainMode::MultiData);
  CHECK(c.resolved_sigma_0() == 0.0625);
}

TEST_CASE("eta list and scalar") {
  CHECK(config_from_json(json{{"eta", {1.2, 0.1}}}).etas == std::vector<double>{1.2, 0.1});
  CHECK(config_from_json(json{{"eta", 0.6}}).etas == std::vector<double>{0.6});
}

TEST_CASE("schema errors name the field") {
  CHECK(field_of(json{{"n", -1}}) == "/n");
  CHECK(field_of(json{{"d", 2}}) == "/d");
  CHECK(field_of(json{{"d", 64.5}}) == "/d");
  CHECK(field_of(json{{"bogus", 1}}) == "/bogus");
  CHECK(field_of(json{{"eta", {1.2, -0.1}}}) == "/eta/1");
  CHECK(field_of(json{{"eta", json::array()}}) == "/eta");
  CHECK(field_of(json{{"mode", "double"}}) == "/mode");
  CHECK(field_of(json{{"weak_count", 2}, {"rho", 0.1}}) == "/rho");
  CHECK(field_of(json{{"weak_count", 20}}) == "/weak_count");
  CHECK(field_of(json{{"seeds", {0, -3}}}) == "/seeds/1");
  CHECK(field_of(json{{"delta_override", 1.5}}) == "/delta_override");
  CHECK(field_of(json{{"weak_count_test", 40}}) == "/weak_count_test");
  CHECK(field_of(json{{"sigma_p", "big"}}) == "/sigma_p");
  CHECK(field_of(json::array()) == "");
  CHECK(field_of(json{{"mode", "single"}, {"n", 1}}) == "<accepted>");
}

TEST_CASE("load_config: missing file, bad JSON, round trip") {
  TempDir tmp("config");
  CHECK_THROWS(load_config(tmp.path / "missing.json"));
  write_text(tmp.path / "bad.json", "{ \"n\": ");
  CHECK_THROWS_AS(load_config(tmp.path / "bad.json"), ConfigError);

  ExperimentConfig c;
  c.rho = 0.25;
  c.weak_count.reset();
  c.delta_override = 0.4;
  c.mode = TrainMode::SingleData;
  c.label_mode = LabelMode::Balanced;
  write_text(tmp.path / "c.json", config_to_json(c).dump());
  const auto back = load_config(tmp.path / "c.json");
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.rho == 0.25);
  CHECK_FALSE(back.weak_count.has_value());
}

TEST_CASE("format_double is the shortest round-trip form") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6000.0, -2.5e-7, 0.0}) {
    const auto s = format_double(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == x);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.2) == "1.2");
  CHECK(format_double(6000.0) == "6000");
}

TEST_CASE("one step, one seed: trace has one row") {
  TempDir tmp("one_step");
  ExperimentConfig c;
  c.steps = 1;
  c.seeds = {0};
  c.etas = {1.2};
  c.out_dir = tmp.path.string();
  run_experiment(c);
  const auto trace = read_text(tmp.path / "eta1.2_seed0" / "trace.csv");
  CHECK(lines(trace) == 2);
  CHECK(trace.rfind("t,epoch,i_t,kind,y_f,loss,phi,psi,upsilon,gamma_max,gamma_tilde_max,signal_mass_plus,"
                    "signal_mass_minus,sets_stable\n",
                    0) == 0);
  CHECK(trace.find('\r') == std::string::npos);
  CHECK(lines(read_text(tmp.path / "eta1.2_seed0" / "neurons.csv")) == 1 + 16);
}

TEST_CASE("default experiment: 10 runs, row counts, summary, determinism") {
  TempDir a("run_a"), b("run_b");
  ExperimentConfig c;
  c.steps = 1000;
  c.out_dir = a.path.string();
  const auto res = run_experiment(c);
  CHECK(res.reports.size() == 10);

  int dirs = 0;
  for (const auto& e : fs::directory_iterator(a.path))
    if (e.is_directory()) {
      ++dirs;
      CHECK(lines(read_text(e.path() / "trace.csv")) == 1000 + 1);
      CHECK(lines(read_text(e.path() / "neurons.csv")) == 10 * 16 + 1);
      CHECK(fs::exists(e.path() / "report.json"));
    }
  CHECK(dirs == 10);
  CHECK(fs::exists(a.path / "summary.json"));
  CHECK(json::parse(read_text(a.path / "config.json")) == config_to_json(c));

  // aggregates come from report.json alone
  std::vector<json> reports;
  for (double eta : c.etas)
    for (auto seed : c.seeds) reports.push_back(json::parse(read_text(a.path / run_name(eta, seed) / "report.json")));
  const auto summary = json::parse(read_text(a.path / "summary.json"));
  CHECK(summarize(reports) == summary);
  for (const auto& agg : summary.at("by_eta")) {
    const double eta = agg.at("eta").get<double>();
    double sum = 0.0;
    int count = 0;
    for (const auto& r : reports)
      if (r.at("eta").get<double>() == eta) {
        sum += r.at("evaluation").at("accuracy_overall").get<double>();
        ++count;
      }
    CHECK(count == 5);
    CHECK(agg.at("accuracy_overall").at("mean").get<double>() == doctest::Approx(sum / count).epsilon(1e-15));
  }

  // same config, other directory, parallel: identical bytes
  c.out_dir = b.path.string();
  c.jobs = 4;
  run_experiment(c);
  for (double eta : c.etas)
    for (auto seed : c.seeds)
      for (const char* f : {"trace.csv", "neurons.csv", "report.json"})
        CHECK(read_text(a.path / run_name(eta, seed) / f) == read_text(b.path / run_name(eta, seed) / f));
  CHECK(read_text(a.path / "summary.json") == read_text(b.path / "summary.json"));
}

TEST_CASE("report carries the theory quantities") {
  ExperimentConfig c;
  const auto r = run_one(c, 1.2, 0);
  const auto& j = r.report;
  for (const char* key : {"delta_hat", "eta_tilde", "alpha", "t_v_plus", "t_v_minus", "t_xi", "crossings_up",
                          "crossings_down", "beta_star_plus", "beta_star_minus", "accumulation",
                          "sign_stable_until", "necessary_eta", "evaluation"})
    CHECK(j.contains(key));
  CHECK(j.at("eta_tilde").get<double>() == doctest::Approx(1.2));
  CHECK(j.at("alpha").get<double>() == doctest::Approx(0.04));
  CHECK(j.at("necessary_eta").at("eta_tilde_passes").get<bool>());
}

TEST_CASE("delta override replaces the estimate in the analysis") {
  ExperimentConfig c;
  c.steps = 800;
  c.delta_override = 0.5;
  const auto r = run_one(c, 1.2, 0);
  CHECK(r.analysis.delta == 0.5);
  CHECK(r.report.at("necessary_eta").at("weak").get<double>() == doctest::Approx(0.674235).epsilon(1e-6));
}

TEST_CASE("errors carry the run name") {
  ExperimentConfig c;
  c.mode = TrainMode::SingleData;
  c.steps = 5;
  c.etas = {0.6};
  CHECK_NOTHROW(run_one(c, 0.6, 0));
  c.d = 2;  // bypasses schema validation on purpose
  try {
    run_one(c, 0.6, 3);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("eta0.6_seed3") != std::string::npos);
  }
}

TEST_CASE("verify: default passes, corrupted gradient fails") {
  ExperimentConfig c;
  const auto rep = verify(c);
  for (const auto& chk : rep.checks)
    if (chk.gating) CHECK_MESSAGE(chk.status != CheckStatus::Fail, chk.name << ": " << chk.detail);
  CHECK(rep.ok());
  VerifyOptions o;
  o.corrupt_gradient = true;
  o.noise_draws = 100;
  o.concentration_seeds = 10;
  const auto bad = verify(c, o);
  CHECK(bad.at("gradient_fd").status == CheckStatus::Fail);
  CHECK_FALSE(bad.ok());
}

TEST_CASE("verify: noiseless config reports degenerate noise checks") {
  ExperimentConfig c;
  c.sigma_p = 0.0;
  VerifyOptions o;
  o.concentration_seeds = 20;
  const auto rep = verify(c, o);
  CHECK(rep.at("noise_orthogonality").status == CheckStatus::Degenerate);
  CHECK(rep.at("noise_second_moment").status == CheckStatus::Degenerate);
  CHECK(rep.at("noise_norm_band").status == CheckStatus::Degenerate);
  CHECK(rep.at("concentration_noise_norm").status == CheckStatus::Degenerate);
  CHECK(rep.ok());
}
