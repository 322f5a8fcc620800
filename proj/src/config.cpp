#include "benign/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "benign/io.hpp"

namespace benign {

double ExperimentConfig::resolved_sigma_0() const {
  if (sigma_0) return *sigma_0;
  const double root_d = std::sqrt(static_cast<double>(d));
  return 1.0 / (std::max({u_norm, v_norm, sigma_p * root_d}) * root_d);
}

WeakMode ExperimentConfig::weak_mode() const {
  if (rho) return Bernoulli{*rho};
  return ExactCount{weak_count.value_or(0)};
}

SignalBasis<double> ExperimentConfig::basis() const { return make_basis(d, u_norm, v_norm, sigma_p); }

TestConfig ExperimentConfig::test_config(std::uint64_t seed) const {
  TestConfig t;
  t.n_test = n_test;
  t.weak_mode = ExactCount{weak_count_test};
  t.label_mode = label_mode;
  t.seeds = {seed};
  return t;
}

TrainConfig ExperimentConfig::train_config(double eta) const {
  TrainConfig t;
  t.eta = eta;
  t.steps = steps;
  t.mode = mode;
  t.snapshot_every = snapshot_every;
  return t;
}

namespace {

using nlohmann::json;

const std::set<std::string> kKeys{
    "d",     "n",     "m",    "u_norm",         "v_norm", "sigma_p",         "sigma_0",
    "weak_count", "rho", "eta", "steps",        "seeds",  "mode",            "delta_override",
    "n_test", "weak_count_test", "snapshot_every", "out_dir", "label_mode", "p",
    "burn_in_epochs", "jobs"};

std::string path_of(const std::string& key) { return "/" + key; }

long get_int(const json& j, const std::string& key, long lo, long hi) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(path_of(key), "expected an integer");
  const long x = v.get<long>();
  if (x < lo || x > hi)
    throw ConfigError(path_of(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

double get_positive(const json& j, const std::string& key) {
  const double x = number(j.at(key), path_of(key));
  if (x <= 0.0) throw ConfigError(path_of(key), "must be > 0");
  return x;
}

double get_nonneg(const json& j, const std::string& key) {
  const double x = number(j.at(key), path_of(key));
  if (x < 0.0) throw ConfigError(path_of(key), "must be >= 0");
  return x;
}

double get_open_unit(const json& j, const std::string& key) {
  const double x = number(j.at(key), path_of(key));
  if (!(x > 0.0 && x < 1.0)) throw ConfigError(path_of(key), "must lie in (0, 1)");
  return x;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKeys.count(key)) throw ConfigError(path_of(key), "unknown key");

  ExperimentConfig c;
  constexpr long kBig = 1L << 40;
  if (j.contains("d")) c.d = static_cast<int>(get_int(j, "d", 3, 1 << 20));
  if (j.contains("n")) c.n = static_cast<int>(get_int(j, "n", 1, 1 << 24));
  if (j.contains("m")) c.m = static_cast<int>(get_int(j, "m", 1, 1 << 20));
  if (j.contains("u_norm")) c.u_norm = get_positive(j, "u_norm");
  if (j.contains("v_norm")) c.v_norm = get_positive(j, "v_norm");
  if (j.contains("sigma_p")) c.sigma_p = get_nonneg(j, "sigma_p");
  if (j.contains("sigma_0")) c.sigma_0 = get_nonneg(j, "sigma_0");

  if (j.contains("weak_count") && j.contains("rho"))
    throw ConfigError("/rho", "weak_count and rho are mutually exclusive");
  if (j.contains("rho")) {
    const double r = number(j.at("rho"), "/rho");
    if (r < 0.0 || r > 1.0) throw ConfigError("/rho", "must lie in [0, 1]");
    c.rho = r;
    c.weak_count.reset();
  }
  if (j.contains("weak_count")) c.weak_count = static_cast<int>(get_int(j, "weak_count", 0, 1 << 24));

  if (j.contains("label_mode")) {
    const auto& v = j.at("label_mode");
    if (!v.is_string()) throw ConfigError("/label_mode", "expected \"iid\" or \"balanced\"");
    const auto s = v.get<std::string>();
    if (s == "iid")
      c.label_mode = LabelMode::IID;
    else if (s == "balanced")
      c.label_mode = LabelMode::Balanced;
    else
      throw ConfigError("/label_mode", "expected \"iid\" or \"balanced\"");
  }

  if (j.contains("eta")) {
    const auto& v = j.at("eta");
    c.etas.clear();
    if (v.is_array()) {
      if (v.empty()) throw ConfigError("/eta", "must not be empty");
      for (std::size_t k = 0; k < v.size(); ++k) {
        const auto path = "/eta/" + std::to_string(k);
        const double x = number(v[k], path);
        if (x <= 0.0) throw ConfigError(path, "must be > 0");
        c.etas.push_back(x);
      }
    } else {
      c.etas.push_back(get_positive(j, "eta"));
    }
  }
  if (j.contains("steps")) c.steps = get_int(j, "steps", 1, kBig);

  if (j.contains("seeds")) {
    const auto& v = j.at("seeds");
    c.seeds.clear();
    auto seed_of = [](const json& s, const std::string& path) {
      if (!s.is_number_integer() || s.get<long long>() < 0)
        throw ConfigError(path, "expected a non-negative integer");
      return s.get<std::uint64_t>();
    };
    if (v.is_array()) {
      if (v.empty()) throw ConfigError("/seeds", "must not be empty");
      for (std::size_t k = 0; k < v.size(); ++k) c.seeds.push_back(seed_of(v[k], "/seeds/" + std::to_string(k)));
    } else {
      c.seeds.push_back(seed_of(v, "/seeds"));
    }
  }

  if (j.contains("mode")) {
    const auto& v = j.at("mode");
    const auto s = v.is_string() ? v.get<std::string>() : std::string{};
    if (s == "multi")
      c.mode = TrainMode::MultiData;
    else if (s == "single")
      c.mode = TrainMode::SingleData;
    else
      throw ConfigError("/mode", "expected \"multi\" or \"single\"");
  }
  if (j.contains("delta_override")) c.delta_override = get_open_unit(j, "delta_override");
  if (j.contains("n_test")) c.n_test = static_cast<int>(get_int(j, "n_test", 1, 1 << 24));
  if (j.contains("weak_count_test"))
    c.weak_count_test = static_cast<int>(get_int(j, "weak_count_test", 0, c.n_test));
  if (c.weak_count_test > c.n_test) throw ConfigError("/weak_count_test", "must not exceed n_test");
  if (j.contains("snapshot_every")) c.snapshot_every = get_int(j, "snapshot_every", 1, kBig);
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string() || j.at("out_dir").get<std::string>().empty())
      throw ConfigError("/out_dir", "expected a non-empty string");
    c.out_dir = j.at("out_dir").get<std::string>();
  }
  if (j.contains("p")) c.p = get_open_unit(j, "p");
  if (j.contains("burn_in_epochs")) c.burn_in_epochs = static_cast<int>(get_int(j, "burn_in_epochs", 0, 1 << 20));
  if (j.contains("jobs")) c.jobs = static_cast<int>(get_int(j, "jobs", 1, 1024));
  // single-data runs ignore n and weak_count
  if (c.mode == TrainMode::MultiData && c.weak_count && *c.weak_count > c.n)
    throw ConfigError("/weak_count", "must not exceed n");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"d", c.d},
         {"n", c.n},
         {"m", c.m},
         {"u_norm", c.u_norm},
         {"v_norm", c.v_norm},
         {"sigma_p", c.sigma_p},
         {"sigma_0", c.resolved_sigma_0()},
         {"label_mode", c.label_mode == LabelMode::IID ? "iid" : "balanced"},
         {"eta", c.etas},
         {"steps", c.steps},
         {"seeds", c.seeds},
         {"mode", c.mode == TrainMode::MultiData ? "multi" : "single"},
         {"n_test", c.n_test},
         {"weak_count_test", c.weak_count_test},
         {"snapshot_every", c.snapshot_every},
         {"out_dir", c.out_dir},
         {"p", c.p},
         {"burn_in_epochs", c.burn_in_epochs},
         {"jobs", c.jobs}};
  if (c.rho)
    j["rho"] = *c.rho;
  else
    j["weak_count"] = c.weak_count.value_or(0);
  if (c.delta_override) j["delta_override"] = *c.delta_override;
  return j;
}

}  // namespace benign
