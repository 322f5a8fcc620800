#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "benign/data_model.hpp"
#include "benign/evaluation.hpp"
#include "benign/trainer.hpp"

namespace benign {

/// Raised for malformed config files; `field` is a JSON-pointer style path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  int d = 64;
  int n = 16;
  int m = 8;
  double u_norm = 2.0;
  double v_norm = 0.4;
  double sigma_p = 0.1;
  std::optional<double> sigma_0;  // unset: 1 / (max(|u|, |v|, sigma_p sqrt d) sqrt d)
  std::optional<int> weak_count = 2;
  std::optional<double> rho;  // Bernoulli weak fraction, exclusive with weak_count
  LabelMode label_mode = LabelMode::IID;
  std::vector<double> etas{1.2, 0.1};
  long steps = 6000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  TrainMode mode = TrainMode::MultiData;
  std::optional<double> delta_override;
  int n_test = 32;
  int weak_count_test = 4;
  long snapshot_every = 100;
  std::string out_dir = "runs";
  double p = 0.01;
  int burn_in_epochs = 2;
  int jobs = 1;

  double resolved_sigma_0() const;
  WeakMode weak_mode() const;
  SignalBasis<double> basis() const;
  TestConfig test_config(std::uint64_t seed) const;
  TrainConfig train_config(double eta) const;
  long burn_in() const { return static_cast<long>(burn_in_epochs) * (mode == TrainMode::SingleData ? 1 : n); }
};

/// Validates and fills defaults. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved form (sigma_0 filled in).
nlohmann::json config_to_json(const ExperimentConfig& c);

}  // namespace benign
