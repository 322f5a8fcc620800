#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "benign/concentration.hpp"
#include "benign/config.hpp"

namespace benign {

struct VerifyCheck {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  bool gating = true;  // advisory checks are reported but never fail the suite
  std::string tolerance;
  std::string detail;
  double measured = 0.0;  // failure count, for the concentration-rate checks
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool ok() const;
  const VerifyCheck& at(const std::string& name) const;
  std::string format() const;
};

struct VerifyOptions {
  int noise_draws = 10000;
  int concentration_seeds = 100;
  int gradient_pairs = 100;
  long beta_steps = 2000;
  bool corrupt_gradient = false;  // fault injection: perturbs the analytic gradient
};

// Individual checks. Each is deterministic given the config.
VerifyCheck check_noise_orthogonality(const ExperimentConfig& c, int draws);
VerifyCheck check_noise_second_moment(const ExperimentConfig& c, int draws);
VerifyCheck check_noise_norm_band(const ExperimentConfig& c, int draws);
std::vector<VerifyCheck> check_concentration_rates(const ExperimentConfig& c, int seeds);
VerifyCheck check_gradient(const ExperimentConfig& c, int pairs, bool corrupt = false);
VerifyCheck check_h_roots();
VerifyCheck check_necessary_eta();
VerifyCheck check_homogeneity(const ExperimentConfig& c, int pairs);
VerifyCheck check_permutation_invariance(const ExperimentConfig& c, int pairs);
VerifyCheck check_update_span(const ExperimentConfig& c, int pairs);
VerifyCheck check_phi_weak_steps(const ExperimentConfig& c);
VerifyCheck check_reconstruct_forward(const ExperimentConfig& c);
VerifyCheck check_beta_star_identity(const ExperimentConfig& c, long steps);

/// Smallest k with P(Binomial(trials, p) <= k) >= level.
int binomial_quantile(int trials, double p, double level);

VerifyReport verify(const ExperimentConfig& config, const VerifyOptions& options = {});

}  // namespace benign
