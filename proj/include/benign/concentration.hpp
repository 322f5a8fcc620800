#pragma once

#include <string>
#include <vector>

#include "benign/data_model.hpp"
#include "benign/network.hpp"

namespace benign {

enum class CheckStatus { Pass, Fail, NotApplicable, Degenerate };

std::string_view to_string(CheckStatus s);

struct ConcentrationCheck {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
};

/// Realized-sample check of the initialization / noise concentration bounds.
/// Families: label_balance, noise_norm, noise_correlation, init_u, init_v, init_xi.
struct ConcentrationReport {
  std::vector<ConcentrationCheck> checks;

  const ConcentrationCheck& at(std::string_view name) const;
  /// True when no check failed (not-applicable and degenerate are not failures).
  bool ok() const;
};

ConcentrationReport verify_concentration(const Dataset<double>& dataset,
                                         const Weights<double>& weights, double p);

}  // namespace benign
