#pragma once

#include <cstdint>
#include <vector>

#include "benign/data_model.hpp"
#include "benign/network.hpp"

namespace benign {

/// Correct iff y * f > 0; an exact zero counts as incorrect.
bool classify(const Weights<double>& w, const Sample<double>& s);

/// y * f split by patch role. The three parts sum to y * f.
struct Decomposition {
  double strong = 0.0;  // u-patch term, 0 for weak samples
  double weak = 0.0;    // v-patch term
  double noise = 0.0;   // xi (and xi~ for weak samples)
};

Decomposition decompose(const Weights<double>& w, const Sample<double>& s);

struct SampleEval {
  int y = 1;
  SampleKind kind = SampleKind::Strong;
  double f = 0.0;
  bool correct = false;
  Decomposition parts;
  std::uint64_t seed = 0;
};

struct EvalReport {
  double accuracy_overall = 0.0;
  double accuracy_strong = 0.0;  // NaN when there are no strong test samples
  double accuracy_weak = 0.0;    // NaN when there are no weak test samples
  int n_test = 0;
  int n_weak_test = 0;
  int n_correct = 0;
  int n_correct_weak = 0;
  std::vector<SampleEval> per_sample;

  int misclassified() const { return n_test - n_correct; }
  int misclassified_weak() const { return n_weak_test - n_correct_weak; }
};

struct TestConfig {
  int n_test = 32;
  WeakMode weak_mode = ExactCount{4};
  LabelMode label_mode = LabelMode::IID;
  std::vector<std::uint64_t> seeds;
};

/// Scores a fixed list of samples.
EvalReport evaluate_samples(const Weights<double>& w, const std::vector<Sample<double>>& samples,
                            std::uint64_t seed = 0);

/// Fresh test set per seed (stream "test"), pooled over seeds.
EvalReport evaluate(const Weights<double>& w, const SignalBasis<double>& basis,
                    const TestConfig& config);

}  // namespace benign
