#pragma once

#include <functional>

#include "benign/data_model.hpp"
#include "benign/network.hpp"

namespace benign {

enum class TrainMode { MultiData, SingleData };

struct TrainConfig {
  double eta = 1.2;
  long steps = 6000;
  TrainMode mode = TrainMode::MultiData;
  long snapshot_every = 100;

  void validate() const;
};

/// Cyclic data order. The 1-indexed "i_t = (t+1) mod n" convention maps to
/// t mod n over the 0-indexed sample array; the visiting order is the same.
constexpr int schedule_index(long t, int n) { return static_cast<int>(t % n); }

/// What the observer sees before step t is applied.
struct StepView {
  long t = 0;
  int index = 0;
  const Weights<double>& weights;  // W^(t), before the update
  const Sample<double>& sample;
  double f = 0.0;     // f(x_{i_t}; W^(t))
  double loss = 0.0;  // (f - y)^2 / 2
};

using StepObserver = std::function<void(const StepView&)>;

struct TrainState {
  long t = 0;
  Weights<double> weights;
};

/// Runs exactly config.steps SGD steps in schedule order and returns the
/// final weights. The observer (may be empty) is called once per step, in
/// order, from the calling thread.
Weights<double> run(const Weights<double>& initial, const Dataset<double>& dataset,
                    const TrainConfig& config, const StepObserver& observer = {});

}  // namespace benign
