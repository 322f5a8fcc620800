#include "benign/trainer.hpp"

#include <stdexcept>
#include <string>

namespace benign {

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("train: eta must be positive");
  if (steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (snapshot_every < 1) throw std::invalid_argument("train: snapshot_every must be >= 1");
}

Weights<double> run(const Weights<double>& initial, const Dataset<double>& dataset,
                    const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  if (dataset.size() < 1) throw std::invalid_argument("train: empty dataset");
  if (initial.d() != dataset.basis.d)
    throw std::invalid_argument("train: weight dimension " + std::to_string(initial.d()) +
                                " does not match data dimension " + std::to_string(dataset.basis.d));
  if (config.mode == TrainMode::SingleData) {
    const auto& s = dataset.samples.front();
    if (dataset.size() != 1 || s.is_weak() || !s.xi().isZero(0.0))
      throw std::invalid_argument("train: single-data mode needs one noiseless strong sample");
  }

  TrainState state{0, initial};
  const int n = dataset.size();
  for (; state.t < config.steps; ++state.t) {
    const int i = schedule_index(state.t, n);
    const auto& sample = dataset.samples[static_cast<std::size_t>(i)];
    const auto grad = gradient(state.weights, sample);
    if (observer) {
      observer(StepView{state.t, i, state.weights, sample, grad.f,
                        grad.residual * grad.residual / 2.0});
    }
    apply_gradient(state.weights, grad, config.eta);
  }
  return state.weights;
}

}  // namespace benign
