#include "benign/network.hpp"

namespace benign {

Weights<double> init_weights(int m, int d, double sigma_0, CounterRng& rng) {
  if (m < 1 || d < 1) throw std::invalid_argument("init_weights: m and d must be positive");
  if (!(sigma_0 >= 0.0)) throw std::invalid_argument("init_weights: sigma_0 must be nonnegative");
  Weights<double> w(m, d, sigma_0);
  for (RowMat<double>* b : {&w.plus, &w.minus})
    for (int r = 0; r < m; ++r)
      for (int k = 0; k < d; ++k) (*b)(r, k) = rng.normal(0.0, sigma_0);
  return w;
}

}  // namespace benign
