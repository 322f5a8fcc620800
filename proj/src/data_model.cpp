#include "benign/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace benign {

SignalBasis<double> make_basis(int d, double u_norm, double v_norm, double sigma_p) {
  if (d < 3) throw std::invalid_argument("make_basis: d must be >= 3, got " + std::to_string(d));
  if (!(u_norm > 0.0) || !(v_norm > 0.0))
    throw std::invalid_argument("make_basis: signal norms must be positive");
  if (!(sigma_p >= 0.0)) throw std::invalid_argument("make_basis: sigma_p must be nonnegative");
  SignalBasis<double> b;
  b.d = d;
  b.u = Vec<double>::Zero(d);
  b.v = Vec<double>::Zero(d);
  b.u(0) = u_norm;
  b.v(1) = v_norm;
  b.sigma_p = sigma_p;
  return b;
}

Vec<double> sample_noise(const SignalBasis<double>& basis, CounterRng& rng) {
  Vec<double> g(basis.d);
  for (int k = 0; k < basis.d; ++k) g(k) = rng.normal(0.0, basis.sigma_p);
  const double cu = g.dot(basis.u) / basis.u.squaredNorm();
  const double cv = g.dot(basis.v) / basis.v.squaredNorm();
  g -= cu * basis.u;
  g -= cv * basis.v;
  return g;
}

Sample<double> make_sample(const SignalBasis<double>& basis, int label, SampleKind kind,
                           Vec<double> xi, Vec<double> xi_tilde) {
  if (label != 1 && label != -1) throw std::invalid_argument("make_sample: label must be +1 or -1");
  if (xi.size() != basis.d) throw std::invalid_argument("make_sample: noise dimension mismatch");
  Sample<double> s;
  s.label = label;
  s.kind = kind;
  const double y = label;
  if (kind == SampleKind::Strong) {
    s.patches[0] = y * basis.u;
  } else {
    if (xi_tilde.size() != basis.d)
      throw std::invalid_argument("make_sample: weak sample needs a second noise patch");
    s.patches[0] = std::move(xi_tilde);
  }
  s.patches[1] = y * basis.v;
  s.patches[2] = std::move(xi);
  return s;
}

namespace {

// First k entries of a partial Fisher-Yates shuffle of 0..n-1.
std::vector<int> choose_without_replacement(int n, int k, CounterRng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

Dataset<double> sample_dataset(const SignalBasis<double>& basis, int n, WeakMode weak_mode,
                               LabelMode label_mode, std::uint64_t seed, std::string_view stream) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be positive");
  CounterRng rng = CounterRng::derive(seed, stream);

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  if (label_mode == LabelMode::IID) {
    for (auto& y : labels) y = rng.coin() ? 1 : -1;
  } else {
    for (int i : choose_without_replacement(n, (n + 1) / 2, rng)) labels[static_cast<std::size_t>(i)] = 1;
  }

  std::vector<int> weak;
  if (const auto* exact = std::get_if<ExactCount>(&weak_mode)) {
    if (exact->k < 0 || exact->k > n)
      throw std::invalid_argument("sample_dataset: weak count " + std::to_string(exact->k) +
                                  " outside [0, " + std::to_string(n) + "]");
    weak = choose_without_replacement(n, exact->k, rng);
  } else {
    const double rho = std::get<Bernoulli>(weak_mode).rho;
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("sample_dataset: rho outside [0, 1]");
    for (int i = 0; i < n; ++i)
      if (rng.uniform() < rho) weak.push_back(i);
  }

  Dataset<double> ds;
  ds.seed = seed;
  ds.basis = basis;
  ds.weak_indices = weak;
  ds.samples.reserve(static_cast<std::size_t>(n));
  std::size_t next_weak = 0;
  for (int i = 0; i < n; ++i) {
    const bool is_weak = next_weak < weak.size() && weak[next_weak] == i;
    if (is_weak) ++next_weak;
    Vec<double> xi = sample_noise(basis, rng);
    if (is_weak) {
      Vec<double> xi_tilde = sample_noise(basis, rng);
      ds.samples.push_back(make_sample(basis, labels[static_cast<std::size_t>(i)], SampleKind::Weak,
                                       std::move(xi), std::move(xi_tilde)));
    } else {
      ds.samples.push_back(
          make_sample(basis, labels[static_cast<std::size_t>(i)], SampleKind::Strong, std::move(xi)));
    }
  }
  return ds;
}

Dataset<double> single_sample_dataset(const SignalBasis<double>& basis, int label) {
  Dataset<double> ds;
  ds.basis = basis;
  ds.samples.push_back(make_sample(basis, label, SampleKind::Strong, Vec<double>::Zero(basis.d)));
  return ds;
}

double noise_orthogonality_tolerance(const SignalBasis<double>& basis) {
  return 1e-10 * basis.sigma_p * std::max(basis.u_norm(), basis.v_norm()) *
         std::sqrt(static_cast<double>(basis.d));
}

}  // namespace benign
