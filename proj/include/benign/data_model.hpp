#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "benign/random.hpp"

namespace benign {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// The fixed orthogonal signal pair and the per-coordinate noise scale.
/// u = u_norm * e1 and v = v_norm * e2.
template <typename Scalar = double>
struct SignalBasis {
  int d = 0;
  Vec<Scalar> u;
  Vec<Scalar> v;
  Scalar sigma_p = 0;

  Scalar u_norm() const { return u.norm(); }
  Scalar v_norm() const { return v.norm(); }

  template <typename T>
  SignalBasis<T> cast() const {
    return {d, u.template cast<T>(), v.template cast<T>(), static_cast<T>(sigma_p)};
  }
};

enum class SampleKind { Strong, Weak };

constexpr std::string_view to_string(SampleKind k) {
  return k == SampleKind::Strong ? "strong" : "weak";
}

/// Three-patch input in canonical layout:
///   Strong: (y*u, y*v, xi)
///   Weak:   (xi_tilde, y*v, xi)
template <typename Scalar = double>
struct Sample {
  int label = 1;
  std::array<Vec<Scalar>, 3> patches;
  SampleKind kind = SampleKind::Strong;

  bool is_weak() const { return kind == SampleKind::Weak; }
  const Vec<Scalar>& xi() const { return patches[2]; }
  /// nullptr for strong samples.
  const Vec<Scalar>* xi_tilde() const { return is_weak() ? &patches[0] : nullptr; }

  template <typename T>
  Sample<T> cast() const {
    Sample<T> s;
    s.label = label;
    s.kind = kind;
    for (std::size_t p = 0; p < 3; ++p) s.patches[p] = patches[p].template cast<T>();
    return s;
  }
};

template <typename Scalar = double>
struct Dataset {
  std::vector<Sample<Scalar>> samples;
  std::vector<int> weak_indices;  // sorted ascending
  std::uint64_t seed = 0;
  SignalBasis<Scalar> basis;

  int size() const { return static_cast<int>(samples.size()); }
  bool is_weak(int i) const { return samples[static_cast<std::size_t>(i)].is_weak(); }
};

struct ExactCount {
  int k = 0;
};
struct Bernoulli {
  double rho = 0.0;
};
using WeakMode = std::variant<ExactCount, Bernoulli>;

enum class LabelMode { IID, Balanced };

SignalBasis<double> make_basis(int d, double u_norm, double v_norm, double sigma_p);

/// Draws g ~ N(0, sigma_p^2 I) and projects out u and v.
Vec<double> sample_noise(const SignalBasis<double>& basis, CounterRng& rng);

Sample<double> make_sample(const SignalBasis<double>& basis, int label, SampleKind kind,
                           Vec<double> xi, Vec<double> xi_tilde = {});

/// Draws labels, then weak positions, then noise in sample order. The stream
/// is CounterRng::derive(seed, stream).
Dataset<double> sample_dataset(const SignalBasis<double>& basis, int n, WeakMode weak_mode,
                               LabelMode label_mode, std::uint64_t seed,
                               std::string_view stream = "dataset");

/// Size-1 dataset holding a noiseless strong sample (xi = 0). This is the
/// two-patch single-data setting embedded in the three-patch model.
Dataset<double> single_sample_dataset(const SignalBasis<double>& basis, int label = 1);

/// Orthogonality tolerance for noise patches: 1e-10 * sigma_p * max(|u|,|v|) * sqrt(d).
double noise_orthogonality_tolerance(const SignalBasis<double>& basis);

}  // namespace benign
