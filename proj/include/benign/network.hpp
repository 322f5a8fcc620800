#pragma once

#include <algorithm>
#include <stdexcept>

#include <Eigen/Dense>

#include "benign/data_model.hpp"
#include "benign/random.hpp"

namespace benign {

/// First-layer weights of the two-branch CNN. Row r of `plus` is w_{+1,r},
/// row r of `minus` is w_{-1,r}. The second layer is fixed at +1 / -1.
template <typename Scalar = double>
struct Weights {
  RowMat<Scalar> plus;
  RowMat<Scalar> minus;
  Scalar sigma_0 = 0;

  Weights() = default;
  Weights(int m, int d, Scalar sigma0 = 0)
      : plus(RowMat<Scalar>::Zero(m, d)), minus(RowMat<Scalar>::Zero(m, d)), sigma_0(sigma0) {}

  int m() const { return static_cast<int>(plus.rows()); }
  int d() const { return static_cast<int>(plus.cols()); }

  /// j in {+1, -1}.
  RowMat<Scalar>& branch(int j) { return j > 0 ? plus : minus; }
  const RowMat<Scalar>& branch(int j) const { return j > 0 ? plus : minus; }

  bool all_finite() const { return plus.allFinite() && minus.allFinite(); }

  template <typename T>
  Weights<T> cast() const {
    Weights<T> w;
    w.plus = plus.template cast<T>();
    w.minus = minus.template cast<T>();
    w.sigma_0 = static_cast<T>(sigma_0);
    return w;
  }

  Weights scaled(Scalar c) const {
    Weights w = *this;
    w.plus *= c;
    w.minus *= c;
    return w;
  }
};

/// ReLU^2.
template <typename Scalar>
Scalar act(Scalar z) {
  const Scalar p = std::max(z, Scalar(0));
  return p * p;
}

/// Derivative of ReLU^2; 0 at the kink.
template <typename Scalar>
Scalar act_prime(Scalar z) {
  return Scalar(2) * std::max(z, Scalar(0));
}

/// d x 3 matrix whose columns are the sample's patches.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 3> patch_matrix(const Sample<Scalar>& s) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> x(s.patches[0].size(), 3);
  for (int p = 0; p < 3; ++p) x.col(p) = s.patches[static_cast<std::size_t>(p)];
  return x;
}

/// Per-branch pre-activations <w_{j,r}, x^(p)>, each m x 3.
template <typename Scalar>
struct Preactivations {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> plus;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> minus;
};

template <typename Scalar>
Preactivations<Scalar> preactivations(const Weights<Scalar>& w,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 3>& x) {
  if (x.rows() != w.d()) throw std::invalid_argument("network: dimension mismatch");
  return {w.plus * x, w.minus * x};
}

template <typename Scalar>
Scalar forward_from_preactivations(const Preactivations<Scalar>& pre, int m) {
  const auto relu2 = [](Scalar z) { return act(z); };
  const Scalar f_plus = pre.plus.unaryExpr(relu2).sum();
  const Scalar f_minus = pre.minus.unaryExpr(relu2).sum();
  return (f_plus - f_minus) / static_cast<Scalar>(m);
}

/// f(x; W) = F_{+1} - F_{-1}, F_j = (1/m) sum_r sum_p act(<w_{j,r}, x^(p)>).
template <typename Scalar>
Scalar forward(const Weights<Scalar>& w, const Sample<Scalar>& s) {
  return forward_from_preactivations(preactivations(w, patch_matrix(s)), w.m());
}

template <typename Scalar>
Scalar loss(const Weights<Scalar>& w, const Sample<Scalar>& s) {
  const Scalar r = forward(w, s) - static_cast<Scalar>(s.label);
  return r * r / Scalar(2);
}

/// Gradient of the per-sample loss; `g` has the shape of the weights.
template <typename Scalar>
struct GradientSlice {
  Weights<Scalar> g;
  Scalar residual = 0;  // f - y
  Scalar f = 0;
};

template <typename Scalar>
GradientSlice<Scalar> gradient(const Weights<Scalar>& w, const Sample<Scalar>& s) {
  const auto x = patch_matrix(s);
  const auto pre = preactivations(w, x);
  const int m = w.m();
  GradientSlice<Scalar> out;
  out.f = forward_from_preactivations(pre, m);
  out.residual = out.f - static_cast<Scalar>(s.label);
  const Scalar scale = out.residual / static_cast<Scalar>(m);
  const auto dact = [](Scalar z) { return act_prime(z); };
  // g_j = (j/m) (f - y) * act'(pre_j) * X^T
  out.g.plus = (scale * pre.plus.unaryExpr(dact)) * x.transpose();
  out.g.minus = (-scale * pre.minus.unaryExpr(dact)) * x.transpose();
  out.g.sigma_0 = w.sigma_0;
  return out;
}

/// w' = w - eta * grad. Pure.
template <typename Scalar>
Weights<Scalar> sgd_step(const Weights<Scalar>& w, const Sample<Scalar>& s, Scalar eta) {
  if (!(eta > Scalar(0))) throw std::invalid_argument("sgd_step: eta must be positive");
  const auto grad = gradient(w, s);
  Weights<Scalar> next = w;
  next.plus = w.plus - eta * grad.g.plus;
  next.minus = w.minus - eta * grad.g.minus;
  return next;
}

/// In-place update from a precomputed gradient; bit-identical to sgd_step.
template <typename Scalar>
void apply_gradient(Weights<Scalar>& w, const GradientSlice<Scalar>& grad, Scalar eta) {
  w.plus = w.plus - eta * grad.g.plus;
  w.minus = w.minus - eta * grad.g.minus;
}

/// i.i.d. N(0, sigma_0^2) entries, plus branch first, row-major.
Weights<double> init_weights(int m, int d, double sigma_0, CounterRng& rng);

}  // namespace benign
