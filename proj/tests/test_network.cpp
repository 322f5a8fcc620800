#include <doctest.h>

#include <cmath>
#include <vector>

#include "benign/data_model.hpp"
#include "benign/io.hpp"
#include "benign/network.hpp"

using namespace benign;

namespace {

Sample<double> hand_sample(int d = 2) {
  // u = (2,0), v = (0,0.4), y = +1, strong, xi = 0
  Sample<double> s;
  s.label = 1;
  s.kind = SampleKind::Strong;
  s.patches[0] = Vec<double>::Zero(d);
  s.patches[0](0) = 2.0;
  s.patches[1] = Vec<double>::Zero(d);
  s.patches[1](1) = 0.4;
  s.patches[2] = Vec<double>::Zero(d);
  return s;
}

// Loop-by-loop forward in long double; no library code involved.
long double naive_loss(const std::vector<std::vector<long double>>& wp,
                       const std::vector<std::vector<long double>>& wm, const Sample<double>& s) {
  const auto m = static_cast<long double>(wp.size());
  long double f = 0;
  for (int sign : {1, -1}) {
    const auto& w = sign > 0 ? wp : wm;
    for (const auto& row : w)
      for (const auto& x : s.patches) {
        long double z = 0;
        for (std::size_t k = 0; k < row.size(); ++k) z += row[k] * static_cast<long double>(x(static_cast<Eigen::Index>(k)));
        const long double r = z > 0 ? z : 0;
        f += sign * r * r;
      }
  }
  f /= m;
  const long double res = f - s.label;
  return res * res / 2;
}

std::vector<std::vector<long double>> rows(const RowMat<double>& m) {
  std::vector<std::vector<long double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index k = 0; k < m.cols(); ++k) out[static_cast<std::size_t>(r)].push_back(m(r, k));
  return out;
}

}  // namespace

TEST_CASE("activation values") {
  CHECK(act(2.0) == 4.0);
  CHECK(act_prime(2.0) == 4.0);
  CHECK(act(-1.0) == 0.0);
  CHECK(act_prime(-1.0) == 0.0);
  CHECK(act(0.0) == 0.0);
  CHECK(act_prime(0.0) == 0.0);
}

TEST_CASE("init_weights: zero scale, reproducibility and entry std") {
  auto r0 = CounterRng::derive(1, "init");
  const auto zero = init_weights(8, 64, 0.0, r0);
  CHECK(zero.plus.isZero(0.0));
  CHECK(zero.minus.isZero(0.0));

  auto a = CounterRng::derive(7, "init");
  auto b = CounterRng::derive(7, "init");
  const double s0 = 1.0 / 16.0;
  const auto wa = init_weights(8, 64, s0, a);
  const auto wb = init_weights(8, 64, s0, b);
  CHECK(wa.plus == wb.plus);
  CHECK(wa.minus == wb.minus);

  double sum = 0, sum2 = 0;
  for (const auto* m : {&wa.plus, &wa.minus})
    for (Eigen::Index k = 0; k < m->size(); ++k) {
      sum += m->data()[k];
      sum2 += m->data()[k] * m->data()[k];
    }
  const double n = 1024.0;
  const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  CHECK(std::abs(sd / s0 - 1.0) < 0.05);
}

TEST_CASE("forward and loss: zero weights and the hand case") {
  const auto s = hand_sample();
  Weights<double> w(1, 2);
  CHECK(forward(w, s) == 0.0);
  CHECK(loss(w, s) == 0.5);
  auto neg = s;
  neg.label = -1;
  CHECK(loss(w, neg) == 0.5);

  w.plus(0, 0) = 0.5;
  CHECK(forward(w, s) == 1.0);
  CHECK(loss(w, s) == 0.0);
}

TEST_CASE("forward rejects a dimension mismatch") {
  Weights<double> w(2, 5);
  CHECK_THROWS_AS(forward(w, hand_sample(3)), std::invalid_argument);
}

TEST_CASE("gradient and step: hand case") {
  const auto s = hand_sample();
  Weights<double> w(1, 2);
  w.plus(0, 0) = 1.0;
  const auto g = gradient(w, s);
  CHECK(g.f == 4.0);
  CHECK(g.residual == 3.0);
  CHECK(g.g.plus(0, 0) == 24.0);
  CHECK(g.g.plus(0, 1) == 0.0);
  CHECK(g.g.minus.isZero(0.0));

  const auto next = sgd_step(w, s, 0.1);
  CHECK(next.plus(0, 0) == doctest::Approx(-1.4).epsilon(1e-15));
  CHECK(next.plus(0, 1) == 0.0);
  CHECK_THROWS_AS(sgd_step(w, s, 0.0), std::invalid_argument);

  Weights<double> at_target(1, 2);
  at_target.plus(0, 0) = 0.5;
  CHECK(gradient(at_target, s).g.plus.isZero(0.0));
  const auto same = sgd_step(at_target, s, 0.3);
  CHECK(same.plus == at_target.plus);
  CHECK(same.minus == at_target.minus);
}

TEST_CASE("apply_gradient is bit-identical to sgd_step") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  const auto ds = sample_dataset(b, 4, ExactCount{1}, LabelMode::IID, 0);
  auto rng = CounterRng::derive(0, "init");
  auto w = init_weights(8, 64, 0.2, rng);
  for (const auto& s : ds.samples) {
    const auto pure = sgd_step(w, s, 1.2);
    apply_gradient(w, gradient(w, s), 1.2);
    CHECK(pure.plus == w.plus);
    CHECK(pure.minus == w.minus);
  }
}

TEST_CASE("gradient matches central differences of a naive long-double loss") {
  const auto b = make_basis(16, 2.0, 0.4, 0.3);
  const auto ds = sample_dataset(b, 8, ExactCount{3}, LabelMode::IID, 1);
  int tested = 0;
  double worst = 0.0;
  for (std::uint64_t k = 0; tested < 20; ++k) {
    auto rng = CounterRng::derive(k, "fd");
    const auto w = init_weights(4, 16, 0.3, rng);
    const auto& s = ds.samples[k % ds.samples.size()];
    const auto pre = preactivations(w, patch_matrix(s));
    if (pre.plus.cwiseAbs().minCoeff() < 1e-3 || pre.minus.cwiseAbs().minCoeff() < 1e-3) continue;
    ++tested;
    const auto g = gradient(w, s);
    auto wp = rows(w.plus), wm = rows(w.minus);
    double err = 0, scale = 0;
    for (int sign : {1, -1}) {
      auto& target = sign > 0 ? wp : wm;
      const auto& ga = g.g.branch(sign);
      for (std::size_t r = 0; r < target.size(); ++r)
        for (std::size_t c = 0; c < target[r].size(); ++c) {
          const long double orig = target[r][c];
          const long double h = 1e-5L * (1 + std::abs(orig));
          target[r][c] = orig + h;
          const long double up = naive_loss(wp, wm, s);
          target[r][c] = orig - h;
          const long double down = naive_loss(wp, wm, s);
          target[r][c] = orig;
          const double fd = static_cast<double>((up - down) / (2 * h));
          err = std::max(err, std::abs(fd - ga(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
          scale = std::max(scale, std::abs(fd));
        }
    }
    worst = std::max(worst, err / scale);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("2-homogeneity and neuron permutation") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  const auto ds = sample_dataset(b, 16, ExactCount{2}, LabelMode::IID, 3);
  auto rng = CounterRng::derive(3, "init");
  const auto w = init_weights(8, 64, 0.125, rng);
  Weights<double> p = w;
  for (int r = 0; r < 8; ++r) {
    p.plus.row(r) = w.plus.row((r + 3) % 8);
    p.minus.row(r) = w.minus.row(7 - r);
  }
  for (const auto& s : ds.samples) {
    const double f = forward(w, s);
    CHECK(forward(w.scaled(2.0), s) == doctest::Approx(4.0 * f).epsilon(1e-10));
    CHECK(std::abs(forward(p, s) - f) <= 1e-15 * std::max(1.0, std::abs(f)) + 1e-17);
  }
}

TEST_CASE("update stays in the span of the sample's patches") {
  const auto b = make_basis(32, 2.0, 0.4, 0.2);
  const auto ds = sample_dataset(b, 6, ExactCount{2}, LabelMode::IID, 5);
  auto rng = CounterRng::derive(5, "init");
  const auto w = init_weights(4, 32, 0.3, rng);
  for (const auto& s : ds.samples) {
    const auto next = sgd_step(w, s, 0.7);
    const Eigen::MatrixXd x = patch_matrix(s);
    // projector onto the complement of span(x)
    const Eigen::MatrixXd q = x.householderQr().householderQ() * Eigen::MatrixXd::Identity(32, 3);
    const Eigen::MatrixXd comp = Eigen::MatrixXd::Identity(32, 32) - q * q.transpose();
    for (int j : {1, -1}) {
      const Eigen::MatrixXd before = w.branch(j) * comp;
      const Eigen::MatrixXd after = next.branch(j) * comp;
      CHECK((after - before).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("two steps equal one summed step only when the samples do not interact") {
  // d = 4; s1 lives on e0, s2 on e1, s3 shares e0 with s1
  auto make = [](int axis, double scale) {
    Sample<double> s;
    s.label = 1;
    for (auto& p : s.patches) p = Vec<double>::Zero(4);
    s.patches[0](axis) = scale;
    return s;
  };
  const auto s1 = make(0, 1.0), s2 = make(1, 1.5), s3 = make(0, 0.8);
  Weights<double> w(1, 4);
  w.plus << 0.4, 0.6, 0.1, -0.2;
  w.minus << -0.3, 0.2, 0.5, 0.1;
  const double eta = 0.2;

  const auto two = sgd_step(sgd_step(w, s1, eta), s2, eta);
  Weights<double> summed = w;
  const auto g1 = gradient(w, s1), g2 = gradient(w, s2);
  summed.plus -= eta * (g1.g.plus + g2.g.plus);
  summed.minus -= eta * (g1.g.minus + g2.g.minus);
  CHECK((two.plus - summed.plus).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((two.minus - summed.minus).cwiseAbs().maxCoeff() <= 1e-15);

  const auto coupled = sgd_step(sgd_step(w, s1, eta), s3, eta);
  Weights<double> coupled_sum = w;
  const auto g3 = gradient(w, s3);
  coupled_sum.plus -= eta * (g1.g.plus + g3.g.plus);
  CHECK((coupled.plus - coupled_sum.plus).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("weights JSON round trip") {
  auto rng = CounterRng::derive(2, "init");
  const auto w = init_weights(3, 5, 0.7, rng);
  const auto back = weights_from_json(nlohmann::json::parse(weights_to_json(w).dump()));
  CHECK(back.plus == w.plus);
  CHECK(back.minus == w.minus);
  CHECK(back.sigma_0 == w.sigma_0);
}
