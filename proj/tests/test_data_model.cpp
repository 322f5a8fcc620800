#include <doctest.h>

#include <cmath>

#include "benign/data_model.hpp"
#include "benign/io.hpp"

using namespace benign;

TEST_CASE("make_basis places the signals on the first two axes") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  CHECK(b.u.size() == 64);
  CHECK(b.u(0) == 2.0);
  CHECK(b.v(1) == 0.4);
  CHECK(b.u.tail(63).isZero(0.0));
  CHECK(b.v(0) == 0.0);
  CHECK(b.v.tail(62).isZero(0.0));
  CHECK(b.u.dot(b.v) == 0.0);
}

TEST_CASE("make_basis rejects d < 3 and non-positive norms") {
  CHECK_THROWS_AS(make_basis(2, 1.0, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_basis(8, 0.0, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_basis(8, 1.0, -1.0, 0.1), std::invalid_argument);
  CHECK_NOTHROW(make_basis(3, 1.0, 1.0, 0.0));
}

TEST_CASE("noiseless basis draws zero noise") {
  const auto b = make_basis(3, 1.0, 1.0, 0.0);
  auto rng = CounterRng::derive(0, "noise");
  for (int k = 0; k < 10; ++k) CHECK(sample_noise(b, rng).isZero(0.0));
}

TEST_CASE("noise is orthogonal to both signals with the projected second moment") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  auto rng = CounterRng::derive(5, "noise");
  const int draws = 10000;
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) {
    const auto xi = sample_noise(b, rng);
    REQUIRE(std::abs(xi.dot(b.u)) <= 1e-10);
    REQUIRE(std::abs(xi.dot(b.v)) <= 1e-10);
    sum += xi.squaredNorm();
  }
  // sigma_p^2 (d - 2), see tests/oracles/derive.py
  CHECK(std::abs(sum / draws - 0.62) <= 0.01);
}

TEST_CASE("sample_dataset honors the exact weak count and patch layout") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  const auto ds = sample_dataset(b, 16, ExactCount{2}, LabelMode::IID, 9);
  REQUIRE(ds.size() == 16);
  CHECK(ds.weak_indices.size() == 2);
  CHECK(std::is_sorted(ds.weak_indices.begin(), ds.weak_indices.end()));
  for (int i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[static_cast<std::size_t>(i)];
    CHECK((s.label == 1 || s.label == -1));
    CHECK(s.patches[1] == (s.label * b.v).eval());
    if (s.is_weak()) {
      REQUIRE(s.xi_tilde() != nullptr);
      CHECK(std::abs(s.patches[0].dot(b.u)) <= 1e-10);
      CHECK(s.patches[0].norm() > 0.0);
    } else {
      CHECK(s.xi_tilde() == nullptr);
      CHECK(s.patches[0] == (s.label * b.u).eval());
    }
  }
}

TEST_CASE("balanced labels without weak samples") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  const auto ds = sample_dataset(b, 16, ExactCount{0}, LabelMode::Balanced, 2);
  int pos = 0;
  for (const auto& s : ds.samples) {
    CHECK(s.kind == SampleKind::Strong);
    pos += s.label == 1;
  }
  CHECK(pos == 8);
  CHECK(ds.weak_indices.empty());
}

TEST_CASE("Bernoulli weak mode and invalid modes") {
  const auto b = make_basis(16, 2.0, 0.4, 0.1);
  const auto all = sample_dataset(b, 10, Bernoulli{1.0}, LabelMode::IID, 1);
  CHECK(all.weak_indices.size() == 10);
  const auto none = sample_dataset(b, 10, Bernoulli{0.0}, LabelMode::IID, 1);
  CHECK(none.weak_indices.empty());
  CHECK_THROWS(sample_dataset(b, 4, ExactCount{5}, LabelMode::IID, 1));
  CHECK_THROWS(sample_dataset(b, 0, ExactCount{0}, LabelMode::IID, 1));
}

TEST_CASE("same seed gives byte-identical datasets; other streams differ") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  const auto a = sample_dataset(b, 16, ExactCount{2}, LabelMode::IID, 4);
  const auto c = sample_dataset(b, 16, ExactCount{2}, LabelMode::IID, 4);
  CHECK(dataset_to_json(a).dump() == dataset_to_json(c).dump());
  const auto t = sample_dataset(b, 16, ExactCount{2}, LabelMode::IID, 4, "test");
  CHECK(dataset_to_json(a).dump() != dataset_to_json(t).dump());
}

TEST_CASE("single-sample dataset is one noiseless strong sample") {
  const auto b = make_basis(8, 2.0, 0.4, 0.3);
  const auto ds = single_sample_dataset(b, -1);
  REQUIRE(ds.size() == 1);
  CHECK(ds.samples[0].label == -1);
  CHECK(ds.samples[0].kind == SampleKind::Strong);
  CHECK(ds.samples[0].xi().isZero(0.0));
}

TEST_CASE("dataset JSON round trip is exact") {
  const auto b = make_basis(64, 2.0, 0.4, 0.1);
  const auto ds = sample_dataset(b, 16, ExactCount{2}, LabelMode::IID, 3);
  const auto back = dataset_from_json(nlohmann::json::parse(dataset_to_json(ds).dump()));
  REQUIRE(back.size() == ds.size());
  CHECK(back.weak_indices == ds.weak_indices);
  for (int i = 0; i < ds.size(); ++i)
    for (std::size_t p = 0; p < 3; ++p)
      CHECK(back.samples[static_cast<std::size_t>(i)].patches[p] == ds.samples[static_cast<std::size_t>(i)].patches[p]);
}
