#include "benign/evaluation.hpp"

#include <cmath>
#include <limits>

namespace benign {

bool classify(const Weights<double>& w, const Sample<double>& s) {
  return s.label * forward(w, s) > 0.0;
}

namespace {

// sum_j (j y / m) sum_r act(<w_{j,r}, x>)
double patch_term(const Weights<double>& w, const Vec<double>& x, int y) {
  const auto relu2 = [](double z) { return act(z); };
  const double plus = (w.plus * x).unaryExpr(relu2).sum();
  const double minus = (w.minus * x).unaryExpr(relu2).sum();
  return y * (plus - minus) / static_cast<double>(w.m());
}

}  // namespace

Decomposition decompose(const Weights<double>& w, const Sample<double>& s) {
  Decomposition out;
  const double first = patch_term(w, s.patches[0], s.label);
  out.weak = patch_term(w, s.patches[1], s.label);
  out.noise = patch_term(w, s.patches[2], s.label);
  if (s.is_weak())
    out.noise += first;
  else
    out.strong = first;
  return out;
}

EvalReport evaluate_samples(const Weights<double>& w, const std::vector<Sample<double>>& samples,
                            std::uint64_t seed) {
  EvalReport rep;
  for (const auto& s : samples) {
    SampleEval e;
    e.y = s.label;
    e.kind = s.kind;
    e.f = forward(w, s);
    e.correct = e.y * e.f > 0.0;
    e.parts = decompose(w, s);
    e.seed = seed;
    rep.per_sample.push_back(e);
    ++rep.n_test;
    if (s.is_weak()) ++rep.n_weak_test;
    if (e.correct) {
      ++rep.n_correct;
      if (s.is_weak()) ++rep.n_correct_weak;
    }
  }
  const auto ratio = [](int num, int den) {
    return den > 0 ? static_cast<double>(num) / den : std::numeric_limits<double>::quiet_NaN();
  };
  rep.accuracy_overall = ratio(rep.n_correct, rep.n_test);
  rep.accuracy_strong = ratio(rep.n_correct - rep.n_correct_weak, rep.n_test - rep.n_weak_test);
  rep.accuracy_weak = ratio(rep.n_correct_weak, rep.n_weak_test);
  return rep;
}

EvalReport evaluate(const Weights<double>& w, const SignalBasis<double>& basis,
                    const TestConfig& config) {
  std::vector<Sample<double>> pooled;
  std::vector<std::uint64_t> origin;
  for (std::uint64_t seed : config.seeds) {
    auto ds = sample_dataset(basis, config.n_test, config.weak_mode, config.label_mode, seed, "test");
    for (auto& s : ds.samples) {
      pooled.push_back(std::move(s));
      origin.push_back(seed);
    }
  }
  EvalReport rep = evaluate_samples(w, pooled);
  for (std::size_t k = 0; k < rep.per_sample.size(); ++k) rep.per_sample[k].seed = origin[k];
  return rep;
}

}  // namespace benign
