#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "benign/experiment.hpp"

namespace benign::testing {

/// Default-config run, cached across test cases.
inline const RunOutcome& default_run(double eta, std::uint64_t seed) {
  static std::map<std::pair<double, std::uint64_t>, RunOutcome> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find({eta, seed});
  if (it == cache.end()) it = cache.emplace(std::pair{eta, seed}, run_one(ExperimentConfig{}, eta, seed)).first;
  return it->second;
}

inline TraceRecord record(long t, double y_f, int label = 1, SampleKind kind = SampleKind::Strong) {
  TraceRecord r;
  r.t = t;
  r.y_f = y_f;
  r.label = label;
  r.kind = kind;
  return r;
}

}  // namespace benign::testing
