#pragma once

#include <cstdint>
#include <string_view>

namespace benign {

/// Counter-based deterministic random stream.
///
/// Every draw is a pure function of (key, counter): the key is derived from
/// an experiment seed and a purpose tag, so independent streams (dataset,
/// initialization, test sets) never share state and adding a new stream never
/// perturbs an existing one. Normal variates use Box-Muller on top of the
/// integer stream so results are identical across standard libraries.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Stream keyed on (seed, tag). `index` separates repeated streams of the
  /// same purpose (e.g. the k-th test set).
  static CounterRng derive(std::uint64_t seed, std::string_view tag,
                           std::uint64_t index = 0);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound), unbiased (rejection sampling). bound > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  double normal(double mean = 0.0, double stddev = 1.0);

  bool coin() { return (next_u64() >> 63) != 0; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace benign
