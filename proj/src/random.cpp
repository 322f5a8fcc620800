#include "benign/random.hpp"

#include <cmath>
#include <numbers>

namespace benign {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

// FNV-1a; only used to fold the purpose tag into the key.
std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

CounterRng CounterRng::derive(std::uint64_t seed, std::string_view tag,
                              std::uint64_t index) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ hash_tag(tag));
  k = splitmix64(k ^ (index * 0xd1342543de82ef95ULL));
  return CounterRng(k);
}

std::uint64_t CounterRng::next_u64() {
  // Two rounds of mixing over (key, counter) decorrelate nearby keys.
  const std::uint64_t c = counter_++;
  return splitmix64(splitmix64(key_ + c * 0x9e3779b97f4a7c15ULL) ^ key_);
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::uniform_index(std::uint64_t bound) {
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double CounterRng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return mean + stddev * radius * std::cos(angle);
}

}  // namespace benign
