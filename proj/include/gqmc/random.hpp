#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gqmc {

// SplitMix64 finalizer; used to derive independent child seeds from a base
// seed and a tuple of counters (command tag, strength index, trial, ...).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters) {
  std::uint64_t s = mix64(base);
  for (std::uint64_t c : counters) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
  return s;
}

/// Explicitly seeded random stream. Not shareable between threads; parallel
/// callers derive one stream per task with derive_seed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace gqmc
