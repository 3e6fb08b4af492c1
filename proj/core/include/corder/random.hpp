#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace corder {

std::uint64_t splitmix64(std::uint64_t x);
/// Derives an independent stream seed from a base seed and a stream key.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
/// FNV-1a, stable across platforms; used to key per-query streams.
std::uint64_t fingerprint(std::string_view bytes);

/// mt19937_64 with platform-independent derived draws (std distributions are
/// not specified bit-for-bit, so they are avoided here).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n); n > 0.
  std::size_t below(std::size_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace corder
