#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace cldrd {

/// Seeded generator whose derived draws are identical on every platform.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so uniform/normal draws are derived here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Derives a child seed from a parent seed and up to two string keys.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view a, std::string_view b = {});

/// Derives a child seed from a parent seed and an integer key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);

}  // namespace cldrd
