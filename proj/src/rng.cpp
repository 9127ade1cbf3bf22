#include "cldrd/rng.hpp"

#include <cmath>
#include <numbers>

#include "cldrd/featurizer.hpp"

namespace cldrd {

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = n;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view a, std::string_view b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a64(a));
  // A separator keeps ("ab", "") and ("a", "b") apart.
  h = splitmix64(h ^ (a.size() * 0x100000001b3ULL));
  return splitmix64(h ^ fnv1a64(b));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(splitmix64(seed) ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

}  // namespace cldrd
