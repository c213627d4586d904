#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace krabc {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable 64-bit hash of a sequence of integers. Used to derive independent
// per-(iteration, particle) streams from a master seed.
inline constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

inline constexpr std::uint64_t tag(std::string_view s) {
  // FNV-1a; stream labels such as "herd" or "observed".
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

// log of a Gamma(shape, 1) draw. Shapes far below one underflow when sampled
// directly, so use G(a) = G(a + 1) * U^(1/a) in log space.
inline double log_gamma_variate(double shape, Rng& rng) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  return std::log(g) + std::log(u) / shape;
}

}  // namespace krabc
