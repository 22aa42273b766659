#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace nfce {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to turn (seed, counter) pairs into engine seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream keyed by (seed, tag, index). Streams for different
/// indices never share state, so per-sample work can run in any order.
inline Rng make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(tag + 0x632be59bd9b4e019ULL));
  s = mix64(s ^ mix64(index + 0x8cb92ba72f3d8dd7ULL));
  return Rng{s};
}

// Stream tags. Values are part of the reproducibility contract.
namespace stream {
inline constexpr std::uint64_t kPaths = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kEvalNoise = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kShuffle = 5;
inline constexpr std::uint64_t kCovariance = 6;
}  // namespace stream

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline std::complex<double> complex_normal(Rng& rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = n(rng);
  const double im = n(rng);
  return {s * re, s * im};
}

}  // namespace nfce
