// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace qcl {

/// Counter-based deterministic random generator (SplitMix64 output function).
///
/// The generator is a pure function of (key, counter):
///
///   output(key, i) = mix64(key + i * 0x9E3779B97F4A7C15)   for i = 1, 2, ...
///
/// where mix64 is the SplitMix64 finalizer
///
///   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
///   z ^= z >> 27;  z *= 0x94D049BB133111EB;
///   z ^= z >> 31;
///
/// Streams are split by deriving a child key:
///
///   child_key(key, s) = mix64(mix64(key ^ 0xA3EC647659359ACD) ^ mix64(s + 1))
///
/// Every quantity consumed downstream (doubles, bounded ints, permutations,
/// normals) is defined purely in terms of the uint64 output sequence, with the
/// mappings below, so any implementation of this contract in any language
/// reproduces the byte-identical stream:
///
///  - uniform():           (output >> 11) * 2^-53, in [0, 1)
///  - uniform(a, b):       a + (b - a) * uniform()
///  - bounded(n):          Lemire multiply-shift with rejection (see code);
///                         consumes one output per attempt
///  - normal():            Box-Muller, r = sqrt(-2 ln(1 - u1)),
///                         value = r * cos(2 pi u2); consumes two outputs
///  - permutation(n):      Fisher-Yates, swaps index i with bounded(i + 1)
///                         for i = n-1 .. 1
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(seed) {}

  Rng fork(std::uint64_t stream) const {
    return Rng(mix64(mix64(key_ ^ 0xA3EC647659359ACDull) ^ mix64(stream + 1)), 0);
  }

  std::uint64_t next_u64() {
    counter_ += 1;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Unbiased integer in [0, n).
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be positive");
    const std::uint64_t threshold = (-n) % n;
    for (;;) {
      const std::uint64_t x = next_u64();
      const __uint128_t m = static_cast<__uint128_t>(x) * n;
      if (static_cast<std::uint64_t>(m) >= threshold)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Eigen::VectorXd uniform_vector(Eigen::Index n, double a, double b) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(a, b);
    return v;
  }

  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(bounded(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[i], p[j]);
    }
    return p;
  }

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Fixed stream tags for the experiment pipeline. Task-local streams fork
// twice: root.fork(tag).fork(task_index).
namespace streams {
inline constexpr std::uint64_t kModelInit = 1;
inline constexpr std::uint64_t kTaskData = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kProbe = 4;
inline constexpr std::uint64_t kTheory = 5;
inline constexpr std::uint64_t kEvalSubsample = 6;
}  // namespace streams

}  // namespace qcl
