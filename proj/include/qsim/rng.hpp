#pragma once

#include <complex>
#include <cstdint>

namespace qsim {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Key of the independent substream `index` derived from `seed`.
//   substream_key(s, i) = mix64(mix64(s) ^ (i * 0xD1B54A32D192ED03 + 0x8CB92BA72F3D8DD7))
std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index) noexcept;

/// Counter-based generator. The n-th output (n = 1, 2, ...) is
/// mix64(key + n * 0x9E3779B97F4A7C15), which is exactly the SplitMix64
/// sequence started from state `key`. Any output can be recomputed from
/// (key, n) alone, so substreams are reproducible across languages.
///
/// Derived variates are defined here rather than through <random>
/// distributions, whose algorithms vary between standard libraries:
///   uniform()  = (next_u64() >> 11) * 2^-53                 in [0, 1)
///   normal()   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)          one per two uniforms
///   complex_normal() = (normal() + i normal()) / sqrt(2)     E|z|^2 = 1
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  double normal() noexcept;
  std::complex<double> complex_normal() noexcept;

  CounterRng substream(std::uint64_t index) const noexcept {
    return CounterRng(substream_key(key_, index));
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace qsim
