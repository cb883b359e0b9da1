#pragma once

// Counter-based random numbers (Philox4x32-10).
//
// Every draw is a pure function of (key, stream, index), so entities keyed by
// their own identity never perturb each other's values, and results do not
// depend on evaluation order or worker count.

#include <array>
#include <cstdint>
#include <string_view>

namespace decodekit {

struct RngKey {
  std::uint64_t value = 0;
};

/// 64-bit FNV-1a followed by a splitmix64 finalizer.
std::uint64_t hash_label(std::string_view label, std::uint64_t basis = 0) noexcept;

/// Derives a key from a seed and an ordered list of labels, e.g.
/// derive_key(seed, {"folds", subject_id, model_id}).
RngKey derive_key(std::uint64_t seed, std::initializer_list<std::string_view> labels) noexcept;

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Random-access generator: the value at `index` never depends on other draws.
class CounterRng {
 public:
  explicit CounterRng(RngKey key, std::uint64_t stream = 0) noexcept : key_(key), stream_(stream) {}

  std::array<std::uint32_t, 4> block(std::uint64_t index) const noexcept;
  std::uint64_t bits(std::uint64_t index) const noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t index) const noexcept;
  /// Standard normal via Box-Muller on one Philox block.
  double normal(std::uint64_t index) const noexcept;

 private:
  RngKey key_;
  std::uint64_t stream_;
};

/// Sequential view over a CounterRng, for algorithms that consume a variable
/// number of draws (shuffles, rejection sampling).
class CounterStream {
 public:
  explicit CounterStream(RngKey key, std::uint64_t stream = 0) noexcept : rng_(key, stream) {}

  std::uint64_t next_bits() noexcept { return rng_.bits(next_++); }
  /// Unbiased integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace decodekit
