#include "decodekit/random.hpp"

#include <cmath>
#include <numbers>

namespace decodekit {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t hash_label(std::string_view label, std::uint64_t basis) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull ^ basis;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(h ^ label.size());
}

RngKey derive_key(std::uint64_t seed, std::initializer_list<std::string_view> labels) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (auto label : labels) h = splitmix64(h ^ hash_label(label, h));
  return RngKey{h};
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<std::uint32_t, 4> CounterRng::block(std::uint64_t index) const noexcept {
  return philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                    {static_cast<std::uint32_t>(key_.value), static_cast<std::uint32_t>(key_.value >> 32)});
}

std::uint64_t CounterRng::bits(std::uint64_t index) const noexcept {
  const auto b = block(index);
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

namespace {
double open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}
}  // namespace

double CounterRng::uniform(std::uint64_t index) const noexcept { return open_unit(bits(index)); }

double CounterRng::normal(std::uint64_t index) const noexcept {
  const auto b = block(index);
  const double u1 = open_unit((static_cast<std::uint64_t>(b[1]) << 32) | b[0]);
  const double u2 = open_unit((static_cast<std::uint64_t>(b[3]) << 32) | b[2]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

__extension__ using u128 = unsigned __int128;

std::uint64_t CounterStream::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  u128 m = static_cast<u128>(next_bits()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(next_bits()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace decodekit
