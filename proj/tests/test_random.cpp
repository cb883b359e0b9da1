#include "decodekit/random.hpp"

#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

using namespace decodekit;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using W = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        W{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        W{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("draws are addressable by index and keyed by label") {
  const CounterRng a(derive_key(7, {"model", "m1"}));
  const CounterRng b(derive_key(7, {"model", "m2"}));
  CHECK(a.bits(3) == CounterRng(derive_key(7, {"model", "m1"})).bits(3));
  CHECK(a.bits(3) != b.bits(3));
  CHECK(derive_key(7, {"ab", "c"}).value != derive_key(7, {"a", "bc"}).value);
  CHECK(derive_key(7, {"x"}).value != derive_key(8, {"x"}).value);
  CHECK(CounterRng(RngKey{1}, 0).bits(0) != CounterRng(RngKey{1}, 1).bits(0));
}

TEST_CASE("uniform and normal moments") {
  const CounterRng rng(derive_key(11, {"moments"}));
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i));
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal(static_cast<std::uint64_t>(i));
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("bounded integers cover the range evenly") {
  CounterStream s(derive_key(3, {"below"}));
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = s.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CounterStream one(derive_key(3, {"one"}));
  CHECK(one.below(1) == 0);
}
