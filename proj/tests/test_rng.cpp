#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ibw/rng.hpp"

using namespace ibw;

TEST_CASE("same seed gives identical normals") {
  Rng a(42), b(42);
  CHECK(sample_standard_normal(a, {100}) == sample_standard_normal(b, {100}));
}

TEST_CASE("different seeds give different normals") {
  Rng a(1), b(2);
  CHECK_FALSE(sample_standard_normal(a, {100}) == sample_standard_normal(b, {100}));
}

TEST_CASE("normal moments over 1e6 samples") {
  Rng rng(2024);
  const Tensor t = sample_standard_normal(rng, {1000000});
  double mean = 0.0;
  for (double v : t.data()) mean += v;
  mean /= static_cast<double>(t.size());
  double var = 0.0;
  for (double v : t.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(t.size() - 1);
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.01);
}

TEST_CASE("state restore continues the stream exactly") {
  Rng rng(99);
  for (int i = 0; i < 7; ++i) rng.normal();  // leaves a spare behind
  const auto saved = rng.state();
  std::vector<double> first;
  for (int i = 0; i < 20; ++i) first.push_back(i % 3 ? rng.normal() : rng.uniform());
  Rng restored = Rng::from_state(saved);
  for (int i = 0; i < 20; ++i) CHECK(first[static_cast<std::size_t>(i)] == (i % 3 ? restored.normal() : restored.uniform()));
}

TEST_CASE("known xoshiro256** output for seed 0") {
  // SplitMix64 expansion of 0 followed by xoshiro256**; pinned so any change
  // to the generator shows up here.
  Rng rng(0);
  CHECK(rng.state().words == std::array<std::uint64_t, 4>{0xe220a8397b1dcdafULL, 0x6e789e6aa1b965f4ULL,
                                                          0x06c45d188009454fULL, 0xf88bb8a8724c81ecULL});
  CHECK(rng.next_u64() == 0x99ec5f36cb75f2b4ULL);
  CHECK(rng.next_u64() == 0xbf6e1f784956452aULL);
  CHECK(rng.next_u64() == 0x1a5f849d4933e6e0ULL);
}

TEST_CASE("uniform_index is in range and roughly uniform") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("derived streams do not depend on order") {
  Rng a = Rng::derived(7, 1);
  Rng b = Rng::derived(7, 2);
  const double a0 = a.uniform();
  Rng b2 = Rng::derived(7, 2);
  CHECK(b.uniform() == b2.uniform());
  CHECK(Rng::derived(7, 1).uniform() == a0);
  CHECK(Rng::derived(7, 1).uniform() != Rng::derived(7, 2).uniform());
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(8);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}
