#pragma once

// Seeded random source with a bit-stable stream across platforms.
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded by SplitMix64.
// Uniform doubles take the top 53 bits. Normals use the Marsaglia polar
// method; the spare variate is part of the state so save/restore is exact.
// Nothing here touches <random> distributions, whose output is
// implementation-defined.

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "ibw/tensor.hpp"

namespace ibw {

class Rng {
 public:
  struct State {
    std::array<std::uint64_t, 4> words{};
    bool has_spare = false;
    double spare = 0.0;
    friend bool operator==(const State&, const State&) = default;
  };

  explicit Rng(std::uint64_t seed);

  // Independent stream for (seed, stream): does not depend on any other
  // generator's position, so parallel tasks can derive their own.
  static Rng derived(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform();                            // [0, 1)
  double uniform_open();                       // (0, 1)
  double normal();                             // N(0, 1)
  std::uint64_t uniform_index(std::uint64_t n);  // [0, n), unbiased

  State state() const { return {words_, has_spare_, spare_}; }
  static Rng from_state(const State& s);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  Rng() = default;
  std::array<std::uint64_t, 4> words_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& x);

Tensor sample_standard_normal(Rng& rng, Tensor::Shape shape);

}  // namespace ibw
