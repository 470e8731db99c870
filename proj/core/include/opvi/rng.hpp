#pragma once

#include <cstdint>
#include <limits>

namespace opvi {

/// Roles separate independent random streams that share a seed and round.
enum class RngRole : std::uint64_t {
  init = 1,
  stream = 2,
  sgld = 3,
  data = 4,
  grid = 5,
  split = 6,
  fpc = 7,
  test = 8,
};

/// Counter-based generator: the n-th output is a pure function of (key, n).
/// Satisfies UniformRandomBitGenerator so it plugs into <random> distributions.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit CounterEngine(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + kGolden * ++counter_); }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  /// SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// A seed plus a way to derive independent engines for any (role, round, index)
/// context. Draws depend only on the context, never on call order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  [[nodiscard]] CounterEngine engine(RngRole role, std::uint64_t round,
                                     std::uint64_t index = 0) const {
    std::uint64_t k = CounterEngine::mix(seed_ ^ 0xd1b54a32d192ed03ULL);
    k = CounterEngine::mix(k ^ (static_cast<std::uint64_t>(role) * 0x8cb92ba72f3d8dd7ULL));
    k = CounterEngine::mix(k ^ (round * 0xaef17502108ef2d9ULL + 1));
    k = CounterEngine::mix(k ^ (index * 0xf58e7a1c3b2d4e69ULL + 2));
    return CounterEngine(k);
  }

 private:
  std::uint64_t seed_;
};

}  // namespace opvi
