#pragma once

// Counter-based random numbers. A Philox4x32-10 generator is a pure function
// of (key, counter), so independent trials get independent streams by key and
// results do not depend on how work is scheduled across threads.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace sparsefilter {

class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  // Uniform double in (0, 1].
  double uniform_open_below();
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  // Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a list of 64-bit words into one seed (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

}  // namespace sparsefilter
