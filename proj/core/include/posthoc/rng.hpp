#pragma once

#include <cstdint>
#include <vector>

namespace posthoc {

// Deterministic random source with a fixed cross-platform bit stream
// (splitmix64). All sampling helpers consume the stream in a documented
// order, so a given seed reproduces byte-identical results everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53 mantissa bits.
  double next_unit();

  double uniform(double lo, double hi);

  // Uniform integer in [lo, hi], inclusive. Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Standard normal via Box-Muller; the spare deviate is cached, so draws
  // come in deterministic pairs.
  double normal(double mean = 0.0, double stddev = 1.0);

  // Poisson draw by Knuth's product-of-uniforms method. Intended for small
  // means (false-positive counts), cost is O(result).
  int poisson(double mean);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(0, static_cast<std::int64_t>(i)));
      std::swap(items[i], items[j]);
    }
  }

  // Identity permutation of size n, shuffled.
  std::vector<std::size_t> permutation(std::size_t n);

  // k distinct indices from [0, n), returned in ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  std::uint64_t state_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace posthoc
