#pragma once

#include <cstdint>
#include <vector>

namespace plgnn {

// xoshiro256++ seeded through splitmix64. Self-contained so identical seeds
// give identical streams on every platform, which std::mt19937 +
// std::uniform_*_distribution do not guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // [0, 1), 53-bit resolution
  double uniform();
  double uniform(double lo, double hi);

  // standard normal, Box-Muller (second draw cached)
  double normal();

  // [0, bound), unbiased via rejection
  std::uint64_t uniform_int(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace plgnn
