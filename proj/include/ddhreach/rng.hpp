#pragma once

#include <cstdint>
#include <string_view>

namespace ddhreach {

/// xoshiro256** seeded through splitmix64. The generator and every derived
/// distribution below are pinned so a seed yields the same stream on any
/// platform (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Named, indexed sub-stream, e.g. Rng::stream(seed, "explore", k, j).
  static Rng stream(std::uint64_t seed, std::string_view name,
                    std::uint64_t a = 0, std::uint64_t b = 0);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace ddhreach
