#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "bless/types.hpp"

namespace bless {

/// Seeded generator with a fully specified output stream: std::mt19937_64
/// seeded through SplitMix64, and variate transforms written here instead of
/// the implementation-defined <random> distributions.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/splitmix64";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on {0, ..., n-1}.
  std::uint64_t below(std::uint64_t n);
  /// Flat Dirichlet(1, ..., 1) draw of length n.
  Vector dirichlet_flat(int n);
  /// Index drawn from unnormalized nonnegative weights.
  int categorical(std::span<const double> weights);
  int categorical(const Vector& probs);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent child seed for stream `index` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace bless
