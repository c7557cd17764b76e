#pragma once

#include <cstdint>
#include <vector>

#include "bless/random.hpp"
#include "bless/types.hpp"

namespace bless {

struct SimConfig {
  int p = 4;
  int k = 2;
  int d = 3;
  std::uint64_t seed = 0;
  /// Minimal margin theta1_c - theta0_c on every non-baseline category.
  double theta_gap_min = 0.1;
  /// Minimal latent pattern proportion.
  double nu_floor = 0.01;
};

/// Random conditional table pair satisfying theta1_c >= theta0_c + gap_min
/// for c < d, built without rejection.
ItemCpt random_item(int d, double gap_min, Rng& rng);

/// Throws std::invalid_argument when the config cannot be satisfied or `g`
/// disagrees with (p, K).
BlessModel random_model(const SimConfig& config, const GraphicalMatrix& g);

/// nu built as P(alpha_k) x P(alpha_{-k}) so that alpha_k (0-based) is
/// exactly independent of the remaining latents.
BlessModel random_model_on_independence_surface(const SimConfig& config,
                                                const GraphicalMatrix& g,
                                                int k);

struct SampledData {
  Dataset data;
  std::vector<int> patterns;  // true latent pattern index per subject
};

SampledData sample_dataset(const BlessModel& model, int n, std::uint64_t seed);

}  // namespace bless
