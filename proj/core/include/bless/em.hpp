#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bless/types.hpp"

namespace bless {

struct EmConfig {
  int max_iters = 2000;
  /// Stop when |l_t - l_{t-1}| / (|l_{t-1}| + 1) < tol.
  double tol = 1e-8;
  int restarts = 10;
  std::uint64_t seed = 0;
  /// Unknown-G fitting: feed the soft posterior E[z] into the parent scores
  /// instead of sampled latent patterns.
  bool soft_gamma = false;
  /// Unknown-G fitting: restart 0 starts from items clustered by pairwise
  /// mutual information rather than from random parents.
  bool cluster_start = true;
  /// Unknown-G fitting: after the graph iterations settle, try moving one
  /// item to another parent or swapping the parents of two items, refit with
  /// G fixed, and keep the best likelihood gain until none remains.
  bool refine_graph = true;
  /// Restarts run on this many threads (each restart owns its state).
  int threads = 1;
};

/// Rows are subjects (or distinct response rows), columns latent patterns.
using PosteriorMatrix = Matrix;

struct MStepUpdate {
  std::vector<ItemCpt> items;
  Vector nu;
  /// Some item had (numerically) no posterior mass on one parent state.
  bool zero_denominator = false;
};

struct EmResult {
  BlessModel model;
  double loglik = 0.0;
  std::vector<double> loglik_trace;
  bool converged = false;
  bool g_estimated = false;
  /// Unknown-G fitting: an argmax over parent scores was tied.
  bool gamma_tie = false;
  bool zero_denominator = false;
  int iterations = 0;
  int best_restart = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  /// Unknown-G fitting: parent scores (p x K) from the last iteration.
  Matrix gamma;
  /// Largest |row sum - 1| over all parent-score rows computed.
  double gamma_row_error = 0.0;
  /// Unknown-G fitting: graph changes accepted by the refinement pass.
  int refine_moves = 0;
};

PosteriorMatrix e_step(const BlessModel& model, const Dataset& data);
PosteriorMatrix e_step(const BlessModel& model, const ResponseTable& table);

/// Closed-form updates of the complete-data likelihood given posteriors.
MStepUpdate m_step(const PosteriorMatrix& posterior, const Dataset& data,
                   const GraphicalMatrix& g);
MStepUpdate m_step(const PosteriorMatrix& posterior, const ResponseTable& table,
                   const GraphicalMatrix& g);

/// Sum over subjects of log sum_alpha nu_alpha prod_j theta, in log domain.
double log_likelihood(const BlessModel& model, const Dataset& data);
double log_likelihood(const BlessModel& model, const ResponseTable& table);

/// Multi-start EM with G held fixed. The returned model is oriented so that
/// each latent satisfies theta1 > theta0 at category 1 for most children.
EmResult fit_known_g(const Dataset& data, const GraphicalMatrix& g, int d,
                     const EmConfig& config);

/// Multi-start approximate EM that also estimates G by per-item argmax of
/// the parent scores.
EmResult fit_unknown_g(const Dataset& data, int k, int d,
                       const EmConfig& config);

/// Parent assignment from average-linkage clustering of items on their
/// pairwise empirical mutual information, merged down to `k` clusters.
/// Clusters are numbered by their smallest item.
std::vector<int> association_clusters(const ResponseTable& table, int k);

/// Single EM run from a given start (G fixed). Exposed for tests.
EmResult run_em_from(const ResponseTable& table, BlessModel start,
                     const EmConfig& config);

/// Orientation fix: flips latents whose children mostly have
/// theta1_1 < theta0_1.
BlessModel canonicalize_orientation(const BlessModel& model);

struct Alignment {
  BlessModel aligned;
  /// Estimated latent e corresponds to truth latent permutation[e].
  std::vector<int> permutation;
  /// Latents (in truth labelling) whose 0/1 labels were swapped.
  std::vector<bool> flipped;
  double distance = 0.0;
};

/// Exhaustive search over latent permutations (and 0/1 relabelings that keep
/// theta1 > theta0 valid). Distance is the squared parameter distance plus
/// the number of mismatched G entries. Requires K <= 8.
Alignment align_to_truth(const BlessModel& estimate, const BlessModel& truth);

/// Mean squared difference over all continuous parameters (theta and nu).
double parameter_mse(const BlessModel& a, const BlessModel& b);

}  // namespace bless
