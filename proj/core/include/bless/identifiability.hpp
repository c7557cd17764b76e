#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bless/chi2.hpp"
#include "bless/types.hpp"

namespace bless {

enum class LatentVerdict { kNonIdentifiable, kGenericBoundary, kStrict };
enum class GraphVerdict { kNonIdentifiable, kGeneric, kStrict };

std::string_view to_string(LatentVerdict verdict);
std::string_view to_string(GraphVerdict verdict);

struct GraphClassification {
  std::vector<int> child_counts;
  std::vector<LatentVerdict> verdicts;
  GraphVerdict overall = GraphVerdict::kNonIdentifiable;

  bool generic() const { return overall != GraphVerdict::kNonIdentifiable; }
};

/// Child-count thresholds: < 2 non-identifiable, exactly 2 identifiable only
/// generically, >= 3 strictly identifiable. Throws std::invalid_argument for
/// a G that is not a star forest.
GraphClassification classify_graph(const GraphicalMatrix& g);

/// 2^{K-1} x 2 matrix with rows (nu_{alpha'}, nu_{alpha' + e_k}) over alpha'
/// with alpha'_k = 0, in big-endian order of the other latents.
Matrix pk_matrix(const Vector& nu, int k);

inline constexpr double kIndependenceTolerance = 1e-8;
/// Looser threshold for proportions estimated from data.
inline constexpr double kEstimatedIndependenceTolerance = 1e-2;

struct IndependenceCheck {
  bool independent = false;
  /// sigma_2 / sigma_1 of the P^(k) matrix.
  double measure = 0.0;
  /// P(alpha_k = 1) / P(alpha_k = 0).
  double rho = 0.0;
};

IndependenceCheck latent_independence_check(
    const Vector& nu, int k, double tol = kIndependenceTolerance);

/// nu_00 nu_11 - nu_01 nu_10 for K = 2.
double k2_dependence_determinant(const Vector& nu);

enum class ConstructionTag { kProp1, kThm2b };

struct AlternativeMember {
  BlessModel model;
  double pmf_deviation = 0.0;
  /// Shift applied to the driving parameter.
  double perturbation = 0.0;
  /// Largest absolute parameter change relative to the source.
  double parameter_change = 0.0;
};

struct AlternativeFamily {
  ConstructionTag tag = ConstructionTag::kProp1;
  int target = 0;  // item (prop1) or latent (thm2b), 0-based
  std::vector<AlternativeMember> members;
  std::vector<std::string> skipped;
  double max_pmf_deviation = 0.0;
  /// thm2b: largest gap between the closed-form theta-bar and the completion.
  double closed_form_gap = 0.0;
};

/// `count` shifts with magnitudes spread evenly over (radius/2, radius],
/// alternating sign.
std::vector<double> perturbation_grid(int count, double radius);

/// Alternative parameters for an item whose parent has no other child:
/// theta1 of category 1 moves to `theta11_new` and nu compensates. Returns
/// the model even if it leaves the simplex; callers validate.
BlessModel prop1_alternative(const BlessModel& model, int j, double theta11_new);

/// Throws PreconditionError unless item j is its parent's only child.
AlternativeFamily construct_prop1_alternatives(const BlessModel& model, int j,
                                               int count, double radius);

/// Two-parameter alternative for latent k with exactly two children j < j',
/// valid when alpha_k is independent of the other latents. `shift0` moves
/// theta0^{(j)} along (theta1 - theta0) so that category 1 changes by
/// shift0; `shift1` moves theta1^{(j)} likewise by -shift1. Returns the
/// model and, through `closed_form_gap`, the discrepancy between the direct
/// per-category formula for theta-bar^{(j')}_{.|1} and the completion.
BlessModel thm2b_alternative(const BlessModel& model, int k, double shift0,
                             double shift1, double* closed_form_gap = nullptr);

/// Throws PreconditionError unless latent k has exactly two children and is
/// independent of the other latents (tolerance `tol`).
AlternativeFamily construct_thm2b_alternatives(
    const BlessModel& model, int k, int count, double radius,
    std::uint64_t seed = 0, double tol = kIndependenceTolerance);

enum class TestStrategy { kFullComplement, kPairwiseSubsets };

std::string_view to_string(TestStrategy strategy);
TestStrategy parse_strategy(std::string_view name);

struct IdentifiabilityTestResult {
  std::vector<int> latents;  // latents tested, 0-based
  std::vector<TestReport> tests;
  std::vector<int> test_latent;  // latent of each test
  double alpha = 0.05;
  double per_test_level = 0.05;
  bool bonferroni = false;
  /// Some test rejected independence.
  bool evidence = false;
  std::vector<bool> latent_evidence;
  std::string note;
};

/// Tests Child(alpha_k) against children of the other latents.
IdentifiabilityTestResult identifiability_test(const Dataset& data,
                                               const GraphicalMatrix& g, int k,
                                               TestStrategy strategy,
                                               double alpha, bool bonferroni);

/// Runs the per-latent test for every latent with exactly two children and
/// pools all tests (Bonferroni over the pooled count when requested).
IdentifiabilityTestResult identifiability_test_all(const Dataset& data,
                                                   const GraphicalMatrix& g,
                                                   TestStrategy strategy,
                                                   double alpha,
                                                   bool bonferroni);

struct RankGroup {
  std::vector<int> items;
  double singular_ratio = 0.0;  // sigma_2 / sigma_1
  int rank = 0;
};

struct KruskalReport {
  int latent = 0;
  std::vector<RankGroup> groups;
  bool full_rank = false;
};

/// Splits the children of latent k into three groups (round robin) and
/// reports the numerical column rank of each group's Khatri-Rao factor
/// (theta0 | theta1). Throws PreconditionError for fewer than 3 children.
KruskalReport kruskal_rank_check(const BlessModel& model, int k);

}  // namespace bless
