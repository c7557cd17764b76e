#pragma once

#include <string>
#include <vector>

#include "bless/types.hpp"

namespace bless {

inline constexpr double kSimplexTolerance = 1e-12;
inline constexpr double kMonotonicityMargin = 1e-9;
/// Exact pmf enumeration is limited to d^p <= 2^24 cells.
inline constexpr double kEnumerationLog2Budget = 24.0;

using ValidationReport = std::vector<std::string>;

/// Lists every violated invariant; an empty report means the model is valid.
ValidationReport validate_model(const BlessModel& model);

/// True when theta1_c > theta0_c + margin for all c < d.
bool satisfies_monotonicity(const ItemCpt& item,
                            double margin = kMonotonicityMargin);

/// d x 2^K conditional table of item j (0-based) over all latent patterns.
Matrix phi_table(const BlessModel& model, int j);

/// Throws SizeGuardError when d^p exceeds the enumeration budget.
void check_enumeration_guard(int items, int categories);

/// P(y = c) for every response pattern c (c_1 most significant), computed by
/// direct summation over latent patterns.
Vector response_pmf_direct(const BlessModel& model);

/// The same pmf as (kr_j Phi_j) nu.
Vector response_pmf_kr(const BlessModel& model);

/// (kr_{j in S} Phi_j) nu for 0-based distinct item indices, in the given
/// order (first listed item most significant).
Vector marginal_pmf(const BlessModel& model, const std::vector<int>& subset);

/// Relabels latent k as 0 <-> 1: swaps theta0/theta1 of its children and
/// permutes nu accordingly. The response pmf is unchanged.
BlessModel flip_latent_labels(const BlessModel& model, int k);

/// Estimated latent e becomes latent to[e]; items keep their parameters.
BlessModel permute_latents(const BlessModel& model, const std::vector<int>& to);

/// Max-abs elementwise difference of two response pmfs.
double pmf_deviation(const BlessModel& a, const BlessModel& b);

}  // namespace bless
