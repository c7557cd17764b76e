#pragma once

#include <string>
#include <vector>

#include "bless/types.hpp"

namespace bless {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double regularized_gamma_q(double a, double x);

/// Upper tail P(X > x) of a chi-square with `df` degrees of freedom.
/// Throws std::domain_error for x < 0 or df < 1.
double chi2_survival(double x, double df);

struct TestReport {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::vector<int> group_a;  // 0-based item indices
  std::vector<int> group_b;
  double level = 0.05;  // per-test level actually applied
  bool reject = false;
  /// Set when more than 20% of cells have expected count below 5.
  std::string warning;
};

/// Largest number of joint categories allowed for one group.
inline constexpr std::size_t kMaxGroupCategories = 4096;

/// Pearson chi-square test of independence between the concatenated
/// categorical variables of two disjoint item groups.
TestReport chi2_independence_test(const Dataset& data,
                                  const std::vector<int>& group_a,
                                  const std::vector<int>& group_b,
                                  double alpha = 0.05);

struct MannWhitneyResult {
  double u = 0.0;   // U statistic of the first sample
  double p_value = 1.0;
  bool exact = false;
};

/// One-sided test of H1: the first sample tends to be smaller than the
/// second. Exact null distribution (no ties assumed) when n1 * n2 <= 10000,
/// otherwise normal approximation with continuity correction.
MannWhitneyResult mann_whitney_less(const std::vector<double>& first,
                                    const std::vector<double>& second);

}  // namespace bless
