#include "bless/chi2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace bless {
namespace {

constexpr int kMaxIterations = 100000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

// e^{-x} x^a / Gamma(a)
double gamma_prefactor(double a, double x) {
  return std::exp(a * std::log(x) - x - std::lgamma(a));
}

double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEpsilon) break;
  }
  return sum * gamma_prefactor(a, x);
}

// Modified Lentz evaluation of the continued fraction for Gamma(a, x).
double upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return h * gamma_prefactor(a, x);
}

std::size_t joint_categories(std::size_t groups, int d) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < groups; ++i) {
    n *= static_cast<std::size_t>(d);
    if (n > kMaxGroupCategories) {
      throw std::invalid_argument("group has more than 4096 joint categories");
    }
  }
  return n;
}

std::size_t encode(const Dataset& data, int i, const std::vector<int>& group) {
  std::size_t code = 0;
  for (int j : group) {
    code = code * static_cast<std::size_t>(data.categories()) +
           static_cast<std::size_t>(data(i, j));
  }
  return code;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw std::domain_error("regularized_gamma_q needs a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - lower_series(a, x);
  return upper_fraction(a, x);
}

double chi2_survival(double x, double df) {
  if (!(df >= 1.0)) throw std::domain_error("chi2_survival needs df >= 1");
  if (!(x >= 0.0)) throw std::domain_error("chi2_survival needs x >= 0");
  return std::clamp(regularized_gamma_q(0.5 * df, 0.5 * x), 0.0, 1.0);
}

TestReport chi2_independence_test(const Dataset& data,
                                  const std::vector<int>& group_a,
                                  const std::vector<int>& group_b,
                                  double alpha) {
  if (group_a.empty() || group_b.empty()) {
    throw std::invalid_argument("test groups must be nonempty");
  }
  std::set<int> seen;
  for (const auto* group : {&group_a, &group_b}) {
    for (int j : *group) {
      if (j < 0 || j >= data.items()) {
        throw std::out_of_range("item index out of range");
      }
      if (!seen.insert(j).second) {
        throw std::invalid_argument("test groups overlap or repeat an item");
      }
    }
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  const std::size_t rows = joint_categories(group_a.size(), data.categories());
  const std::size_t cols = joint_categories(group_b.size(), data.categories());

  std::vector<double> observed(rows * cols, 0.0);
  for (int i = 0; i < data.subjects(); ++i) {
    observed[encode(data, i, group_a) * cols + encode(data, i, group_b)] += 1.0;
  }
  std::vector<double> row_sum(rows, 0.0);
  std::vector<double> col_sum(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      row_sum[r] += observed[r * cols + c];
      col_sum[c] += observed[r * cols + c];
    }
  }
  const double n = static_cast<double>(data.subjects());

  TestReport report;
  report.group_a = group_a;
  report.group_b = group_b;
  report.level = alpha;
  report.df = static_cast<int>((rows - 1) * (cols - 1));
  std::size_t sparse_cells = 0;
  double statistic = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double expected = n > 0.0 ? row_sum[r] * col_sum[c] / n : 0.0;
      if (expected < 5.0) ++sparse_cells;
      if (expected <= 0.0) continue;
      const double diff = observed[r * cols + c] - expected;
      statistic += diff * diff / expected;
    }
  }
  report.statistic = statistic;
  report.p_value = chi2_survival(statistic, report.df);
  report.reject = report.p_value < alpha;
  if (static_cast<double>(sparse_cells) > 0.2 * static_cast<double>(rows * cols)) {
    report.warning = std::to_string(sparse_cells) + " of " +
                     std::to_string(rows * cols) +
                     " cells have expected count below 5";
  }
  return report;
}

MannWhitneyResult mann_whitney_less(const std::vector<double>& first,
                                    const std::vector<double>& second) {
  const std::size_t n1 = first.size();
  const std::size_t n2 = second.size();
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("empty sample");
  MannWhitneyResult result;
  for (double x : first) {
    for (double y : second) result.u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  if (n1 * n2 <= 10000) {
    // cur[b][u]: orderings of a first-sample and b second-sample values with
    // U = u; rolled over a.
    const std::size_t max_u = n1 * n2;
    using Layer = std::vector<std::vector<double>>;
    Layer prev;
    Layer cur;
    for (std::size_t a = 0; a <= n1; ++a) {
      cur.assign(n2 + 1, {});
      for (std::size_t b = 0; b <= n2; ++b) {
        auto& cell = cur[b];
        cell.assign(a * b + 1, 0.0);
        if (a == 0 || b == 0) {
          cell[0] = 1.0;
          continue;
        }
        // the overall largest value, if from the first sample, beats all b
        for (std::size_t u = b; u <= a * b; ++u) cell[u] += prev[b][u - b];
        for (std::size_t u = 0; u <= a * (b - 1); ++u) cell[u] += cur[b - 1][u];
      }
      prev.swap(cur);
    }
    const auto& dist = prev[n2];
    double total = 0.0;
    double tail = 0.0;
    const double limit = std::floor(result.u + 1e-9);
    for (std::size_t u = 0; u <= max_u; ++u) {
      total += dist[u];
      if (static_cast<double>(u) <= limit) tail += dist[u];
    }
    result.p_value = tail / total;
    result.exact = true;
  } else {
    const double mean = 0.5 * static_cast<double>(n1 * n2);
    const double sd = std::sqrt(static_cast<double>(n1 * n2) *
                                static_cast<double>(n1 + n2 + 1) / 12.0);
    const double z = (result.u + 0.5 - mean) / sd;
    result.p_value = 0.5 * std::erfc(-z / std::sqrt(2.0));
  }
  return result;
}

}  // namespace bless
