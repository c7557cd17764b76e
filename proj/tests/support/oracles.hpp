#pragma once

// Reference computations written straight from the definitions. They share
// no code with the library beyond the model types.

#include <cmath>
#include <cstddef>
#include <vector>

#include "bless/types.hpp"

namespace oracle {

using bless::BlessModel;
using bless::Matrix;
using bless::Vector;

/// Latent pattern as a bit vector, alpha_1 first.
inline std::vector<int> pattern_bits(std::size_t pattern, int latents) {
  std::vector<int> bits(static_cast<std::size_t>(latents));
  for (int k = latents - 1; k >= 0; --k) {
    bits[k] = static_cast<int>(pattern % 2);
    pattern /= 2;
  }
  return bits;
}

/// Response pattern as categories, c_1 first.
inline std::vector<int> response_digits(std::size_t index, int items, int d) {
  std::vector<int> digits(static_cast<std::size_t>(items));
  for (int j = items - 1; j >= 0; --j) {
    digits[j] = static_cast<int>(index % static_cast<std::size_t>(d));
    index /= static_cast<std::size_t>(d);
  }
  return digits;
}

inline double item_prob(const BlessModel& m, int j, int c, const std::vector<int>& alpha) {
  int parent = -1;
  for (int k = 0; k < m.k(); ++k) {
    if (m.g(j, k) == 1) parent = k;
  }
  return alpha[parent] ? m.items[j].theta1(c) : m.items[j].theta0(c);
}

/// P(y = c) by the double loop over response and latent patterns.
inline Vector brute_force_pmf(const BlessModel& m) {
  std::size_t cells = 1;
  for (int j = 0; j < m.p(); ++j) cells *= static_cast<std::size_t>(m.d);
  Vector pmf = Vector::Zero(static_cast<Eigen::Index>(cells));
  const std::size_t patterns = std::size_t{1} << m.k();
  for (std::size_t c = 0; c < cells; ++c) {
    const std::vector<int> y = response_digits(c, m.p(), m.d);
    for (std::size_t a = 0; a < patterns; ++a) {
      const std::vector<int> alpha = pattern_bits(a, m.k());
      double term = m.nu(static_cast<Eigen::Index>(a));
      for (int j = 0; j < m.p(); ++j) term *= item_prob(m, j, y[j], alpha);
      pmf(static_cast<Eigen::Index>(c)) += term;
    }
  }
  return pmf;
}

/// P(alpha | y) by Bayes rule over enumerated patterns.
inline Vector brute_force_posterior(const BlessModel& m, const std::vector<int>& y) {
  const std::size_t patterns = std::size_t{1} << m.k();
  Vector post(static_cast<Eigen::Index>(patterns));
  for (std::size_t a = 0; a < patterns; ++a) {
    const std::vector<int> alpha = pattern_bits(a, m.k());
    double term = m.nu(static_cast<Eigen::Index>(a));
    for (int j = 0; j < m.p(); ++j) term *= item_prob(m, j, y[j], alpha);
    post(static_cast<Eigen::Index>(a)) = term;
  }
  return post / post.sum();
}

inline double brute_force_loglik(const BlessModel& m, const bless::Dataset& data) {
  double total = 0.0;
  const std::size_t patterns = std::size_t{1} << m.k();
  for (int i = 0; i < data.subjects(); ++i) {
    double prob = 0.0;
    for (std::size_t a = 0; a < patterns; ++a) {
      const std::vector<int> alpha = pattern_bits(a, m.k());
      double term = m.nu(static_cast<Eigen::Index>(a));
      for (int j = 0; j < m.p(); ++j) term *= item_prob(m, j, data(i, j), alpha);
      prob += term;
    }
    total += std::log(prob);
  }
  return total;
}

/// out(i * rows(b) + r, col) = a(i, col) * b(r, col).
inline Matrix khatri_rao_by_index(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index r = 0; r < b.rows(); ++r) {
      for (Eigen::Index col = 0; col < a.cols(); ++col) {
        out(i * b.rows() + r, col) = a(i, col) * b(r, col);
      }
    }
  }
  return out;
}

/// Chi-square upper tail for even df: exp(-x/2) sum_{i < df/2} (x/2)^i / i!.
inline double chi2_survival_even(double x, int df) {
  const double h = 0.5 * x;
  double term = std::exp(-h);
  double sum = term;
  for (int i = 1; i < df / 2; ++i) {
    term *= h / i;
    sum += term;
  }
  return sum;
}

/// Chi-square upper tail for odd df from Q(x; 1) = erfc(sqrt(x/2)) and
/// Q(x; n + 2) = Q(x; n) + (x/2)^{n/2} e^{-x/2} / Gamma(n/2 + 1).
inline double chi2_survival_odd(double x, int df) {
  const double h = 0.5 * x;
  double q = std::erfc(std::sqrt(h));
  for (int n = 1; n < df; n += 2) {
    q += std::exp(0.5 * n * std::log(h) - h - std::lgamma(0.5 * n + 1.0));
  }
  return q;
}

}  // namespace oracle
