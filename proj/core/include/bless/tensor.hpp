#pragma once

#include <span>

#include "bless/types.hpp"

namespace bless {

/// Column-wise Kronecker product; the row index of `a` is most significant.
Matrix khatri_rao(const Matrix& a, const Matrix& b);
Matrix khatri_rao(std::span<const Matrix> factors);

Matrix kronecker(const Matrix& a, const Matrix& b);

/// Shift vector (Delta_{j,1}, ..., Delta_{j,d_j-1}, 0).
struct DeltaVector {
  Vector values;

  /// Zero-pads the final entry. `leading` has d_j - 1 entries.
  static DeltaVector from_leading(const Vector& leading);
};

// The d x d factor (Delta-tilde_j C) with Delta-tilde_j = [I, -Delta; -1^T, 1]
// and C = [I, 0; 1^T, 1]; it maps Phi to Phi - Delta 1^T for any
// column-stochastic Phi.
Matrix lemma1_factor(const DeltaVector& delta);

/// B = kron_j (Delta-tilde_j C). Throws std::invalid_argument when a delta
/// has a nonzero final entry.
Matrix build_lemma1_transform(std::span<const DeltaVector> deltas);

struct InvertibilityCheck {
  bool invertible = false;
  double rcond = 0.0;
};

/// LU factorization plus reciprocal-condition estimate > 1e-12.
InvertibilityCheck check_invertible(const Matrix& b);

/// || kr_j(Phi_j - Delta_j 1^T) - B kr_j Phi_j ||_inf. Throws
/// std::invalid_argument when a Phi column does not sum to 1 (1e-10).
double verify_lemma1_identity(std::span<const Matrix> phis,
                              std::span<const DeltaVector> deltas);

}  // namespace bless
