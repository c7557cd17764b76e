#include "bless/tensor.hpp"

#include <cmath>

namespace bless {

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("khatri_rao: column counts differ");
  }
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index col = 0; col < a.cols(); ++col) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      out.col(col).segment(r * b.rows(), b.rows()) = a(r, col) * b.col(col);
    }
  }
  return out;
}

Matrix khatri_rao(std::span<const Matrix> factors) {
  if (factors.empty()) throw std::invalid_argument("khatri_rao: no factors");
  Matrix out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) {
    out = khatri_rao(out, factors[i]);
  }
  return out;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DeltaVector DeltaVector::from_leading(const Vector& leading) {
  DeltaVector delta;
  delta.values = Vector::Zero(leading.size() + 1);
  delta.values.head(leading.size()) = leading;
  return delta;
}

Matrix lemma1_factor(const DeltaVector& delta) {
  const Eigen::Index d = delta.values.size();
  if (d < 2) throw std::invalid_argument("delta needs at least 2 entries");
  if (delta.values(d - 1) != 0.0) {
    throw std::invalid_argument("delta must have a zero final entry");
  }
  Matrix shift = Matrix::Identity(d, d);
  shift.col(d - 1).head(d - 1) = -delta.values.head(d - 1);
  shift.row(d - 1).head(d - 1).setConstant(-1.0);
  Matrix sum_rows = Matrix::Identity(d, d);
  sum_rows.row(d - 1).setOnes();
  return shift * sum_rows;
}

Matrix build_lemma1_transform(std::span<const DeltaVector> deltas) {
  if (deltas.empty()) throw std::invalid_argument("no delta vectors");
  Matrix b = lemma1_factor(deltas.front());
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    b = kronecker(b, lemma1_factor(deltas[i]));
  }
  return b;
}

InvertibilityCheck check_invertible(const Matrix& b) {
  InvertibilityCheck out;
  if (b.rows() != b.cols() || b.rows() == 0) return out;
  const Eigen::PartialPivLU<Matrix> lu(b);
  out.rcond = lu.rcond();
  out.invertible = std::isfinite(out.rcond) && out.rcond > 1e-12;
  return out;
}

double verify_lemma1_identity(std::span<const Matrix> phis,
                              std::span<const DeltaVector> deltas) {
  if (phis.size() != deltas.size() || phis.empty()) {
    throw std::invalid_argument("need one delta per conditional table");
  }
  std::vector<Matrix> shifted;
  shifted.reserve(phis.size());
  for (std::size_t j = 0; j < phis.size(); ++j) {
    const Matrix& phi = phis[j];
    if (phi.rows() != deltas[j].values.size()) {
      throw std::invalid_argument("delta length differs from table rows");
    }
    const Eigen::RowVectorXd sums = phi.colwise().sum();
    if ((sums.array() - 1.0).abs().maxCoeff() > 1e-10) {
      throw std::invalid_argument("conditional table column does not sum to 1");
    }
    shifted.push_back(phi -
                      deltas[j].values * Eigen::RowVectorXd::Ones(phi.cols()));
  }
  const Matrix lhs = khatri_rao(std::span<const Matrix>(shifted));
  const Matrix rhs = build_lemma1_transform(deltas) * khatri_rao(phis);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

}  // namespace bless
