#include <gtest/gtest.h>

#include <vector>

#include "bless/random.hpp"
#include "bless/tensor.hpp"
#include "oracles.hpp"

namespace bless {
namespace {

Matrix random_stochastic(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) m.col(c) = rng.dirichlet_flat(rows);
  return m;
}

DeltaVector random_delta(int d, Rng& rng) {
  Vector leading(d - 1);
  for (int i = 0; i < d - 1; ++i) leading(i) = rng.uniform(-0.5, 0.5);
  return DeltaVector::from_leading(leading);
}

TEST(KhatriRao, HandExample) {
  Matrix a(2, 2);
  a << 1, 0, 0, 1;
  Matrix b(2, 2);
  b << 1, 1, 0, 0;
  Matrix expected(4, 2);
  expected << 1, 0, 0, 0, 0, 1, 0, 0;
  EXPECT_EQ(khatri_rao(a, b), expected);
}

TEST(KhatriRao, MatchesIndexDefinition) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = Matrix::Random(2 + trial % 3, 4);
    const Matrix b = Matrix::Random(1 + trial % 4, 4);
    EXPECT_TRUE(khatri_rao(a, b).isApprox(oracle::khatri_rao_by_index(a, b), 0.0));
  }
}

TEST(KhatriRao, ListFoldsLeftToRight) {
  const Matrix a = Matrix::Random(2, 3);
  const Matrix b = Matrix::Random(3, 3);
  const Matrix c = Matrix::Random(2, 3);
  const std::vector<Matrix> list{a, b, c};
  EXPECT_TRUE(khatri_rao(list).isApprox(khatri_rao(khatri_rao(a, b), c), 1e-15));
}

TEST(KhatriRao, PreservesColumnStochasticity) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix kr = khatri_rao(random_stochastic(3, 4, rng), random_stochastic(2, 4, rng));
    EXPECT_LT((kr.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
  }
}

TEST(KhatriRao, RejectsColumnMismatch) {
  EXPECT_THROW(khatri_rao(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), std::invalid_argument);
}

TEST(Kronecker, MatchesDefinition) {
  const Matrix a = Matrix::Random(2, 3);
  const Matrix b = Matrix::Random(3, 2);
  const Matrix k = kronecker(a, b);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_TRUE(k.block(3 * i, 2 * j, 3, 2).isApprox(a(i, j) * b, 1e-15));
    }
  }
}

TEST(ShiftTransform, ZeroShiftsGiveIdentity) {
  const std::vector<DeltaVector> deltas(3, DeltaVector::from_leading(Vector::Zero(1)));
  EXPECT_EQ(build_lemma1_transform(deltas), Matrix::Identity(8, 8));
}

TEST(ShiftTransform, SingleBinaryFactorByHand) {
  const double delta = 0.3;
  const std::vector<DeltaVector> deltas{DeltaVector::from_leading(Vector::Constant(1, delta))};
  Matrix expected(2, 2);
  expected << 1 - delta, -delta, 0, 1;
  EXPECT_TRUE(build_lemma1_transform(deltas).isApprox(expected, 1e-15));
}

TEST(ShiftTransform, FactorShiftsAnyStochasticTable) {
  Rng rng(17);
  const DeltaVector delta = random_delta(4, rng);
  const Matrix phi = random_stochastic(4, 6, rng);
  const Matrix shifted = phi - delta.values * Matrix::Ones(1, 6);
  EXPECT_LT((lemma1_factor(delta) * phi - shifted).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ShiftTransform, ZeroShiftResidualIsExactlyZero) {
  Rng rng(1);
  const std::vector<Matrix> phis{random_stochastic(2, 4, rng), random_stochastic(3, 4, rng)};
  const std::vector<DeltaVector> deltas{DeltaVector::from_leading(Vector::Zero(1)),
                                        DeltaVector::from_leading(Vector::Zero(2))};
  EXPECT_EQ(verify_lemma1_identity(phis, deltas), 0.0);
}

TEST(ShiftTransform, RandomIdentityHolds) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<int> dims{2, 3, 2};
    std::vector<Matrix> phis;
    std::vector<DeltaVector> deltas;
    for (int d : dims) {
      phis.push_back(random_stochastic(d, 4, rng));
      deltas.push_back(random_delta(d, rng));
    }
    EXPECT_LT(verify_lemma1_identity(phis, deltas), 1e-12);
  }
}

TEST(ShiftTransform, TransformIsInvertible) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DeltaVector> deltas;
    for (int j = 0; j < 3; ++j) deltas.push_back(random_delta(2 + trial % 3, rng));
    const Matrix b = build_lemma1_transform(deltas);
    EXPECT_TRUE(check_invertible(b).invertible);
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(b.rows())));
    const Vector e = Vector::Unit(b.rows(), i);
    const Vector x = b.partialPivLu().solve(e);
    EXPECT_LT((b * x - e).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ShiftTransform, RejectsBadInput) {
  DeltaVector bad{Vector::Ones(2)};
  const std::vector<DeltaVector> deltas{bad};
  EXPECT_THROW(build_lemma1_transform(deltas), std::invalid_argument);
  Matrix not_stochastic = Matrix::Constant(2, 2, 0.7);
  const std::vector<Matrix> phis{not_stochastic};
  const std::vector<DeltaVector> zero{DeltaVector::from_leading(Vector::Zero(1))};
  EXPECT_THROW(verify_lemma1_identity(phis, zero), std::invalid_argument);
}

TEST(ShiftTransform, SingularMatrixDetected) {
  EXPECT_FALSE(check_invertible(Matrix::Ones(3, 3)).invertible);
  EXPECT_TRUE(check_invertible(Matrix::Identity(3, 3)).invertible);
}

}  // namespace
}  // namespace bless
