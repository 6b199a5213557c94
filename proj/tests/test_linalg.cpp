#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sketchls/linalg.hpp"
#include "sketchls/probgen.hpp"
#include "test_util.hpp"

using namespace sketchls;

TEST(Matvec, IdentityTimesVector) {
  const auto x = matvec(DenseMatrix::identity(3), Vector{1, 2, 3});
  EXPECT_EQ(x, (Vector{1, 2, 3}));
}

TEST(Matvec, ZeroVector) {
  const DenseMatrix a(test::random_matrix(4, 3, 1));
  EXPECT_EQ(matvec(a, Vector(3)), Vector(4));
  EXPECT_EQ(matvec_transpose(a, Vector(4)), Vector(3));
}

TEST(Matvec, SmallHandComputed) {
  const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matvec(a, Vector{1, 1}), (Vector{3, 7}));
  EXPECT_EQ(matvec_transpose(a, Vector{1, 1}), (Vector{4, 6}));
  EXPECT_EQ(matvec_transpose(DenseMatrix::identity(3), Vector{1, 2, 3}), (Vector{1, 2, 3}));
}

TEST(Matvec, ShapeMismatchThrows) {
  const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_THROW(matvec(a, Vector{1, 2, 3}), ShapeError);
  EXPECT_THROW(matvec_transpose(a, Vector{1, 2}), ShapeError);
  const auto s = SparseMatrix::from_dense(a);
  EXPECT_THROW(matvec(s, Vector{1}), ShapeError);
  EXPECT_THROW(matvec_transpose(s, Vector{1}), ShapeError);
}

TEST(Matvec, SparseAgreesWithDense) {
  Eigen::MatrixXd m = test::random_matrix(40, 7, 2);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if ((i + 2 * j) % 3 != 0) m(i, j) = 0.0;
    }
  }
  const DenseMatrix dense(m);
  const auto sparse = SparseMatrix::from_dense(dense);
  const Vector x(test::random_vector(7, 3));
  const Vector y(test::random_vector(40, 4));
  EXPECT_LE((matvec(sparse, x).eigen() - m * x.eigen()).norm(), 1e-14 * (m * x.eigen()).norm());
  EXPECT_LE((matvec_transpose(sparse, y).eigen() - m.transpose() * y.eigen()).norm(),
            1e-14 * (m.transpose() * y.eigen()).norm());
  EXPECT_EQ(sparse.to_dense(), dense);
}

TEST(Containers, RejectNonFiniteAndBadShapes) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Vector({1.0, nan}), SpecError);
  EXPECT_THROW(DenseMatrix(1, 2, {1.0, std::numeric_limits<double>::infinity()}), SpecError);
  EXPECT_THROW(DenseMatrix(0, 2), ShapeError);
  EXPECT_THROW(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), ShapeError);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1, 1}, {0}, {nan}), SpecError);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), ShapeError);
}

TEST(Containers, TripletsSumDuplicates) {
  const auto s = SparseMatrix::from_triplets(2, 3, {{1, 2, 1.5}, {0, 0, 1.0}, {1, 2, 2.5}});
  EXPECT_EQ(s.nnz(), 2);
  EXPECT_EQ(s.to_dense()(1, 2), 4.0);
  EXPECT_EQ(s.to_dense()(0, 0), 1.0);
}

TEST(EconomyQR, Identity) {
  const auto f = economy_qr(DenseMatrix::identity(2));
  EXPECT_EQ(f.q, DenseMatrix::identity(2));
  EXPECT_EQ(f.r, DenseMatrix::identity(2));
}

TEST(EconomyQR, SingleColumn) {
  const auto f = economy_qr(DenseMatrix::from_rows({{3}, {4}}));
  EXPECT_NEAR(f.r(0, 0), 5.0, 1e-15);
  EXPECT_NEAR(f.q(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(f.q(1, 0), 0.8, 1e-15);
}

TEST(EconomyQR, RandomFactorsAreOrthonormalAndReconstruct) {
  for (auto [rows, cols, seed] : {std::tuple{20, 5, 11u}, {100, 30, 12u}, {7, 7, 13u}}) {
    const Eigen::MatrixXd m = test::random_matrix(rows, cols, seed);
    const auto f = economy_qr(DenseMatrix(m));
    const Eigen::MatrixXd q = f.q.eigen();
    const Eigen::MatrixXd r = f.r.eigen();
    EXPECT_LE((q.transpose() * q - Eigen::MatrixXd::Identity(cols, cols)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((q * r - m).norm(), 1e-13 * m.norm());
    for (Index i = 0; i < cols; ++i) {
      EXPECT_GT(r(i, i), 0.0);
      for (Index j = 0; j < i; ++j) EXPECT_EQ(r(i, j), 0.0);
    }
  }
}

TEST(EconomyQR, RankDeficiencyNamesColumn) {
  Eigen::MatrixXd m = test::random_matrix(10, 4, 5);
  m.col(2) = 2.0 * m.col(0) - m.col(1);
  try {
    economy_qr(DenseMatrix(m));
    FAIL() << "expected a singular factor error";
  } catch (const SingularFactorError& e) {
    EXPECT_EQ(e.column(), 2);
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
  }
  EXPECT_THROW(economy_qr(DenseMatrix(3, 2)), SingularFactorError);
  EXPECT_THROW(economy_qr(DenseMatrix(2, 3)), ShapeError);
}

TEST(SolveTriangular, Examples) {
  EXPECT_EQ(solve_triangular(DenseMatrix::identity(2), Vector{5, 6}), (Vector{5, 6}));
  EXPECT_EQ(solve_triangular(DenseMatrix::from_rows({{2, 1}, {0, 4}}), Vector{4, 8}), (Vector{1, 2}));
  EXPECT_THROW(solve_triangular(DenseMatrix::from_rows({{2, 0}, {0, 0}}), Vector{1, 1}), SingularFactorError);
  EXPECT_THROW(solve_triangular(DenseMatrix::identity(2), Vector{1, 1, 1}), ShapeError);
}

TEST(SolveTriangular, TransposedAndRandom) {
  // R^T z = y with R = [[2,1],[0,4]]: z0 = 1, z1 = (8 - 1) / 4.
  const auto z = solve_triangular(DenseMatrix::from_rows({{2, 1}, {0, 4}}), Vector{2, 8}, true);
  EXPECT_EQ(z, (Vector{1, 1.75}));

  Eigen::MatrixXd r = test::random_matrix(30, 30, 6).triangularView<Eigen::Upper>();
  r.diagonal().array() += 10.0;
  const Eigen::VectorXd y = test::random_vector(30, 7);
  const auto x = solve_triangular(DenseMatrix(r), Vector(y));
  EXPECT_LE((r * x.eigen() - y).norm(), 1e-13 * y.norm());
  const auto xt = solve_triangular(DenseMatrix(r), Vector(y), true);
  EXPECT_LE((r.transpose() * xt.eigen() - y).norm(), 1e-13 * y.norm());
}

TEST(Oracle, Examples) {
  EXPECT_EQ(normal_equations_oracle(DenseMatrix::identity(3), Vector{1, 2, 3}), (Vector{1, 2, 3}));
  const auto x = normal_equations_oracle(DenseMatrix::from_rows({{1}, {1}}), Vector{0, 2});
  EXPECT_NEAR(x[0], 1.0, 1e-15);
}

TEST(Oracle, ConsistentSystemRecoversSolution) {
  const Eigen::MatrixXd a = test::random_matrix(50, 8, 8);
  const Eigen::VectorXd xs = test::random_vector(8, 9);
  const auto x = normal_equations_oracle(DenseMatrix(a), Vector(Eigen::VectorXd(a * xs)));
  EXPECT_LE((x.eigen() - xs).norm(), 1e-12 * xs.norm());
}

TEST(Oracle, PerturbationsDoNotLowerResidual) {
  const DenseMatrix a(test::random_matrix(60, 6, 10));
  const Vector b(test::random_vector(60, 11));
  const auto x = normal_equations_oracle(a, b);
  const double best = residual_norm(a, b, x);
  // Normal equations hold at the minimizer.
  EXPECT_LE(matvec_transpose(a, Vector(Eigen::VectorXd(b.eigen() - matvec(a, x).eigen()))).norm(),
            1e-12 * a.frobenius_norm() * b.norm());
  for (unsigned k = 0; k < 20; ++k) {
    const Eigen::VectorXd dx = 1e-4 * test::random_vector(6, 100 + k);
    EXPECT_GE(residual_norm(a, b, Vector(Eigen::VectorXd(x.eigen() + dx))), best);
  }
}

TEST(Oracle, RankDeficientThrows) {
  EXPECT_THROW(normal_equations_oracle(DenseMatrix::from_rows({{1, 1}, {1, 1}, {1, 1}}), Vector{1, 2, 3}),
               SingularFactorError);
}

TEST(ConditionNumber, Examples) {
  EXPECT_NEAR(spectral_condition_number(DenseMatrix::identity(5)), 1.0, 1e-14);
  EXPECT_NEAR(spectral_condition_number(DenseMatrix::from_rows({{10, 0}, {0, 1}})), 10.0, 1e-13);
  EXPECT_EQ(spectral_condition_number(DenseMatrix::from_rows({{1, 0}, {0, 0}})),
            std::numeric_limits<double>::infinity());
  EXPECT_THROW(spectral_condition_number(DenseMatrix(2, 3)), ShapeError);
}

TEST(ConditionNumber, GeneratedProblem) {
  const auto p = generate_problem({500, 50, 1e6, 1e-10, 3});
  EXPECT_NEAR(spectral_condition_number(p.a), 1e6, 1e4);
}
