#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "mpns/solver.hpp"
#include "mpns/sparse.hpp"
#include "oracle_utils.hpp"

using namespace mpns;

TEST(FromTriplets, DuplicatesAreSummed) {
  Triplets t(1, 1);
  t.add(0, 0, 1.0);
  t.add(0, 0, 2.0);
  const CsrMatrix m = from_triplets(t);
  EXPECT_EQ(m.nnz(), 1u);
  EXPECT_DOUBLE_EQ(m.values()[0], 3.0);
}

TEST(FromTriplets, EmptyMatrix) {
  const CsrMatrix m = from_triplets(Triplets(5, 5));
  EXPECT_EQ(m.rows(), 5);
  EXPECT_EQ(m.nnz(), 0u);
  const Vector y = spmv(m, Vector(5, 1.0));
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(FromTriplets, IdentityActsAsIdentity) {
  Triplets t(4, 4);
  for (int i = 0; i < 4; ++i) t.add(i, i, 1.0);
  const CsrMatrix id = from_triplets(t);
  const Vector x = {1.0, -2.0, 3.5, 0.25};
  EXPECT_EQ(spmv(id, x), x);
}

TEST(FromTriplets, RejectsOutOfBounds) {
  Triplets t(2, 2);
  t.add(0, 2, 1.0);
  EXPECT_THROW(from_triplets(t), std::out_of_range);
}

TEST(FromTriplets, PermutationInvariance) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> idx(0, 19);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Triplets t(20, 20);
  for (int k = 0; k < 600; ++k) t.add(idx(rng), idx(rng), val(rng));

  Triplets shuffled = t;
  std::vector<size_t> perm(t.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  for (size_t k = 0; k < perm.size(); ++k) {
    shuffled.rows[k] = t.rows[perm[k]];
    shuffled.cols[k] = t.cols[perm[k]];
    shuffled.vals[k] = t.vals[perm[k]];
  }

  const CsrMatrix a = from_triplets(t);
  const CsrMatrix b = from_triplets(shuffled);
  ASSERT_EQ(a.nnz(), b.nnz());
  ASSERT_EQ(a.col_indices(), b.col_indices());
  for (size_t k = 0; k < a.nnz(); ++k)
    EXPECT_NEAR(a.values()[k], b.values()[k], 1e-15 * std::max(1.0, std::abs(a.values()[k])));
}

TEST(Spmv, MatchesDenseOracle) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  std::uniform_int_distribution<int> idx(0, 49);
  Triplets t(50, 50);
  for (int k = 0; k < 700; ++k) t.add(idx(rng), idx(rng), val(rng));
  const CsrMatrix a = from_triplets(t);
  const auto dense = oracle::dense_from_csr(a);

  Vector x(50);
  for (double& v : x) v = val(rng);
  const Vector y = spmv(a, x);
  const auto yd = oracle::dense_multiply(dense, x);
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(y[i], yd[i], 1e-13);
}

TEST(Spmv, DimensionMismatchThrows) {
  Triplets t(3, 3);
  t.add(0, 0, 1.0);
  const CsrMatrix a = from_triplets(t);
  EXPECT_THROW(spmv(a, Vector(4, 0.0)), std::invalid_argument);
}

TEST(Solve, IdentityAndDiagonal) {
  {
    Triplets t(3, 3);
    for (int i = 0; i < 3; ++i) t.add(i, i, 1.0);
    const Vector b = {1.0, 2.0, 3.0};
    const Vector x = solve(from_triplets(t), b);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(x[i], b[i], 1e-14);
  }
  {
    Triplets t(2, 2);
    t.add(0, 0, 2.0);
    t.add(1, 1, 4.0);
    const Vector x = solve(from_triplets(t), {2.0, 8.0});
    EXPECT_NEAR(x[0], 1.0, 1e-14);
    EXPECT_NEAR(x[1], 2.0, 1e-14);
  }
}

TEST(Solve, ZeroRhsGivesZero) {
  Triplets t(3, 3);
  for (int i = 0; i < 3; ++i) t.add(i, i, 2.0 + i);
  const Vector x = solve(from_triplets(t), Vector(3, 0.0));
  for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(Solve, RandomSpdMatchesDenseOracle) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const int n = 50;
  // SPD via diagonally dominant symmetric construction
  oracle::DenseMatrix d(n, n);
  Triplets t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      if (i != j && std::abs(i - j) > 4) continue;
      double v = (i == j) ? 12.0 + val(rng) : val(rng);
      d.at(i, j) = v;
      d.at(j, i) = v;
      t.add(i, j, v);
      if (i != j) t.add(j, i, v);
    }
  Vector b(n);
  for (double& v : b) v = val(rng);

  const Vector x = solve(from_triplets(t), b);
  const auto xd = oracle::dense_solve(d, b);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], xd[i], 1e-9);
}

TEST(Solve, SingularMatrixReported) {
  Triplets t(2, 2);
  t.add(0, 0, 1.0);
  t.add(0, 1, 1.0);
  t.add(1, 0, 1.0);
  t.add(1, 1, 1.0);
  EXPECT_THROW(solve(from_triplets(t), {1.0, 2.0}), SolverError);
}

TEST(Solve, ResidualContractOnRandomSystems) {
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 10 + trial % 17;
    Triplets t(n, n);
    for (int i = 0; i < n; ++i) {
      t.add(i, i, 8.0 + val(rng));
      t.add(i, (i + 1) % n, val(rng));
      t.add(i, (i + 5) % n, val(rng));
    }
    const CsrMatrix a = from_triplets(t);
    Vector b(n);
    for (double& v : b) v = val(rng);
    const Vector x = solve(a, b);
    Vector r = spmv(a, x);
    for (int i = 0; i < n; ++i) r[i] -= b[i];
    EXPECT_LE(norm2(r) / norm2(b), 1e-10);
  }
}

TEST(SolveBordered, MeanFreeRhsLeavesLambdaZero) {
  Triplets t(2, 2);
  t.add(0, 0, 1.0);
  t.add(1, 1, 1.0);
  const auto [x, lambda] = solve_bordered(from_triplets(t), {1.0, -1.0}, {1.0, 1.0});
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], -1.0, 1e-14);
  EXPECT_NEAR(lambda, 0.0, 1e-14);
}

TEST(SolveBordered, SymmetricRhsProjectedOut) {
  Triplets t(2, 2);
  t.add(0, 0, 1.0);
  t.add(1, 1, 1.0);
  const auto [x, lambda] = solve_bordered(from_triplets(t), {1.0, 1.0}, {1.0, 1.0});
  EXPECT_NEAR(x[0], 0.0, 1e-14);
  EXPECT_NEAR(x[1], 0.0, 1e-14);
  EXPECT_NEAR(lambda, 1.0, 1e-14);
}

TEST(SolveBordered, RandomSystemMatchesDenseOracle) {
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const int n = 30;
  Triplets t(n, n);
  oracle::DenseMatrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = (i == j) ? 10.0 + val(rng) : val(rng) * 0.3;
      t.add(i, j, v);
      d.at(i, j) = v;
    }
  Vector b(n), r(n);
  for (double& v : b) v = val(rng);
  for (double& v : r) v = 0.5 + 0.1 * val(rng);

  const auto [x, lambda] = solve_bordered(from_triplets(t), b, r);
  const auto [xd, lambdad] = oracle::dense_solve_bordered(d, b, r);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], xd[i], 1e-9);
  EXPECT_NEAR(lambda, lambdad, 1e-9);
  EXPECT_NEAR(dot(r, x), 0.0, 1e-10);
}

TEST(ApplyDirichlet, RowReplacementAndColumnElimination) {
  // 3x3 symmetric system; constrain dof 1 to value 2.
  Triplets t(3, 3);
  const double a[3][3] = {{4, 1, 0}, {1, 4, 1}, {0, 1, 4}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (a[i][j] != 0) t.add(i, j, a[i][j]);
  CsrMatrix m = from_triplets(t);
  Vector rhs = {1.0, 1.0, 1.0};
  apply_dirichlet(m, rhs, {{1, 2.0}});

  EXPECT_DOUBLE_EQ(m.coeff(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.coeff(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(m.coeff(0, 1), 0.0);  // symmetry preserved
  EXPECT_DOUBLE_EQ(rhs[1], 2.0);
  EXPECT_DOUBLE_EQ(rhs[0], 1.0 - 1.0 * 2.0);

  const Vector x = solve(m, rhs);
  EXPECT_NEAR(x[1], 2.0, 1e-14);
  // remaining equations: 4 x0 = -1, 4 x2 = -1
  EXPECT_NEAR(x[0], -0.25, 1e-14);
  EXPECT_NEAR(x[2], -0.25, 1e-14);
}

TEST(MatrixMarket, DumpIsWellFormed) {
  Triplets t(2, 3);
  t.add(0, 0, 1.5);
  t.add(1, 2, -2.0);
  const std::string path = ::testing::TempDir() + "/mpns_test_dump.mtx";
  write_matrix_market(from_triplets(t), path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "%%MatrixMarket matrix coordinate real general");
  int r = 0, c = 0, nnz = 0;
  in >> r >> c >> nnz;
  EXPECT_EQ(r, 2);
  EXPECT_EQ(c, 3);
  EXPECT_EQ(nnz, 2);
}
