#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mpns/sparse.hpp"

namespace mpns {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveOptions {
  double rel_residual_tol = 1e-10;
};

namespace detail {

inline Eigen::SparseMatrix<double> to_eigen(const CsrMatrix& a) {
  using RowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
  Eigen::Map<const RowMajor> view(a.rows(), a.cols(), static_cast<int>(a.nnz()),
                                  a.row_offsets().data(), a.col_indices().data(),
                                  a.values().data());
  return Eigen::SparseMatrix<double>(view);
}

}  // namespace detail

/// Sparse LU factorizer with a residual check on every solve. The factorization
/// is owned so multiple right-hand sides can reuse it.
class LuSolver {
 public:
  explicit LuSolver(const CsrMatrix& a, SolveOptions opts = {})
      : n_(a.rows()), opts_(opts), matrix_(&a) {
    if (a.rows() != a.cols())
      throw SolverError("solve: matrix must be square, got " + std::to_string(a.rows()) +
                        "x" + std::to_string(a.cols()));
    eigen_ = detail::to_eigen(a);
    lu_.compute(eigen_);
    if (lu_.info() != Eigen::Success)
      throw SolverError("solve: LU factorization failed (" +
                        std::string(lu_.info() == Eigen::NumericalIssue
                                        ? "singular or numerically degenerate matrix"
                                        : "internal error") +
                        "), n=" + std::to_string(n_));
  }

  Vector solve(const Vector& b) const {
    if (static_cast<int>(b.size()) != n_)
      throw SolverError("solve: rhs size " + std::to_string(b.size()) + " != n " +
                        std::to_string(n_));
    const double bnorm = norm2(b);
    if (bnorm == 0.0) return Vector(b.size(), 0.0);

    Eigen::Map<const Eigen::VectorXd> bm(b.data(), n_);
    Eigen::VectorXd xe = lu_.solve(bm);
    if (lu_.info() != Eigen::Success) throw SolverError("solve: back-substitution failed");

    Vector x(xe.data(), xe.data() + n_);
    Vector r = matrix_->multiply(x);
    for (int i = 0; i < n_; ++i) r[i] -= b[i];
    const double rel = norm2(r) / bnorm;
    if (!(rel <= opts_.rel_residual_tol))
      throw SolverError("solve: relative residual " + std::to_string(rel) +
                        " exceeds tolerance " + std::to_string(opts_.rel_residual_tol) +
                        " (n=" + std::to_string(n_) + ")");
    return x;
  }

 private:
  int n_;
  SolveOptions opts_;
  const CsrMatrix* matrix_;
  Eigen::SparseMatrix<double> eigen_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

/// Solves A x = b. Contract: relative residual <= 1e-10 when b != 0, else x = 0.
inline Vector solve(const CsrMatrix& a, const Vector& b, SolveOptions opts = {}) {
  return LuSolver(a, opts).solve(b);
}

/// Solves the bordered system [[A, r^T], [r, 0]] [x; lambda] = [b; 0], i.e.
/// A x + lambda r^T = b subject to r . x = 0. Used to pin the zero-mean
/// pressure constraint without choosing a reference node.
inline std::pair<Vector, double> solve_bordered(const CsrMatrix& a, const Vector& b,
                                                const Vector& constraint_row,
                                                SolveOptions opts = {}) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(constraint_row.size()) != n)
    throw SolverError("solve_bordered: dimension mismatch");

  Triplets t(n + 1, n + 1);
  t.reserve(a.nnz() + 2 * static_cast<size_t>(n));
  const auto& off = a.row_offsets();
  const auto& col = a.col_indices();
  const auto& vals = a.values();
  for (int r = 0; r < n; ++r)
    for (int k = off[r]; k < off[r + 1]; ++k) t.add(r, col[k], vals[k]);
  for (int i = 0; i < n; ++i) {
    if (constraint_row[i] == 0.0) continue;
    t.add(i, n, constraint_row[i]);
    t.add(n, i, constraint_row[i]);
  }
  const CsrMatrix bordered = CsrMatrix::from_triplets(t);

  Vector rhs(b);
  rhs.push_back(0.0);
  Vector x;
  try {
    x = solve(bordered, rhs, opts);
  } catch (const SolverError& e) {
    throw SolverError(std::string("solve_bordered: ") + e.what());
  }
  const double lambda = x.back();
  x.pop_back();
  return {std::move(x), lambda};
}

/// MatrixMarket coordinate-format dump (1-based indices), for debugging.
inline void write_matrix_market(const CsrMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nnz() << "\n";
  out.precision(17);
  const auto& off = a.row_offsets();
  const auto& col = a.col_indices();
  const auto& vals = a.values();
  for (int r = 0; r < a.rows(); ++r)
    for (int k = off[r]; k < off[r + 1]; ++k)
      out << (r + 1) << " " << (col[k] + 1) << " " << vals[k] << "\n";
}

}  // namespace mpns
