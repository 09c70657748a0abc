#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpns {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double max_abs(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(const Vector& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Coordinate-format staging buffer for assembly.
struct Triplets {
  int n_rows = 0, n_cols = 0;
  std::vector<int> rows, cols;
  std::vector<double> vals;

  Triplets() = default;
  Triplets(int nr, int nc) : n_rows(nr), n_cols(nc) {}

  void reserve(size_t n) {
    rows.reserve(n);
    cols.reserve(n);
    vals.reserve(n);
  }

  void add(int r, int c, double v) {
    rows.push_back(r);
    cols.push_back(c);
    vals.push_back(v);
  }

  size_t size() const { return vals.size(); }
};

/// Compressed sparse row matrix. Columns are sorted and unique within each row.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  int rows() const { return n_rows_; }
  int cols() const { return n_cols_; }
  size_t nnz() const { return col_idx_.size(); }

  const std::vector<int>& row_offsets() const { return row_off_; }
  const std::vector<int>& col_indices() const { return col_idx_; }
  const std::vector<double>& values() const { return vals_; }
  std::vector<double>& values() { return vals_; }

  Vector multiply(const Vector& x) const {
    if (static_cast<int>(x.size()) != n_cols_)
      throw std::invalid_argument("spmv: dimension mismatch (" + std::to_string(x.size()) +
                                  " vs " + std::to_string(n_cols_) + " cols)");
    Vector y(static_cast<size_t>(n_rows_), 0.0);
    for (int r = 0; r < n_rows_; ++r) {
      double s = 0.0;
      for (int k = row_off_[r]; k < row_off_[r + 1]; ++k) s += vals_[k] * x[col_idx_[k]];
      y[r] = s;
    }
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
  }

  CsrMatrix scaled(double s) const {
    CsrMatrix out = *this;
    for (double& v : out.vals_) v *= s;
    return out;
  }

  CsrMatrix transposed() const {
    Triplets t(n_cols_, n_rows_);
    t.reserve(nnz());
    for (int r = 0; r < n_rows_; ++r)
      for (int k = row_off_[r]; k < row_off_[r + 1]; ++k) t.add(col_idx_[k], r, vals_[k]);
    return from_triplets(t);
  }

  double coeff(int r, int c) const {
    for (int k = row_off_[r]; k < row_off_[r + 1]; ++k)
      if (col_idx_[k] == c) return vals_[k];
    return 0.0;
  }

  /// Builds CSR from triplets; duplicate entries are summed. The layout and
  /// the summation result are independent of triplet order up to roundoff.
  static CsrMatrix from_triplets(const Triplets& t) {
    for (size_t k = 0; k < t.size(); ++k)
      if (t.rows[k] < 0 || t.rows[k] >= t.n_rows || t.cols[k] < 0 || t.cols[k] >= t.n_cols)
        throw std::out_of_range("from_triplets: index (" + std::to_string(t.rows[k]) + "," +
                                std::to_string(t.cols[k]) + ") outside " +
                                std::to_string(t.n_rows) + "x" + std::to_string(t.n_cols));

    const size_t nz = t.size();
    std::vector<std::pair<int64_t, double>> entries(nz);
    for (size_t k = 0; k < nz; ++k)
      entries[k] = {static_cast<int64_t>(t.rows[k]) * t.n_cols + t.cols[k], t.vals[k]};
    // Sorting on (position, value) makes duplicate summation independent of
    // the triplet insertion order.
    std::sort(entries.begin(), entries.end());

    CsrMatrix m;
    m.n_rows_ = t.n_rows;
    m.n_cols_ = t.n_cols;
    m.row_off_.assign(static_cast<size_t>(t.n_rows) + 1, 0);
    m.col_idx_.reserve(nz);
    m.vals_.reserve(nz);

    size_t k = 0;
    for (int r = 0; r < t.n_rows; ++r) {
      const int64_t row_end = static_cast<int64_t>(r + 1) * t.n_cols;
      while (k < nz && entries[k].first < row_end) {
        const int64_t key = entries[k].first;
        double s = 0.0;
        while (k < nz && entries[k].first == key) {
          s += entries[k].second;
          ++k;
        }
        m.col_idx_.push_back(static_cast<int>(key - static_cast<int64_t>(r) * t.n_cols));
        m.vals_.push_back(s);
      }
      m.row_off_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
  }

 private:
  int n_rows_ = 0, n_cols_ = 0;
  std::vector<int> row_off_{0};
  std::vector<int> col_idx_;
  std::vector<double> vals_;
};

inline CsrMatrix from_triplets(const Triplets& t) { return CsrMatrix::from_triplets(t); }

inline Vector spmv(const CsrMatrix& a, const Vector& x) { return a.multiply(x); }

/// Replaces Dirichlet rows by identity rows with the prescribed value on the
/// right-hand side and eliminates the matching columns into the rhs, so
/// symmetric blocks stay symmetric. `bcs` must be sorted by dof.
inline void apply_dirichlet(CsrMatrix& a, Vector& rhs,
                            const std::vector<std::pair<int, double>>& bcs) {
  if (bcs.empty()) return;
  std::vector<char> constrained(a.rows() > a.cols() ? a.rows() : a.cols(), 0);
  std::vector<double> value(constrained.size(), 0.0);
  for (const auto& [d, v] : bcs) {
    constrained[d] = 1;
    value[d] = v;
  }
  const auto& off = a.row_offsets();
  const auto& col = a.col_indices();
  auto& vals = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    if (constrained[r]) {
      bool has_diag = false;
      for (int k = off[r]; k < off[r + 1]; ++k) {
        vals[k] = (col[k] == r) ? 1.0 : 0.0;
        has_diag |= (col[k] == r);
      }
      if (!has_diag)
        throw std::logic_error("apply_dirichlet: row " + std::to_string(r) +
                               " has no structural diagonal");
      rhs[r] = value[r];
    } else {
      for (int k = off[r]; k < off[r + 1]; ++k) {
        if (constrained[col[k]]) {
          rhs[r] -= vals[k] * value[col[k]];
          vals[k] = 0.0;
        }
      }
    }
  }
}

}  // namespace mpns
