#pragma once

// Dense and sparse 64-bit containers plus the deterministic kernels the rest
// of the library is built on.
//
// Dense matrices are stored column-major (Eigen's default layout); QR, sketch
// application and the LSQR sweeps all walk columns. Every container checks its
// invariants on construction and is immutable afterwards.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sketchls/errors.hpp"

namespace sketchls {

using Index = Eigen::Index;

namespace detail {

inline std::string dims(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Vector

class Vector {
 public:
  Vector() = default;

  /// Zero vector of length n.
  explicit Vector(Index n) : data_(Eigen::VectorXd::Zero(check_len(n))) {}

  Vector(std::initializer_list<double> values)
      : Vector(std::vector<double>(values)) {}

  explicit Vector(const std::vector<double>& values)
      : data_(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()))) {
    check_finite();
  }

  explicit Vector(Eigen::VectorXd values) : data_(std::move(values)) { check_finite(); }

  Index size() const noexcept { return data_.size(); }
  double operator[](Index i) const { return data_[i]; }
  double norm() const { return data_.norm(); }

  const Eigen::VectorXd& eigen() const noexcept { return data_; }
  std::span<const double> span() const noexcept {
    return {data_.data(), static_cast<std::size_t>(data_.size())};
  }
  std::vector<double> to_std() const { return {data_.data(), data_.data() + data_.size()}; }

  friend bool operator==(const Vector& a, const Vector& b) {
    return a.size() == b.size() && std::equal(a.data_.data(), a.data_.data() + a.size(), b.data_.data());
  }

 private:
  static Index check_len(Index n) {
    if (n < 0) throw ShapeError("vector length must be nonnegative");
    return n;
  }
  void check_finite() const {
    if (!data_.allFinite()) throw SpecError("vector entries must be finite");
  }

  Eigen::VectorXd data_;
};

// ---------------------------------------------------------------------------
// DenseMatrix

class DenseMatrix {
 public:
  /// Zero matrix.
  DenseMatrix(Index rows, Index cols) {
    check_dims(rows, cols);
    data_ = Eigen::MatrixXd::Zero(rows, cols);
  }

  /// Takes `col_major` entries laid out column by column.
  DenseMatrix(Index rows, Index cols, const std::vector<double>& col_major) {
    check_dims(rows, cols);
    if (static_cast<Index>(col_major.size()) != rows * cols) {
      throw ShapeError("dense matrix " + detail::dims(rows, cols) + " needs " +
                       std::to_string(rows * cols) + " entries, got " +
                       std::to_string(col_major.size()));
    }
    data_ = Eigen::Map<const Eigen::MatrixXd>(col_major.data(), rows, cols);
    check_finite();
  }

  explicit DenseMatrix(Eigen::MatrixXd values) : data_(std::move(values)) {
    check_dims(data_.rows(), data_.cols());
    check_finite();
  }

  /// Row-wise literal, convenient in tests: from_rows({{1, 2}, {3, 4}}).
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const auto r = static_cast<Index>(rows.size());
    const Index c = r > 0 ? static_cast<Index>(rows.begin()->size()) : 0;
    check_dims(r, c);
    Eigen::MatrixXd m(r, c);
    Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Index>(row.size()) != c) throw ShapeError("ragged row literal");
      Index j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return DenseMatrix(std::move(m));
  }

  static DenseMatrix identity(Index n) {
    check_dims(n, n);
    return DenseMatrix(Eigen::MatrixXd::Identity(n, n));
  }

  Index rows() const noexcept { return data_.rows(); }
  Index cols() const noexcept { return data_.cols(); }
  double operator()(Index i, Index j) const { return data_(i, j); }

  std::span<const double> col(Index j) const {
    return {data_.data() + j * rows(), static_cast<std::size_t>(rows())};
  }
  const Eigen::MatrixXd& eigen() const noexcept { return data_; }
  double frobenius_norm() const { return data_.norm(); }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::equal(a.data_.data(), a.data_.data() + a.data_.size(), b.data_.data());
  }

 private:
  static void check_dims(Index rows, Index cols) {
    if (rows < 1 || cols < 1) {
      throw ShapeError("dense matrix needs at least one row and column, got " + detail::dims(rows, cols));
    }
  }
  void check_finite() const {
    if (!data_.allFinite()) throw SpecError("dense matrix entries must be finite");
  }

  Eigen::MatrixXd data_;
};

// ---------------------------------------------------------------------------
// SparseMatrix (compressed rows)

struct Triplet {
  Index row;
  Index col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix(Index rows, Index cols, std::vector<Index> row_ptr, std::vector<Index> col_idx,
               std::vector<double> values)
      : rows_(rows),
        cols_(cols),
        row_ptr_(std::move(row_ptr)),
        col_idx_(std::move(col_idx)),
        values_(std::move(values)) {
    validate();
  }

  /// Sorts entries and sums duplicates.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
        throw ShapeError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                         ") outside " + detail::dims(rows, cols));
      }
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Index> row_ptr(static_cast<std::size_t>(std::max<Index>(rows, 0)) + 1, 0);
    std::vector<Index> col_idx;
    std::vector<double> values;
    col_idx.reserve(entries.size());
    values.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& t = entries[k];
      if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
        values.back() += t.value;
        continue;
      }
      col_idx.push_back(t.col);
      values.push_back(t.value);
      ++row_ptr[static_cast<std::size_t>(t.row) + 1];
    }
    for (std::size_t i = 1; i < row_ptr.size(); ++i) row_ptr[i] += row_ptr[i - 1];
    return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
  }

  static SparseMatrix from_dense(const DenseMatrix& dense) {
    std::vector<Triplet> entries;
    for (Index j = 0; j < dense.cols(); ++j) {
      for (Index i = 0; i < dense.rows(); ++i) {
        if (dense(i, j) != 0.0) entries.push_back({i, j, dense(i, j)});
      }
    }
    return from_triplets(dense.rows(), dense.cols(), std::move(entries));
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_ptr() const noexcept { return row_ptr_; }
  std::span<const Index> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  DenseMatrix to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows_, cols_);
    for (Index i = 0; i < rows_; ++i) {
      for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) m(i, col_idx_[k]) = values_[k];
    }
    return DenseMatrix(std::move(m));
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

 private:
  void validate() const {
    if (rows_ < 1 || cols_ < 1) {
      throw ShapeError("sparse matrix needs at least one row and column, got " + detail::dims(rows_, cols_));
    }
    if (static_cast<Index>(row_ptr_.size()) != rows_ + 1) throw ShapeError("row pointer length must be rows + 1");
    if (col_idx_.size() != values_.size()) throw ShapeError("column index and value arrays differ in length");
    if (row_ptr_.front() != 0 || row_ptr_.back() != nnz()) {
      throw ShapeError("row pointers must start at 0 and end at nnz");
    }
    for (Index i = 0; i < rows_; ++i) {
      if (row_ptr_[i + 1] < row_ptr_[i]) throw ShapeError("row pointers must be nondecreasing");
      for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const Index c = col_idx_[k];
        if (c < 0 || c >= cols_) throw ShapeError("column index out of range in row " + std::to_string(i));
        if (k > row_ptr_[i] && col_idx_[k - 1] >= c) {
          throw ShapeError("column indices must be strictly increasing in row " + std::to_string(i));
        }
      }
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw SpecError("sparse matrix values must be finite");
    }
  }

  Index rows_;
  Index cols_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

template <class M>
concept MatrixOperand = std::same_as<M, DenseMatrix> || std::same_as<M, SparseMatrix>;

// ---------------------------------------------------------------------------
// Raw kernels on Eigen vectors. No validation; callers check shapes once.

namespace kernel {

inline void gemv(const DenseMatrix& a, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.noalias() = a.eigen() * x;
}

inline void gemv(const SparseMatrix& a, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.resize(a.rows());
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Index k = rp[i]; k < rp[i + 1]; ++k) s += va[k] * x[ci[k]];
    y[i] = s;
  }
}

inline void gemv_t(const DenseMatrix& a, const Eigen::VectorXd& y, Eigen::VectorXd& x) {
  x.noalias() = a.eigen().transpose() * y;
}

inline void gemv_t(const SparseMatrix& a, const Eigen::VectorXd& y, Eigen::VectorXd& x) {
  x = Eigen::VectorXd::Zero(a.cols());
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    const double yi = y[i];
    for (Index k = rp[i]; k < rp[i + 1]; ++k) x[ci[k]] += va[k] * yi;
  }
}

/// One pass over A computing u <- A v - alpha u and w <- A^T u.
///
/// Row blocks are sized to stay cache resident between the two products, so
/// the matrix streams from memory once per call instead of twice.
inline void normal_sweep(const DenseMatrix& a, const Eigen::VectorXd& v, double alpha,
                         Eigen::VectorXd& u, Eigen::VectorXd& w) {
  const Index m = a.rows();
  const Index n = a.cols();
  const Index block = std::clamp<Index>(Index{1 << 17} / n, 16, m);
  const auto& mat = a.eigen();
  w.setZero(n);
  Eigen::VectorXd t(block);
  for (Index r = 0; r < m; r += block) {
    const Index k = std::min(block, m - r);
    const auto rows = mat.middleRows(r, k);
    auto seg = u.segment(r, k);
    auto tk = t.head(k);
    tk.noalias() = rows * v;
    tk -= alpha * seg;
    seg = tk;
    w.noalias() += rows.transpose() * tk;
  }
}

inline void normal_sweep(const SparseMatrix& a, const Eigen::VectorXd& v, double alpha,
                         Eigen::VectorXd& u, Eigen::VectorXd& w) {
  w.setZero(a.cols());
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  for (Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Index k = rp[i]; k < rp[i + 1]; ++k) s += va[k] * v[ci[k]];
    s -= alpha * u[i];
    u[i] = s;
    for (Index k = rp[i]; k < rp[i + 1]; ++k) w[ci[k]] += va[k] * s;
  }
}

/// In-place solve with the upper triangle of r (or its transpose).
inline void trsv_upper(const Eigen::MatrixXd& r, Eigen::VectorXd& y, bool transposed) {
  if (transposed) {
    r.triangularView<Eigen::Upper>().transpose().solveInPlace(y);
  } else {
    r.triangularView<Eigen::Upper>().solveInPlace(y);
  }
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// Products

template <MatrixOperand M>
Vector matvec(const M& a, const Vector& x) {
  if (x.size() != a.cols()) {
    throw ShapeError("matvec: matrix " + detail::dims(a.rows(), a.cols()) + " times vector of length " +
                     std::to_string(x.size()));
  }
  Eigen::VectorXd y;
  kernel::gemv(a, x.eigen(), y);
  return Vector(std::move(y));
}

template <MatrixOperand M>
Vector matvec_transpose(const M& a, const Vector& y) {
  if (y.size() != a.rows()) {
    throw ShapeError("matvec_transpose: matrix " + detail::dims(a.rows(), a.cols()) +
                     " transposed times vector of length " + std::to_string(y.size()));
  }
  Eigen::VectorXd x;
  kernel::gemv_t(a, y.eigen(), x);
  return Vector(std::move(x));
}

/// ||b - A x||_2
template <MatrixOperand M>
double residual_norm(const M& a, const Vector& b, const Vector& x) {
  if (b.size() != a.rows() || x.size() != a.cols()) throw ShapeError("residual_norm: dimension mismatch");
  Eigen::VectorXd ax;
  kernel::gemv(a, x.eigen(), ax);
  return (b.eigen() - ax).norm();
}

// ---------------------------------------------------------------------------
// QR and triangular solves

struct QRFactors {
  DenseMatrix q;  // rows x n, orthonormal columns
  DenseMatrix r;  // n x n, upper triangular with nonnegative diagonal
};

/// Relative pivot threshold below which a QR diagonal entry counts as zero.
inline constexpr double kRankTolerance = 1e-14;

namespace detail {

struct RawQR {
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
};

/// Householder QR computed in place on `m` (which is consumed).
inline RawQR householder_qr(Eigen::MatrixXd& m, bool want_q) {
  const Index rows = m.rows();
  const Index n = m.cols();
  if (rows < n) {
    throw ShapeError("economy_qr needs rows >= cols, got " + dims(rows, n));
  }
  const double scale = m.norm();
  Eigen::HouseholderQR<Eigen::Ref<Eigen::MatrixXd>> qr(m);

  RawQR out;
  out.r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    const double pivot = std::abs(out.r(i, i));
    if (pivot == 0.0 || !(pivot >= kRankTolerance * scale)) {
      throw SingularFactorError("matrix is numerically rank deficient at column " + std::to_string(i) +
                                    " (|R_ii| = " + std::to_string(std::abs(out.r(i, i))) + ")",
                                i);
    }
  }
  if (want_q) {
    out.q = Eigen::MatrixXd::Identity(rows, n);
    qr.householderQ().applyThisOnTheLeft(out.q);
  }
  for (Index i = 0; i < n; ++i) {
    if (out.r(i, i) < 0.0) {
      out.r.row(i) *= -1.0;
      if (want_q) out.q.col(i) *= -1.0;
    }
  }
  return out;
}

}  // namespace detail

/// Thin Householder QR: M = QR with Q (rows x n) orthonormal and diag(R) >= 0.
///
/// Throws SingularFactorError naming the first column whose pivot falls below
/// 1e-14 * ||M||_F.
inline QRFactors economy_qr(const DenseMatrix& m) {
  Eigen::MatrixXd work = m.eigen();
  auto raw = detail::householder_qr(work, true);
  return {DenseMatrix(std::move(raw.q)), DenseMatrix(std::move(raw.r))};
}

inline void check_triangular_factor(const DenseMatrix& r) {
  if (r.rows() != r.cols()) throw ShapeError("triangular factor must be square, got " + detail::dims(r.rows(), r.cols()));
  for (Index i = 0; i < r.rows(); ++i) {
    if (r(i, i) == 0.0) {
      throw SingularFactorError("triangular factor has a zero diagonal entry at column " + std::to_string(i), i);
    }
  }
}

/// Solves R z = y, or R^T z = y when `transposed`. Only the upper triangle of R
/// is read.
inline Vector solve_triangular(const DenseMatrix& r, const Vector& y, bool transposed = false) {
  check_triangular_factor(r);
  if (y.size() != r.rows()) {
    throw ShapeError("solve_triangular: factor is " + detail::dims(r.rows(), r.cols()) + ", rhs has length " +
                     std::to_string(y.size()));
  }
  Eigen::VectorXd z = y.eigen();
  kernel::trsv_upper(r.eigen(), z, transposed);
  return Vector(std::move(z));
}

/// Least-squares minimizer of ||Ax - b|| via x = R^{-1} Q^T b with the economy
/// QR of A itself. Serves as the reference solution and as the direct method.
inline Vector normal_equations_oracle(const DenseMatrix& a, const Vector& b) {
  if (b.size() != a.rows()) {
    throw ShapeError("oracle: matrix " + detail::dims(a.rows(), a.cols()) + ", rhs length " + std::to_string(b.size()));
  }
  const auto f = economy_qr(a);
  Eigen::VectorXd z = f.q.eigen().transpose() * b.eigen();
  kernel::trsv_upper(f.r.eigen(), z, false);
  return Vector(std::move(z));
}

/// All singular values of M, descending. Test-scale only.
inline Eigen::VectorXd singular_values(const DenseMatrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.eigen());
  return svd.singularValues();
}

/// sigma_max / sigma_min from a full SVD. Returns +inf when sigma_min is zero.
inline double spectral_condition_number(const DenseMatrix& m) {
  if (m.rows() < m.cols()) {
    throw ShapeError("spectral_condition_number needs rows >= cols, got " + detail::dims(m.rows(), m.cols()));
  }
  const Eigen::VectorXd s = singular_values(m);
  const double smin = s[s.size() - 1];
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / smin;
}

}  // namespace sketchls
