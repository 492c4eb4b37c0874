#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "loos/scoring.hpp"

namespace loos {

using Vector = std::vector<double>;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot);
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

class DegenerateLeaveOneOut : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const { return data_; }

  DenseMatrix transpose() const;
  /// Drops row i and column i.
  DenseMatrix without(std::size_t i) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
Vector matvec(const DenseMatrix& a, std::span<const double> x);
double max_abs(const DenseMatrix& a);

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-row sparse matrix. Immutable after construction. Symmetric
/// matrices are stored with both triangles.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Duplicate (row, col) entries are summed. With `symmetric` set, the
  /// resulting pattern and values are checked for exact symmetry.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries, bool symmetric = false);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> diag);
  /// Validates the compressed layout (monotone offsets, strictly increasing
  /// columns per row).
  static SparseMatrix from_csr(std::size_t rows, std::size_t cols,
                               std::vector<std::size_t> offsets,
                               std::vector<std::size_t> columns, std::vector<double> values,
                               bool symmetric = false);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  bool symmetric() const { return symmetric_; }

  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const std::size_t> columns() const { return columns_; }
  std::span<const double> values() const { return values_; }

  /// Stored value at (i, j), zero when absent.
  double at(std::size_t i, std::size_t j) const;
  Vector diagonal_values() const;
  /// Largest |i - j| over stored entries.
  std::size_t bandwidth() const;
  DenseMatrix to_dense() const;

  /// Same pattern and symmetry flag, new values (length nnz). Callers
  /// keeping the flag must supply symmetric values.
  SparseMatrix with_values(std::vector<double> values) const;

  /// Plain-text exchange: "rows cols nnz" then "i j value" lines, 0-based.
  void write_text(std::ostream& out) const;
  static SparseMatrix read_text(std::istream& in, bool symmetric = false);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  bool symmetric_ = false;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

/// (M + M^T) / 2 on the union pattern, flagged symmetric.
SparseMatrix symmetrized(const SparseMatrix& m);

SparseMatrix sparse_add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta);
/// Product a * diag(d) * b.
SparseMatrix sparse_triple_diag(const SparseMatrix& a, std::span<const double> d,
                                const SparseMatrix& b);

/// y = M x. OpenMP-parallel over rows.
Vector spmv(const SparseMatrix& m, std::span<const double> x);

/// Lower-triangular factor with M = L L^T.
class CholeskyFactor {
 public:
  CholeskyFactor(DenseMatrix lower, double log_det)
      : lower_(std::move(lower)), log_det_(log_det) {}

  const DenseMatrix& lower() const { return lower_; }
  double log_det() const { return log_det_; }
  std::size_t size() const { return lower_.rows(); }

  Vector solve(std::span<const double> b) const;
  /// Solves L x = b.
  Vector forward(std::span<const double> b) const;
  /// Solves L^T x = b.
  Vector backward(std::span<const double> b) const;
  DenseMatrix inverse() const;

 private:
  DenseMatrix lower_;
  double log_det_;
};

CholeskyFactor cholesky(const DenseMatrix& m);

/// Cholesky factor of a symmetric positive definite band matrix, kept in
/// band storage. Without pivoting or reordering the factor of a band matrix
/// has no fill outside the band, so this is the dense factor stored compactly.
class BandCholesky {
 public:
  explicit BandCholesky(const SparseMatrix& m);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }
  double log_det() const { return log_det_; }

  Vector forward(std::span<const double> b) const;
  Vector backward(std::span<const double> b) const;
  Vector solve(std::span<const double> b) const;
  /// (M^{-1})_{jj} = ||L^{-1} e_j||^2, by a forward solve started at j.
  double inverse_diagonal(std::size_t j) const;

 private:
  // Column j holds L(j + k, j) at band_[j * (bw_ + 1) + k], k = 0..bw_.
  double l(std::size_t i, std::size_t j) const { return band_[j * (bw_ + 1) + (i - j)]; }

  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> band_;
  double log_det_ = 0.0;
};

/// Counts dense and band factorizations performed in this process.
std::size_t factorization_count();
void reset_factorization_count();

/// Inverse of Sigma with row/column i removed, from Sigma^{-1} by the
/// Woodbury identity with U = [e_i f_i], V = [f_i e_i]^T.
DenseMatrix loo_inverse_update(const DenseMatrix& sigma_inv, const DenseMatrix& sigma,
                               std::size_t i);

/// Conditional law of X_i given X_{-i} = y_{-i} for X ~ N(mu, Sigma), by the
/// covariance-form formula with an explicit (n-1)x(n-1) solve.
GaussPredictive conditional_gauss_dense(std::span<const double> mu, const DenseMatrix& sigma,
                                        std::span<const double> y, std::size_t i);

namespace serial {
Vector spmv(const SparseMatrix& m, std::span<const double> x);
}  // namespace serial

}  // namespace loos
