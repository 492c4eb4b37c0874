#include "loos/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace loos {

namespace {

std::atomic<std::size_t> g_factorizations{0};

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(std::size_t pivot)
    : std::runtime_error("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
      pivot_(pivot) {}

std::size_t factorization_count() { return g_factorizations.load(); }
void reset_factorization_count() { g_factorizations.store(0); }

// ---------------------------------------------------------------- dense

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.front().size() : 0;
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    require(rows[i].size() == c, "from_rows: ragged rows");
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::without(std::size_t k) const {
  require(rows_ == cols_ && k < rows_, "without: bad index");
  DenseMatrix out(rows_ - 1, cols_ - 1);
  for (std::size_t i = 0, oi = 0; i < rows_; ++i) {
    if (i == k) continue;
    for (std::size_t j = 0, oj = 0; j < cols_; ++j) {
      if (j == k) continue;
      out(oi, oj++) = (*this)(i, j);
    }
    ++oi;
  }
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), "matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------- sparse

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries, bool symmetric) {
  for (const auto& t : entries)
    require(t.row < rows && t.col < cols, "from_triplets: index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::size_t> columns;
  std::vector<double> values;
  columns.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size();) {
    const auto r = entries[k].row;
    const auto c = entries[k].col;
    double v = 0.0;
    while (k < entries.size() && entries[k].row == r && entries[k].col == c) v += entries[k++].value;
    columns.push_back(c);
    values.push_back(v);
    ++offsets[r + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
  return from_csr(rows, cols, std::move(offsets), std::move(columns), std::move(values), symmetric);
}

SparseMatrix SparseMatrix::from_csr(std::size_t rows, std::size_t cols,
                                    std::vector<std::size_t> offsets,
                                    std::vector<std::size_t> columns, std::vector<double> values,
                                    bool symmetric) {
  require(offsets.size() == rows + 1 && offsets.front() == 0, "from_csr: bad offsets");
  require(offsets.back() == columns.size() && columns.size() == values.size(),
          "from_csr: offsets do not match entry count");
  for (std::size_t i = 0; i < rows; ++i) {
    require(offsets[i] <= offsets[i + 1], "from_csr: offsets must be monotone");
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      require(columns[k] < cols, "from_csr: column out of range");
      if (k > offsets[i]) require(columns[k - 1] < columns[k], "from_csr: columns must increase within a row");
    }
  }
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.offsets_ = std::move(offsets);
  m.columns_ = std::move(columns);
  m.values_ = std::move(values);
  if (symmetric) {
    require(rows == cols, "symmetric matrix must be square");
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = m.offsets_[i]; k < m.offsets_[i + 1]; ++k)
        if (m.at(m.columns_[k], i) != m.values_[k])
          throw std::invalid_argument("matrix flagged symmetric is not symmetric at (" +
                                      std::to_string(i) + ", " +
                                      std::to_string(m.columns_[k]) + ")");
    m.symmetric_ = true;
  }
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  const Vector ones(n, 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> diag) {
  const std::size_t n = diag.size();
  std::vector<std::size_t> offsets(n + 1), columns(n);
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] = i + 1, columns[i] = i;
  return from_csr(n, n, std::move(offsets), std::move(columns),
                  Vector(diag.begin(), diag.end()), true);
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
  const auto last = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - columns_.begin())];
}

Vector SparseMatrix::diagonal_values() const {
  Vector d(std::min(rows_, cols_));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

std::size_t SparseMatrix::bandwidth() const {
  std::size_t bw = 0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const std::size_t j = columns_[k];
      bw = std::max(bw, i > j ? i - j : j - i);
    }
  return bw;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) d(i, columns_[k]) = values_[k];
  return d;
}

SparseMatrix SparseMatrix::with_values(std::vector<double> values) const {
  require(values.size() == values_.size(), "with_values: wrong length");
  SparseMatrix m = *this;
  m.values_ = std::move(values);
  return m;
}

void SparseMatrix::write_text(std::ostream& out) const {
  out << rows_ << ' ' << cols_ << ' ' << nnz() << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      line.str("");
      line << i << ' ' << columns_[k] << ' ' << values_[k] << '\n';
      out << line.str();
    }
}

SparseMatrix SparseMatrix::read_text(std::istream& in, bool symmetric) {
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw std::runtime_error("sparse text: bad header");
  std::vector<Triplet> entries;
  entries.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    Triplet t{};
    if (!(in >> t.row >> t.col >> t.value))
      throw std::runtime_error("sparse text: truncated at entry " + std::to_string(k));
    entries.push_back(t);
  }
  return from_triplets(rows, cols, std::move(entries), symmetric);
}

SparseMatrix sparse_add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sparse_add: shape mismatch");
  std::vector<std::size_t> offsets(a.rows() + 1, 0), columns;
  Vector values;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t ka = a.offsets()[i], kb = b.offsets()[i];
    const std::size_t ea = a.offsets()[i + 1], eb = b.offsets()[i + 1];
    while (ka < ea || kb < eb) {
      const std::size_t ca = ka < ea ? a.columns()[ka] : a.cols();
      const std::size_t cb = kb < eb ? b.columns()[kb] : b.cols();
      if (ca == cb) {
        columns.push_back(ca);
        values.push_back(alpha * a.values()[ka++] + beta * b.values()[kb++]);
      } else if (ca < cb) {
        columns.push_back(ca);
        values.push_back(alpha * a.values()[ka++]);
      } else {
        columns.push_back(cb);
        values.push_back(beta * b.values()[kb++]);
      }
    }
    offsets[i + 1] = columns.size();
  }
  return SparseMatrix::from_csr(a.rows(), a.cols(), std::move(offsets), std::move(columns),
                                std::move(values), a.symmetric() && b.symmetric());
}

SparseMatrix symmetrized(const SparseMatrix& m) {
  require(m.rows() == m.cols(), "symmetrized: matrix must be square");
  std::vector<Triplet> t;
  t.reserve(2 * m.nnz());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = m.offsets()[i]; k < m.offsets()[i + 1]; ++k) {
      t.push_back({i, m.columns()[k], 0.5 * m.values()[k]});
      t.push_back({m.columns()[k], i, 0.5 * m.values()[k]});
    }
  // Each entry becomes 0.5*a + 0.5*b summed in (row, col) order; the mirror
  // sums the same two terms, and addition is commutative, so the result is
  // exactly symmetric.
  return SparseMatrix::from_triplets(m.rows(), m.cols(), std::move(t), true);
}

SparseMatrix sparse_triple_diag(const SparseMatrix& a, std::span<const double> d,
                                const SparseMatrix& b) {
  require(a.cols() == d.size() && d.size() == b.rows(), "sparse_triple_diag: shape mismatch");
  std::vector<std::size_t> offsets(a.rows() + 1, 0), columns;
  Vector values;
  Vector acc(b.cols(), 0.0);
  std::vector<char> used(b.cols(), 0);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    touched.clear();
    for (std::size_t ka = a.offsets()[i]; ka < a.offsets()[i + 1]; ++ka) {
      const std::size_t k = a.columns()[ka];
      const double w = a.values()[ka] * d[k];
      for (std::size_t kb = b.offsets()[k]; kb < b.offsets()[k + 1]; ++kb) {
        const std::size_t j = b.columns()[kb];
        if (!used[j]) used[j] = 1, touched.push_back(j);
        acc[j] += w * b.values()[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t j : touched) {
      columns.push_back(j);
      values.push_back(acc[j]);
      acc[j] = 0.0;
      used[j] = 0;
    }
    offsets[i + 1] = columns.size();
  }
  return SparseMatrix::from_csr(a.rows(), b.cols(), std::move(offsets), std::move(columns),
                                std::move(values));
}

Vector spmv(const SparseMatrix& m, std::span<const double> x) {
  require(m.cols() == x.size(), "spmv: dimension mismatch");
  Vector y(m.rows());
  const auto off = m.offsets();
  const auto col = m.columns();
  const auto val = m.values();
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(static) if (rows > 8192)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
  return y;
}

namespace serial {
Vector spmv(const SparseMatrix& m, std::span<const double> x) {
  require(m.cols() == x.size(), "spmv: dimension mismatch");
  Vector y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = m.offsets()[i]; k < m.offsets()[i + 1]; ++k)
      y[i] += m.values()[k] * x[m.columns()[k]];
  return y;
}
}  // namespace serial

// ---------------------------------------------------------------- Cholesky

CholeskyFactor cholesky(const DenseMatrix& m) {
  require(m.rows() == m.cols(), "cholesky: matrix must be square");
  ++g_factorizations;
  const std::size_t n = m.rows();
  DenseMatrix l(n, n);
  double log_det = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw NotPositiveDefinite(j);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    log_det += 2.0 * std::log(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      const auto li = l.row(i);
      const auto lj = l.row(j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      l(i, j) = s / ljj;
    }
  }
  return {std::move(l), log_det};
}

Vector CholeskyFactor::forward(std::span<const double> b) const {
  const std::size_t n = size();
  require(b.size() == n, "forward: dimension mismatch");
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * x[k];
    x[i] = s / lower_(i, i);
  }
  return x;
}

Vector CholeskyFactor::backward(std::span<const double> b) const {
  const std::size_t n = size();
  require(b.size() == n, "backward: dimension mismatch");
  Vector x(b.begin(), b.end());
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= lower_(k, ii) * x[k];
    x[ii] = s / lower_(ii, ii);
  }
  return x;
}

Vector CholeskyFactor::solve(std::span<const double> b) const { return backward(forward(b)); }

DenseMatrix CholeskyFactor::inverse() const {
  const std::size_t n = size();
  DenseMatrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = solve(e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

BandCholesky::BandCholesky(const SparseMatrix& m) : n_(m.rows()), bw_(m.bandwidth()) {
  require(m.rows() == m.cols(), "BandCholesky: matrix must be square");
  ++g_factorizations;
  const std::size_t w = bw_ + 1;
  band_.assign(n_ * w, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = m.offsets()[i]; k < m.offsets()[i + 1]; ++k) {
      const std::size_t j = m.columns()[k];
      if (j <= i) band_[j * w + (i - j)] = m.values()[k];
    }
  for (std::size_t j = 0; j < n_; ++j) {
    double* col = band_.data() + j * w;
    const double d = col[0];
    if (!(d > 0.0)) throw NotPositiveDefinite(j);
    const double ljj = std::sqrt(d);
    col[0] = ljj;
    log_det_ += 2.0 * std::log(ljj);
    const std::size_t kmax = std::min(bw_, n_ - 1 - j);
    const double inv = 1.0 / ljj;
    for (std::size_t k = 1; k <= kmax; ++k) col[k] *= inv;
    for (std::size_t k = 1; k <= kmax; ++k) {
      const double v = col[k];
      if (v == 0.0) continue;
      double* target = band_.data() + (j + k) * w;
      for (std::size_t i = k; i <= kmax; ++i) target[i - k] -= col[i] * v;
    }
  }
}

Vector BandCholesky::forward(std::span<const double> b) const {
  require(b.size() == n_, "forward: dimension mismatch");
  Vector x(b.begin(), b.end());
  const std::size_t w = bw_ + 1;
  for (std::size_t j = 0; j < n_; ++j) {
    const double* col = band_.data() + j * w;
    const double xj = x[j] / col[0];
    x[j] = xj;
    const std::size_t kmax = std::min(bw_, n_ - 1 - j);
    for (std::size_t k = 1; k <= kmax; ++k) x[j + k] -= col[k] * xj;
  }
  return x;
}

Vector BandCholesky::backward(std::span<const double> b) const {
  require(b.size() == n_, "backward: dimension mismatch");
  Vector x(b.begin(), b.end());
  const std::size_t w = bw_ + 1;
  for (std::size_t j = n_; j-- > 0;) {
    const double* col = band_.data() + j * w;
    const std::size_t kmax = std::min(bw_, n_ - 1 - j);
    double s = x[j];
    for (std::size_t k = 1; k <= kmax; ++k) s -= col[k] * x[j + k];
    x[j] = s / col[0];
  }
  return x;
}

Vector BandCholesky::solve(std::span<const double> b) const { return backward(forward(b)); }

double BandCholesky::inverse_diagonal(std::size_t j) const {
  require(j < n_, "inverse_diagonal: index out of range");
  const std::size_t w = bw_ + 1;
  Vector x(n_ - j, 0.0);
  x[0] = 1.0;
  double sum = 0.0;
  for (std::size_t jj = j; jj < n_; ++jj) {
    const double* col = band_.data() + jj * w;
    const double v = x[jj - j] / col[0];
    sum += v * v;
    const std::size_t kmax = std::min(bw_, n_ - 1 - jj);
    for (std::size_t k = 1; k <= kmax; ++k) x[jj + k - j] -= col[k] * v;
  }
  return sum;
}

// ---------------------------------------------------------------- leave-one-out

DenseMatrix loo_inverse_update(const DenseMatrix& sigma_inv, const DenseMatrix& sigma,
                               std::size_t i) {
  const std::size_t n = sigma.rows();
  require(sigma.cols() == n && sigma_inv.rows() == n && sigma_inv.cols() == n,
          "loo_inverse_update: shapes differ");
  require(i < n, "loo_inverse_update: index out of range");
  if (n == 1) throw DegenerateLeaveOneOut("cannot leave out the only variable");

  // f = column i of Sigma with entry i zeroed; W = Sigma^{-1} [e_i f].
  Vector f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = k == i ? 0.0 : sigma(k, i);
  Vector w0(n), w1 = matvec(sigma_inv, f);
  for (std::size_t k = 0; k < n; ++k) w0[k] = sigma_inv(k, i);

  // Capacitance I - V Sigma^{-1} U with V = [f e_i]^T.
  double f_w0 = 0.0, f_w1 = 0.0;
  for (std::size_t k = 0; k < n; ++k) f_w0 += f[k] * w0[k], f_w1 += f[k] * w1[k];
  const double c00 = 1.0 - f_w0, c01 = -f_w1, c10 = -w0[i], c11 = 1.0 - w1[i];
  const double det = c00 * c11 - c01 * c10;
  const double scale = std::max({std::abs(c00 * c11), std::abs(c01 * c10), 1.0});
  if (!std::isfinite(det) || std::abs(det) <= 1e-13 * scale)
    throw DegenerateLeaveOneOut("degenerate leave-one-out: singular 2x2 capacitance at index " +
                                std::to_string(i));
  const double m00 = c11 / det, m01 = -c01 / det, m10 = -c10 / det, m11 = c00 / det;

  // (Sigma - U V)^{-1} = S^{-1} + W M V S^{-1}; rows of V S^{-1} are w1^T and w0^T.
  DenseMatrix out(n - 1, n - 1);
  for (std::size_t r = 0, orow = 0; r < n; ++r) {
    if (r == i) continue;
    const double a0 = w0[r] * m00 + w1[r] * m10;
    const double a1 = w0[r] * m01 + w1[r] * m11;
    for (std::size_t c = 0, ocol = 0; c < n; ++c) {
      if (c == i) continue;
      out(orow, ocol++) = sigma_inv(r, c) + a0 * w1[c] + a1 * w0[c];
    }
    ++orow;
  }
  return out;
}

GaussPredictive conditional_gauss_dense(std::span<const double> mu, const DenseMatrix& sigma,
                                        std::span<const double> y, std::size_t i) {
  const std::size_t n = sigma.rows();
  require(sigma.cols() == n && mu.size() == n && y.size() == n,
          "conditional_gauss_dense: dimension mismatch");
  require(i < n, "conditional_gauss_dense: index out of range");
  if (n == 1) return {mu[0], std::sqrt(sigma(0, 0))};
  const auto factor = cholesky(sigma.without(i));
  Vector cross, resid;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    cross.push_back(sigma(k, i));
    resid.push_back(y[k] - mu[k]);
  }
  const Vector w = factor.solve(cross);
  double mean = mu[i], var = sigma(i, i);
  for (std::size_t k = 0; k < w.size(); ++k) {
    mean += w[k] * resid[k];
    var -= w[k] * cross[k];
  }
  if (!(var > 0.0)) throw NotPositiveDefinite(i);
  return {mean, std::sqrt(var)};
}

}  // namespace loos
