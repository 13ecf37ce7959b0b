#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cknap {

using Integer = mpz_class;
using Rational = mpq_class;
using IntVector = std::vector<Integer>;
using RatVector = std::vector<Rational>;

/// Dense row-major matrix of arbitrary-precision integers.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  IntMatrix(std::initializer_list<std::initializer_list<long>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw std::invalid_argument("IntMatrix: ragged initializer");
      for (long v : row) data_.emplace_back(v);
    }
  }

  static IntMatrix identity(std::size_t n) {
    IntMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  static IntMatrix from_rows(const std::vector<IntVector>& rows) {
    if (rows.empty()) return {};
    IntMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) throw std::invalid_argument("IntMatrix: ragged rows");
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
  }

  static IntMatrix column(const IntVector& v) {
    IntMatrix m(v.size(), 1);
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  Integer& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Integer& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Integer> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Integer> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  IntVector row_vector(std::size_t r) const { return {row(r).begin(), row(r).end()}; }
  IntVector col_vector(std::size_t c) const {
    IntVector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }
  void set_column(std::size_t c, std::span<const Integer> v) {
    if (v.size() != rows_) throw std::invalid_argument("IntMatrix::set_column: length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
  }

  const std::vector<Integer>& entries() const noexcept { return data_; }
  std::vector<Integer>& entries() noexcept { return data_; }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t c = 0; c < cols_; ++c) std::swap((*this)(a, c), (*this)(b, c));
  }
  void swap_cols(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t r = 0; r < rows_; ++r) std::swap((*this)(r, a), (*this)(r, b));
  }
  // row[dst] += factor * row[src]
  void add_row_multiple(std::size_t dst, std::size_t src, const Integer& factor) {
    if (sgn(factor) == 0) return;
    for (std::size_t c = 0; c < cols_; ++c) mpz_addmul((*this)(dst, c).get_mpz_t(), (*this)(src, c).get_mpz_t(), factor.get_mpz_t());
  }
  // col[dst] += factor * col[src]
  void add_col_multiple(std::size_t dst, std::size_t src, const Integer& factor) {
    if (sgn(factor) == 0) return;
    for (std::size_t r = 0; r < rows_; ++r) mpz_addmul((*this)(r, dst).get_mpz_t(), (*this)(r, src).get_mpz_t(), factor.get_mpz_t());
  }
  void negate_row(std::size_t r) {
    for (auto& v : row(r)) v = -v;
  }
  void negate_col(std::size_t c) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = -(*this)(r, c);
  }

  IntMatrix transpose() const {
    IntMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  /// Columns [first, first + count) as a new matrix.
  IntMatrix col_block(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw std::out_of_range("IntMatrix::col_block");
    IntMatrix b(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < count; ++c) b(r, c) = (*this)(r, first + c);
    return b;
  }

  bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](const Integer& v) { return sgn(v) == 0; });
  }

  friend bool operator==(const IntMatrix& a, const IntMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Integer> data_;
};

inline IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("IntMatrix multiply: dimension mismatch");
  IntMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Integer& aik = a(i, k);
      if (sgn(aik) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) mpz_addmul(out(i, j).get_mpz_t(), aik.get_mpz_t(), b(k, j).get_mpz_t());
    }
  return out;
}

inline IntVector operator*(const IntMatrix& a, std::span<const Integer> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("IntMatrix * vector: dimension mismatch");
  IntVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    for (std::size_t k = 0; k < x.size(); ++k) mpz_addmul(out[i].get_mpz_t(), row[k].get_mpz_t(), x[k].get_mpz_t());
  }
  return out;
}

inline IntVector operator*(const IntMatrix& a, const IntVector& x) { return a * std::span<const Integer>(x); }

inline Integer dot(std::span<const Integer> a, std::span<const Integer> b) {
  Integer s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mpz_addmul(s.get_mpz_t(), a[i].get_mpz_t(), b[i].get_mpz_t());
  return s;
}

inline IntVector add(std::span<const Integer> a, std::span<const Integer> b) {
  IntVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline IntVector sub(std::span<const Integer> a, std::span<const Integer> b) {
  IntVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline IntVector scale_add(std::span<const Integer> y, const Integer& j, std::span<const Integer> b) {
  IntVector out(y.begin(), y.end());
  for (std::size_t i = 0; i < y.size(); ++i) mpz_addmul(out[i].get_mpz_t(), j.get_mpz_t(), b[i].get_mpz_t());
  return out;
}

/// Exact determinant by fraction-free (Bareiss) elimination.
inline Integer determinant(IntMatrix m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("determinant: matrix not square");
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  Integer prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (sgn(m(k, k)) == 0) {
      std::size_t p = k + 1;
      while (p < n && sgn(m(p, k)) == 0) ++p;
      if (p == n) return 0;
      m.swap_rows(k, p);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) {
        m(i, j) = m(i, j) * m(k, k) - m(i, k) * m(k, j);
        mpz_divexact(m(i, j).get_mpz_t(), m(i, j).get_mpz_t(), prev.get_mpz_t());
      }
    prev = m(k, k);
  }
  return sign * m(n - 1, n - 1);
}

inline int cmpabs(const Integer& a, const Integer& b) { return mpz_cmpabs(a.get_mpz_t(), b.get_mpz_t()); }

/// Number of bits of |v| (0 for v = 0).
inline std::size_t bit_length(const Integer& v) {
  return sgn(v) == 0 ? 0 : mpz_sizeinbase(v.get_mpz_t(), 2);
}

inline std::size_t max_bit_length(const IntMatrix& m) {
  std::size_t b = 0;
  for (const auto& v : m.entries()) b = std::max(b, bit_length(v));
  return b;
}

/// 2^e as an exact integer.
inline Integer pow2(std::size_t e) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
  return r;
}

/// Nearest integer to q; exact halves round toward positive infinity.
inline Integer round_half_up(const Rational& q) {
  // floor(q + 1/2) = floor((2 num + den) / (2 den))
  Integer num = 2 * q.get_num() + q.get_den();
  Integer den = 2 * q.get_den();
  Integer out;
  mpz_fdiv_q(out.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const IntMatrix& m) {
  os << '[';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << (r ? " [" : "[");
    for (std::size_t c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
    os << ']';
  }
  return os << ']';
}

}  // namespace cknap
