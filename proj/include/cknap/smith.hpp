#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cknap/int_matrix.hpp"

namespace cknap {

/// Thrown when an exact computation exceeds a caller-imposed size budget.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P * A * Q = D with P, Q unimodular and D = diag(d_1, ..., d_r, 0, ...),
/// d_i > 0 and d_i | d_{i+1}.
struct SNFDecomposition {
  IntMatrix D;
  IntMatrix P;
  IntMatrix Q;
  std::size_t rank = 0;
  IntVector divisors;
};

struct SnfOptions {
  /// Abort with ResourceLimitError once any working entry exceeds this many bits (0 = unlimited).
  std::size_t max_entry_bits = 0;
};

/// Homogeneous-plus-particular description of all integer solutions of A x = b.
struct GeneralSolution {
  IntVector particular;
  std::vector<IntVector> free_basis;
  std::size_t free_count() const noexcept { return free_basis.size(); }
};

namespace detail {

// Quotient of a / b rounded to nearest, so the remainder has |r| <= |b| / 2.
inline Integer nearest_quotient(const Integer& a, const Integer& b) {
  if (sgn(b) < 0) return nearest_quotient(-a, -b);
  Integer num = 2 * a + b, den = 2 * b, q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return q;
}

struct SnfWorkspace {
  IntMatrix D, P, Q;

  void row_swap(std::size_t a, std::size_t b) {
    D.swap_rows(a, b);
    P.swap_rows(a, b);
  }
  void col_swap(std::size_t a, std::size_t b) {
    D.swap_cols(a, b);
    Q.swap_cols(a, b);
  }
  void row_addmul(std::size_t dst, std::size_t src, const Integer& f) {
    D.add_row_multiple(dst, src, f);
    P.add_row_multiple(dst, src, f);
  }
  void col_addmul(std::size_t dst, std::size_t src, const Integer& f) {
    D.add_col_multiple(dst, src, f);
    Q.add_col_multiple(dst, src, f);
  }

  // Move the smallest nonzero entry of the trailing block starting at (s, s) to (s, s).
  bool place_min_pivot(std::size_t s) {
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = s; i < D.rows(); ++i)
      for (std::size_t j = s; j < D.cols(); ++j) {
        const Integer& v = D(i, j);
        if (sgn(v) == 0) continue;
        if (!found || cmpabs(v, D(bi, bj)) < 0) {
          bi = i;
          bj = j;
          found = true;
        }
      }
    if (!found) return false;
    row_swap(s, bi);
    col_swap(s, bj);
    return true;
  }

  // Same, restricted to row s and column s.
  void place_min_pivot_cross(std::size_t s) {
    std::size_t bi = s, bj = s;
    for (std::size_t i = s + 1; i < D.rows(); ++i)
      if (sgn(D(i, s)) != 0 && cmpabs(D(i, s), D(bi, bj)) < 0) {
        bi = i;
        bj = s;
      }
    for (std::size_t j = s + 1; j < D.cols(); ++j)
      if (sgn(D(s, j)) != 0 && cmpabs(D(s, j), D(bi, bj)) < 0) {
        bi = s;
        bj = j;
      }
    row_swap(s, bi);
    col_swap(s, bj);
  }

  void check_budget(std::size_t s, std::size_t max_bits) const {
    if (max_bits == 0) return;
    for (std::size_t i = s; i < D.rows(); ++i)
      for (std::size_t j = s; j < D.cols(); ++j)
        if (bit_length(D(i, j)) > max_bits) throw ResourceLimitError("snf: entry size budget exceeded");
  }
};

}  // namespace detail

/// Smith normal form by elementary row/column reduction with smallest-magnitude pivots.
inline SNFDecomposition snf(const IntMatrix& A, const SnfOptions& opts = {}) {
  if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("snf: empty matrix");
  const std::size_t m = A.rows(), n = A.cols();
  detail::SnfWorkspace w{A, IntMatrix::identity(m), IntMatrix::identity(n)};

  std::size_t s = 0;
  for (; s < std::min(m, n); ++s) {
    if (!w.place_min_pivot(s)) break;
    for (;;) {
      bool clean = true;
      for (std::size_t i = s + 1; i < m; ++i) {
        if (sgn(w.D(i, s)) == 0) continue;
        w.row_addmul(i, s, -detail::nearest_quotient(w.D(i, s), w.D(s, s)));
        if (sgn(w.D(i, s)) != 0) clean = false;
      }
      for (std::size_t j = s + 1; j < n; ++j) {
        if (sgn(w.D(s, j)) == 0) continue;
        w.col_addmul(j, s, -detail::nearest_quotient(w.D(s, j), w.D(s, s)));
        if (sgn(w.D(s, j)) != 0) clean = false;
      }
      if (!clean) {
        w.place_min_pivot_cross(s);
        continue;
      }
      // Pivot must divide the whole trailing block; otherwise fold an offending row in and retry.
      std::size_t bad_row = m;
      for (std::size_t i = s + 1; i < m && bad_row == m; ++i)
        for (std::size_t j = s + 1; j < n; ++j)
          if (!mpz_divisible_p(w.D(i, j).get_mpz_t(), w.D(s, s).get_mpz_t())) {
            bad_row = i;
            break;
          }
      if (bad_row == m) break;
      w.row_addmul(s, bad_row, 1);
    }
    if (sgn(w.D(s, s)) < 0) {
      w.D.negate_row(s);
      w.P.negate_row(s);
    }
    w.check_budget(s, opts.max_entry_bits);
  }

  SNFDecomposition out{std::move(w.D), std::move(w.P), std::move(w.Q), s, {}};
  out.divisors.reserve(s);
  for (std::size_t i = 0; i < s; ++i) out.divisors.push_back(out.D(i, i));
  return out;
}

/// Basis of {x in Z^n : A x = 0}: the trailing n - rank columns of Q.
inline std::vector<IntVector> kernel_basis_from(const SNFDecomposition& d) {
  std::vector<IntVector> basis;
  for (std::size_t c = d.rank; c < d.Q.cols(); ++c) basis.push_back(d.Q.col_vector(c));
  return basis;
}

inline std::vector<IntVector> kernel_basis(const IntMatrix& A) { return kernel_basis_from(snf(A)); }

/// All integer solutions of A x = b, or nullopt when none exist.
inline std::optional<GeneralSolution> solve_integer_system(const IntMatrix& A, const IntVector& b) {
  if (b.size() != A.rows()) throw std::invalid_argument("solve_integer_system: b length != A.rows");
  const SNFDecomposition d = snf(A);
  const IntVector c = d.P * b;
  for (std::size_t i = d.rank; i < c.size(); ++i)
    if (sgn(c[i]) != 0) return std::nullopt;
  IntVector y(A.cols());
  for (std::size_t i = 0; i < d.rank; ++i) {
    if (!mpz_divisible_p(c[i].get_mpz_t(), d.divisors[i].get_mpz_t())) return std::nullopt;
    mpz_divexact(y[i].get_mpz_t(), c[i].get_mpz_t(), d.divisors[i].get_mpz_t());
  }
  return GeneralSolution{d.Q * y, kernel_basis_from(d)};
}

}  // namespace cknap
