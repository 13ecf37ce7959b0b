#pragma once

#include <optional>
#include <stdexcept>

#include "cknap/int_matrix.hpp"
#include "cknap/lll.hpp"
#include "cknap/smith.hpp"

namespace cknap {

class NoIntegerSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scaling constants of the embedding lattice. Each retry squares both.
struct EmbeddingParams {
  Integer N1;
  Integer N2;
  std::size_t max_retries = 5;
};

inline std::size_t ceil_log2(std::size_t n) {
  std::size_t e = 0;
  while ((std::size_t{1} << e) < n) ++e;
  return e;
}

/// N1 = 2^(R+2), N2 = 2^(2(R + ceil(log2 n))). With no hint, R is the bit
/// length of the largest entry of (A | d).
inline EmbeddingParams default_embedding_params(const IntMatrix& A, const IntVector& d, std::optional<std::size_t> bit_hint = {}) {
  std::size_t R = 0;
  if (bit_hint) {
    R = *bit_hint;
  } else {
    R = max_bit_length(A);
    for (const auto& v : d) R = std::max(R, bit_length(v));
  }
  R = std::max<std::size_t>(R, 1);
  return {pow2(R + 2), pow2(2 * (R + ceil_log2(A.cols()))), 5};
}

/// The (n+1) x (n+m+1) embedding basis
///   [ I_n   0   N2 A^T ]
///   [ 0     N1  -N2 d  ]
inline IntMatrix embedding_basis(const IntMatrix& A, const IntVector& d, const Integer& N1, const Integer& N2) {
  const std::size_t m = A.rows(), n = A.cols();
  IntMatrix B(n + 1, n + m + 1);
  for (std::size_t i = 0; i < n; ++i) {
    B(i, i) = 1;
    for (std::size_t r = 0; r < m; ++r) B(i, n + 1 + r) = N2 * A(r, i);
  }
  B(n, n) = N1;
  for (std::size_t r = 0; r < m; ++r) B(n, n + 1 + r) = -N2 * d[r];
  return B;
}

namespace detail {

// Unimodular row operations on B that leave the trailing `tail` columns in
// echelon form. Returns the rows with an all-zero tail followed by the pivot rows.
inline IntMatrix eliminate_tail(IntMatrix B, std::size_t tail, std::size_t* zero_tail_rows) {
  const std::size_t rows = B.rows(), head = B.cols() - tail;
  std::vector<bool> used(rows, false);
  std::vector<std::size_t> pivots;
  for (std::size_t c = head; c < B.cols(); ++c) {
    for (;;) {
      std::size_t best = rows;
      for (std::size_t r = 0; r < rows; ++r)
        if (!used[r] && sgn(B(r, c)) != 0 && (best == rows || cmpabs(B(r, c), B(best, c)) < 0)) best = r;
      if (best == rows) break;
      bool clean = true;
      for (std::size_t r = 0; r < rows; ++r) {
        if (used[r] || r == best || sgn(B(r, c)) == 0) continue;
        Integer q = B(r, c) / B(best, c);
        B.add_row_multiple(r, best, -q);
        if (sgn(B(r, c)) != 0) clean = false;
      }
      if (clean) {
        used[best] = true;
        pivots.push_back(best);
        break;
      }
    }
  }
  IntMatrix out(rows, B.cols());
  std::size_t next = 0;
  for (std::size_t r = 0; r < rows; ++r)
    if (!used[r]) std::copy(B.row(r).begin(), B.row(r).end(), out.row(next++).begin());
  *zero_tail_rows = next;
  for (std::size_t r : pivots) std::copy(B.row(r).begin(), B.row(r).end(), out.row(next++).begin());
  return out;
}

// LLL of the full embedding lattice. The zero-tail block is reduced on its
// own first so the final exact pass only has to place the pivot rows.
inline IntMatrix reduce_embedding(const IntMatrix& B, std::size_t tail) {
  std::size_t free_rows = 0;
  IntMatrix staged = eliminate_tail(B, tail, &free_rows);
  if (free_rows > 0) {
    IntMatrix block(free_rows, staged.cols());
    for (std::size_t r = 0; r < free_rows; ++r) std::copy(staged.row(r).begin(), staged.row(r).end(), block.row(r).begin());
    block = lll_reduce({std::move(block), std::nullopt}).vectors;
    for (std::size_t r = 0; r < free_rows; ++r) std::copy(block.row(r).begin(), block.row(r).end(), staged.row(r).begin());
  }
  return lll_reduce({std::move(staged), std::nullopt}, kDefaultLllDelta, LllMethod::exact).vectors;
}

inline std::optional<IntVector> embedding_attempt(const IntMatrix& A, const IntVector& d, const Integer& N1, const Integer& N2) {
  const std::size_t m = A.rows(), n = A.cols();
  const IntMatrix reduced = reduce_embedding(embedding_basis(A, d, N1, N2), m);
  for (std::size_t r = 0; r < reduced.rows(); ++r) {
    auto row = reduced.row(r);
    if (cmpabs(row[n], N1) != 0) continue;
    bool tail_zero = true;
    for (std::size_t c = n + 1; c < n + 1 + m; ++c) tail_zero = tail_zero && sgn(row[c]) == 0;
    if (!tail_zero) continue;
    IntVector x(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n));
    if (sgn(row[n]) < 0)
      for (auto& v : x) v = -v;
    if (A * x == d) return x;
  }
  return std::nullopt;
}

}  // namespace detail

namespace detail {

// Embedding search without the solvability pre-check.
inline std::optional<IntVector> lenstra_search(const IntMatrix& A, const IntVector& d, const EmbeddingParams& params) {
  if (params.N1 < 2 || params.N2 < 2) throw std::invalid_argument("lenstra_particular_solution: N1, N2 must be >= 2");
  Integer N1 = params.N1, N2 = params.N2;
  for (std::size_t attempt = 0; attempt <= params.max_retries; ++attempt) {
    if (auto x = embedding_attempt(A, d, N1, N2)) return x;
    N1 *= N1;
    N2 *= N2;
  }
  return std::nullopt;
}

}  // namespace detail

/// Short integer solution of A x = d read off an LLL-reduced embedding lattice.
/// Throws NoIntegerSolutionError when the system has no integer solution;
/// returns nullopt when every rescaling of (N1, N2) fails on a solvable system.
inline std::optional<IntVector> lenstra_particular_solution(const IntMatrix& A, const IntVector& d, const EmbeddingParams& params) {
  if (d.size() != A.rows()) throw std::invalid_argument("lenstra_particular_solution: d length != A.rows");
  if (!solve_integer_system(A, d)) throw NoIntegerSolutionError("lenstra_particular_solution: system has no integer solution");
  return detail::lenstra_search(A, d, params);
}

inline std::optional<IntVector> lenstra_particular_solution(const IntMatrix& A, const IntVector& d) {
  return lenstra_particular_solution(A, d, default_embedding_params(A, d));
}

}  // namespace cknap
