#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cknap/int_matrix.hpp"

namespace cknap {

class DependentVectorsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lattice generated by the rows of `vectors`. `lll_delta` is set once the rows
/// are known to be LLL-reduced with that parameter.
struct LatticeBasis {
  IntMatrix vectors;
  std::optional<Rational> lll_delta;

  std::size_t rank() const noexcept { return vectors.rows(); }
  std::size_t dimension() const noexcept { return vectors.cols(); }
};

inline LatticeBasis make_basis(const std::vector<IntVector>& rows) { return {IntMatrix::from_rows(rows), std::nullopt}; }

/// Fraction-free Gram-Schmidt data of a row basis b_1..b_k (1-indexed).
/// d[i] = det Gram(b_1..b_i), lambda[i][j] = d[j] * mu_{i,j} for j < i; all integral.
struct IntegralGram {
  IntVector d;
  std::vector<IntVector> lambda;

  /// |b*_i|^2 = d[i] / d[i-1]
  Rational gs_norm2(std::size_t i) const { return ratio(d[i], d[i - 1]); }
  Rational mu(std::size_t i, std::size_t j) const { return ratio(lambda[i][j], d[j]); }

 private:
  static Rational ratio(const Integer& num, const Integer& den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
  }
};

inline IntegralGram integral_gram_schmidt(const IntMatrix& b) {
  const std::size_t k = b.rows();
  IntegralGram g{IntVector(k + 1), std::vector<IntVector>(k + 1, IntVector(k + 1))};
  g.d[0] = 1;
  for (std::size_t i = 1; i <= k; ++i)
    for (std::size_t j = 1; j <= i; ++j) {
      Integer u = dot(b.row(i - 1), b.row(j - 1));
      for (std::size_t l = 1; l < j; ++l) {
        u = g.d[l] * u - g.lambda[i][l] * g.lambda[j][l];
        mpz_divexact(u.get_mpz_t(), u.get_mpz_t(), g.d[l - 1].get_mpz_t());
      }
      if (j < i) {
        g.lambda[i][j] = std::move(u);
      } else {
        if (sgn(u) == 0) throw DependentVectorsError("integral_gram_schmidt: linearly dependent rows");
        g.d[i] = std::move(u);
      }
    }
  return g;
}

namespace detail {

// Integral LLL in the formulation of Cohen, "A Course in Computational
// Algebraic Number Theory", Algorithm 2.6.7, generalised to delta = p/q.
class IntegralLll {
 public:
  IntegralLll(IntMatrix basis, const Rational& delta)
      : b_(std::move(basis)),
        n_(b_.rows()),
        p_(delta.get_num()),
        q_(delta.get_den()),
        d_(n_ + 1),
        lambda_(n_ + 1, IntVector(n_ + 1)) {}

  IntMatrix run() {
    if (n_ == 0) return std::move(b_);
    d_[0] = 1;
    d_[1] = dot(b_.row(0), b_.row(0));
    if (sgn(d_[1]) == 0) throw DependentVectorsError("lll_reduce: zero vector in basis");
    std::size_t k = 2, kmax = 1;
    while (k <= n_) {
      if (k > kmax) {
        kmax = k;
        incremental_gram(k);
      }
      for (;;) {
        reduce(k, k - 1);
        if (lovasz_fails(k)) {
          swap(k, kmax);
          if (k > 2) --k;
          continue;
        }
        for (std::size_t l = k - 1; l-- > 1;) reduce(k, l);
        ++k;
        break;
      }
    }
    return std::move(b_);
  }

 private:
  void incremental_gram(std::size_t k) {
    for (std::size_t j = 1; j <= k; ++j) {
      Integer u = dot(b_.row(k - 1), b_.row(j - 1));
      for (std::size_t i = 1; i < j; ++i) {
        u = d_[i] * u - lambda_[k][i] * lambda_[j][i];
        mpz_divexact(u.get_mpz_t(), u.get_mpz_t(), d_[i - 1].get_mpz_t());
      }
      if (j < k) {
        lambda_[k][j] = std::move(u);
      } else {
        if (sgn(u) == 0) throw DependentVectorsError("lll_reduce: linearly dependent rows");
        d_[k] = std::move(u);
      }
    }
  }

  // Size-reduce b_k against b_l.
  void reduce(std::size_t k, std::size_t l) {
    tmp_ = 2 * abs(lambda_[k][l]);
    if (cmp(tmp_, d_[l]) <= 0) return;
    const Integer r = round_half_up(Rational(lambda_[k][l], d_[l]));
    auto bk = b_.row(k - 1);
    auto bl = b_.row(l - 1);
    for (std::size_t c = 0; c < bk.size(); ++c) mpz_submul(bk[c].get_mpz_t(), r.get_mpz_t(), bl[c].get_mpz_t());
    mpz_submul(lambda_[k][l].get_mpz_t(), r.get_mpz_t(), d_[l].get_mpz_t());
    for (std::size_t i = 1; i < l; ++i) mpz_submul(lambda_[k][i].get_mpz_t(), r.get_mpz_t(), lambda_[l][i].get_mpz_t());
  }

  // q (d_k d_{k-2} + lambda^2) < p d_{k-1}^2
  bool lovasz_fails(std::size_t k) {
    const Integer& lam = lambda_[k][k - 1];
    Integer lhs = d_[k] * d_[k - 2] + lam * lam;
    lhs *= q_;
    Integer rhs = d_[k - 1] * d_[k - 1];
    rhs *= p_;
    return lhs < rhs;
  }

  void swap(std::size_t k, std::size_t kmax) {
    b_.swap_rows(k - 1, k - 2);
    for (std::size_t j = 1; j + 2 <= k; ++j) std::swap(lambda_[k][j], lambda_[k - 1][j]);
    const Integer lam = lambda_[k][k - 1];
    Integer B = d_[k - 2] * d_[k] + lam * lam;
    mpz_divexact(B.get_mpz_t(), B.get_mpz_t(), d_[k - 1].get_mpz_t());
    for (std::size_t i = k + 1; i <= kmax; ++i) {
      const Integer t = lambda_[i][k];
      Integer nk = d_[k] * lambda_[i][k - 1] - lam * t;
      mpz_divexact(nk.get_mpz_t(), nk.get_mpz_t(), d_[k - 1].get_mpz_t());
      Integer nk1 = B * t + lam * nk;
      mpz_divexact(nk1.get_mpz_t(), nk1.get_mpz_t(), d_[k].get_mpz_t());
      lambda_[i][k] = std::move(nk);
      lambda_[i][k - 1] = std::move(nk1);
    }
    d_[k - 1] = std::move(B);
  }

  IntMatrix b_;
  std::size_t n_;
  Integer p_, q_;
  IntVector d_;
  std::vector<IntVector> lambda_;
  Integer tmp_;
};


// Schnorr-Euchner LLL with long double Gram-Schmidt and exact integer row
// updates. Used only as a pre-pass: its output is handed to IntegralLll,
// which establishes the reduction conditions exactly.
class FloatLll {
 public:
  FloatLll(IntMatrix basis, long double delta) : b_(std::move(basis)), n_(b_.rows()), dim_(b_.cols()), delta_(delta) {}

  IntMatrix run(std::size_t max_iterations) {
    if (n_ < 2) return std::move(b_);
    approx_.assign(n_, std::vector<long double>(dim_));
    mu_.assign(n_, std::vector<long double>(n_));
    r_.assign(n_, std::vector<long double>(n_));
    c_.assign(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) refresh(i);
    c_[0] = exact_dot(0, 0);
    std::size_t k = 1;
    for (std::size_t it = 0; k < n_ && it < max_iterations; ++it) {
      if (!size_reduce(k)) break;
      const long double m = mu_[k][k - 1];
      if (c_[k] < (delta_ - m * m) * c_[k - 1]) {
        b_.swap_rows(k, k - 1);
        std::swap(approx_[k], approx_[k - 1]);
        if (k == 1) {
          c_[0] = exact_dot(0, 0);
        } else {
          --k;
        }
      } else {
        ++k;
      }
    }
    return std::move(b_);
  }

 private:
  static long double to_ld(const Integer& v) {
    long exp = 0;
    const double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
    return std::ldexp(static_cast<long double>(mant), static_cast<int>(exp));
  }

  // v must be integral; beyond 63 bits only the leading 63 bits are kept.
  static Integer from_ld(long double v) {
    if (std::fabs(v) < 9.2e18L) return Integer(static_cast<long>(v));
    int exp = 0;
    const long double mant = std::frexp(v, &exp);
    Integer out(static_cast<long>(std::ldexp(mant, 62)));
    out <<= static_cast<mp_bitcnt_t>(exp - 62);
    return out;
  }

  void refresh(std::size_t i) {
    auto row = b_.row(i);
    for (std::size_t c = 0; c < dim_; ++c) approx_[i][c] = to_ld(row[c]);
  }

  long double exact_dot(std::size_t i, std::size_t j) const { return to_ld(dot(b_.row(i), b_.row(j))); }

  long double approx_dot(std::size_t i, std::size_t j) const {
    long double s = 0, norms = 0;
    for (std::size_t c = 0; c < dim_; ++c) {
      s += approx_[i][c] * approx_[j][c];
      norms += std::fabs(approx_[i][c] * approx_[j][c]);
    }
    // Heavy cancellation: fall back to the exact inner product.
    if (std::fabs(s) < norms * 1e-9L) return exact_dot(i, j);
    return s;
  }

  void gram_row(std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      long double r = approx_dot(k, j);
      for (std::size_t i = 0; i < j; ++i) r -= mu_[j][i] * r_[k][i];
      r_[k][j] = r;
      mu_[k][j] = r / c_[j];
    }
    long double ck = approx_dot(k, k);
    for (std::size_t j = 0; j < k; ++j) ck -= mu_[k][j] * r_[k][j];
    c_[k] = ck;
  }

  // Returns false when the floating-point state has degenerated.
  bool size_reduce(std::size_t k) {
    for (int pass = 0; pass < 64; ++pass) {
      gram_row(k);
      bool changed = false;
      for (std::size_t j = k; j-- > 0;) {
        const long double q = std::nearbyint(mu_[k][j]);
        if (std::fabs(mu_[k][j]) <= 0.51L || q == 0) continue;
        const Integer qz = from_ld(q);
        auto bk = b_.row(k);
        auto bj = b_.row(j);
        for (std::size_t c = 0; c < dim_; ++c) mpz_submul(bk[c].get_mpz_t(), qz.get_mpz_t(), bj[c].get_mpz_t());
        for (std::size_t i = 0; i < j; ++i) mu_[k][i] -= q * mu_[j][i];
        mu_[k][j] -= q;
        changed = true;
      }
      if (!changed) return std::isfinite(c_[k]) && c_[k] > 0;
      refresh(k);
    }
    return false;
  }

  IntMatrix b_;
  std::size_t n_, dim_;
  long double delta_;
  std::vector<std::vector<long double>> approx_, mu_, r_;
  std::vector<long double> c_;
};

}  // namespace detail

inline const Rational kDefaultLllDelta{99, 100};

enum class LllMethod {
  exact,             ///< integral LLL only
  float_then_exact,  ///< long double pre-pass, then the integral LLL on its output
};

/// LLL-reduce the rows of `basis` with exact integer arithmetic.
/// Throws std::invalid_argument unless 1/4 < delta < 1, DependentVectorsError on dependent rows.
inline LatticeBasis lll_reduce(const LatticeBasis& basis, const Rational& delta = kDefaultLllDelta,
                               LllMethod method = LllMethod::float_then_exact) {
  if (delta <= Rational(1, 4) || delta >= 1) throw std::invalid_argument("lll_reduce: delta must lie in (1/4, 1)");
  Rational canonical = delta;
  canonical.canonicalize();
  IntMatrix start = basis.vectors;
  if (method == LllMethod::float_then_exact && start.rows() > 2) {
    const std::size_t n = start.rows();
    start = detail::FloatLll(std::move(start), static_cast<long double>(canonical.get_d())).run(1000 * n * n);
  }
  detail::IntegralLll engine(std::move(start), canonical);
  return {engine.run(), canonical};
}

}  // namespace cknap
