#pragma once

#include <stdexcept>
#include <vector>

#include "cknap/int_matrix.hpp"
#include "cknap/lll.hpp"

namespace cknap {

class OutsideSpanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

// Coefficients of the projection of `target` onto span(b*_j), plus |proj|^2.
struct GsCoordinates {
  RatVector tau;  // 1-indexed, tau[j] = <t, b*_j> / |b*_j|^2
  Rational projected_norm2;
};

inline GsCoordinates gs_coordinates(const IntMatrix& b, const IntegralGram& g, const RatVector& target) {
  const std::size_t k = b.rows();
  RatVector inner(k + 1);  // <t, b*_j>
  GsCoordinates out{RatVector(k + 1), 0};
  for (std::size_t j = 1; j <= k; ++j) {
    Rational s = 0;
    auto bj = b.row(j - 1);
    for (std::size_t c = 0; c < target.size(); ++c) s += target[c] * Rational(bj[c]);
    for (std::size_t l = 1; l < j; ++l) s -= g.mu(j, l) * inner[l];
    inner[j] = s;
    const Rational norm2 = g.gs_norm2(j);
    out.tau[j] = s / norm2;
    out.projected_norm2 += s * out.tau[j];
  }
  return out;
}

inline IntVector nearest_plane(const IntMatrix& b, const IntegralGram& g, RatVector tau) {
  const std::size_t k = b.rows();
  IntVector v(b.cols());
  for (std::size_t i = k; i >= 1; --i) {
    const Integer c = round_half_up(tau[i]);
    if (sgn(c) == 0) continue;
    for (std::size_t j = 1; j < i; ++j) tau[j] -= Rational(c) * g.mu(i, j);
    auto bi = b.row(i - 1);
    for (std::size_t col = 0; col < v.size(); ++col) mpz_addmul(v[col].get_mpz_t(), c.get_mpz_t(), bi[col].get_mpz_t());
  }
  return v;
}

}  // namespace detail

inline RatVector to_rational(const IntVector& v) { return {v.begin(), v.end()}; }

/// Babai's nearest-plane approximation to the lattice vector closest to
/// `target`. Coefficient ties round half up. Throws OutsideSpanError when
/// `target` is not in the rational span of the basis.
inline IntVector babai_nearest_plane(const LatticeBasis& basis, const RatVector& target) {
  if (target.size() != basis.dimension()) throw std::invalid_argument("babai_nearest_plane: target dimension mismatch");
  const IntegralGram g = integral_gram_schmidt(basis.vectors);
  auto coords = detail::gs_coordinates(basis.vectors, g, target);
  Rational norm2 = 0;
  for (const auto& x : target) norm2 += x * x;
  if (norm2 != coords.projected_norm2) throw OutsideSpanError("babai_nearest_plane: target outside lattice span");
  return detail::nearest_plane(basis.vectors, g, std::move(coords.tau));
}

/// Nearest plane applied to the orthogonal projection of `target` onto the
/// span of the basis. Equals babai_nearest_plane on in-span targets.
inline IntVector babai_nearest_plane_projected(const LatticeBasis& basis, const RatVector& target) {
  if (target.size() != basis.dimension()) throw std::invalid_argument("babai_nearest_plane: target dimension mismatch");
  if (basis.rank() == 0) return IntVector(target.size());
  const IntegralGram g = integral_gram_schmidt(basis.vectors);
  auto coords = detail::gs_coordinates(basis.vectors, g, target);
  return detail::nearest_plane(basis.vectors, g, std::move(coords.tau));
}

}  // namespace cknap
