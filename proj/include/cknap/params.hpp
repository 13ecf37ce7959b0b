#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cknap/int_matrix.hpp"
#include "cknap/solution_space.hpp"

namespace cknap {

/// Probability that x_1 + x_2 leaves I_{alpha_bits} for x_1 <- I_{beta_bits}, x_2 <- I_{alpha_bits}:
/// (3 * 2^(beta_bits - 1) - 1) / 2^alpha_bits.
inline Rational overflow_probability(std::size_t alpha_bits, std::size_t beta_bits) {
  if (alpha_bits == 0 || beta_bits == 0) throw std::invalid_argument("overflow_probability: bit counts must be positive");
  Rational p(Integer(3) * pow2(beta_bits - 1) - 1, pow2(alpha_bits));
  p.canonicalize();
  return p;
}

/// beta R <= alpha R - 1 in integer form: 2^(beta R) - 1 <= 2^(alpha R - 1).
inline bool beta_admissible(std::size_t alpha_bits, std::size_t beta_bits) {
  return alpha_bits > 0 && beta_bits > 0 && pow2(beta_bits) - 1 <= pow2(alpha_bits - 1);
}

struct SchemeParams {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t R = 0;
  std::vector<Rational> alphas;
  std::vector<Rational> betas;
  std::size_t t = 0;
  std::size_t entry_bits = 0;
  std::string hash_id = "SHAKE256";

  std::size_t k() const noexcept { return alphas.size(); }
  SolutionSpace S() const { return {n, R, alphas}; }
  SolutionSpace S_prime() const { return {n, R, betas}; }

  void validate() const {
    if (n == 0 || m == 0 || R == 0 || t == 0 || entry_bits == 0) throw std::invalid_argument("SchemeParams: n, m, R, t, entry_bits must be positive");
    if (alphas.size() != betas.size()) throw std::invalid_argument("SchemeParams: alphas and betas differ in length");
    if (hash_id != "SHAKE256") throw std::invalid_argument("SchemeParams: unsupported hash '" + hash_id + "'");
    const auto a = S().block_bits(), b = S_prime().block_bits();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!beta_admissible(a[i], b[i])) throw std::invalid_argument("SchemeParams: beta_" + std::to_string(i + 1) + " violates the overflow bound");
  }

  std::vector<std::size_t> alpha_bits() const { return S().block_bits(); }
  std::vector<std::size_t> beta_bits() const { return S_prime().block_bits(); }

  friend bool operator==(const SchemeParams&, const SchemeParams&) = default;
};

inline SchemeParams standard_params() {
  return {48, 4, 192, {Rational(1, 4), Rational(1, 2)}, {Rational(1, 8), Rational(1, 4)}, 80, 24, "SHAKE256"};
}

inline SchemeParams small_params() {
  return {8, 2, 24, {Rational(1, 2), Rational(1)}, {Rational(1, 4), Rational(1, 2)}, 16, 3, "SHAKE256"};
}

/// beta R = 4, for collision experiments.
inline SchemeParams tiny_params() {
  return {4, 1, 8, {Rational(1)}, {Rational(1, 2)}, 8, 4, "SHAKE256"};
}

inline SchemeParams preset_params(const std::string& name) {
  if (name == "standard") return standard_params();
  if (name == "small") return small_params();
  if (name == "tiny") return tiny_params();
  throw std::invalid_argument("unknown parameter preset '" + name + "'");
}

/// Per-block failure probabilities epsilon_i.
inline std::vector<Rational> achieved_epsilons(const SchemeParams& p) {
  std::vector<Rational> eps;
  const auto a = p.alpha_bits(), b = p.beta_bits();
  for (std::size_t i = 0; i < a.size(); ++i) eps.push_back(overflow_probability(a[i], b[i]));
  return eps;
}

/// Pr(x + k in S) = prod_i (1 - epsilon_i)^(n/k), exact.
inline Rational completeness_probability(const SchemeParams& p) {
  const std::size_t block = p.n / p.k();
  Rational result(1);
  for (const auto& e : achieved_epsilons(p)) {
    Rational one_minus = 1 - e;
    for (std::size_t j = 0; j < block; ++j) result *= one_minus;
  }
  return result;
}

/// Accept probability of an honest t-round transcript under a uniform challenge: ((1 + c) / 2)^t.
inline Rational expected_accept_rate(const SchemeParams& p) {
  const Rational per_round = (1 + completeness_probability(p)) / 2;
  Rational r(1);
  for (std::size_t i = 0; i < p.t; ++i) r *= per_round;
  return r;
}

/// 2^-(beta_min R).
inline Rational commitment_collision_bound(const SchemeParams& p) {
  const auto b = p.beta_bits();
  return Rational(Integer(1), pow2(*std::min_element(b.begin(), b.end())));
}

struct BetaChoice {
  std::vector<Rational> betas;
  std::vector<std::size_t> beta_bits;
  std::vector<Rational> epsilons;
};

namespace detail {

inline BetaChoice beta_choice_from_bits(const std::vector<std::size_t>& alpha_bits, std::size_t R, std::vector<std::size_t> beta_bits) {
  BetaChoice c;
  for (std::size_t i = 0; i < alpha_bits.size(); ++i) {
    Rational beta(Integer(static_cast<unsigned long>(beta_bits[i])), Integer(static_cast<unsigned long>(R)));
    beta.canonicalize();
    c.betas.push_back(beta);
    c.epsilons.push_back(overflow_probability(alpha_bits[i], beta_bits[i]));
  }
  c.beta_bits = std::move(beta_bits);
  return c;
}

}  // namespace detail

/// Largest beta_i R with achieved epsilon_i <= target epsilon_i, i.e.
/// floor(log2((epsilon_i 2^(alpha_i R + 1) + 2) / 3)).
inline BetaChoice choose_betas(const std::vector<Rational>& alphas, std::size_t R, const std::vector<Rational>& epsilons) {
  if (epsilons.size() != alphas.size() && epsilons.size() != 1) throw std::invalid_argument("choose_betas: need one epsilon or one per alpha");
  const SolutionSpace S(alphas.size(), R, alphas);
  std::vector<std::size_t> bits;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const Rational eps = epsilons.size() == 1 ? epsilons[0] : epsilons[i];
    if (sgn(eps) <= 0 || eps >= Rational(1, 2)) throw std::invalid_argument("choose_betas: epsilon must lie in (0, 1/2)");
    const std::size_t a = S.block_bits()[i];
    const Rational bound = eps * Rational(pow2(a + 1)) + 2;
    std::size_t b = 0;
    while (Rational(Integer(3) * pow2(b + 1)) <= bound) ++b;
    if (b == 0) throw std::domain_error("choose_betas: no positive beta_" + std::to_string(i + 1) + " * R meets epsilon");
    if (!beta_admissible(a, b)) throw std::logic_error("choose_betas: overflow bound violated");
    bits.push_back(b);
  }
  return detail::beta_choice_from_bits(S.block_bits(), R, std::move(bits));
}

/// For each block the largest beta = 2^-j (beta R integral) not above the maximal choice.
inline BetaChoice power_of_two_betas(const std::vector<Rational>& alphas, std::size_t R, const BetaChoice& maximal) {
  const SolutionSpace S(alphas.size(), R, alphas);
  std::vector<std::size_t> bits;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t d = 1; d <= R; d *= 2)
      if (R % d == 0 && R / d <= maximal.beta_bits[i]) {
        best = R / d;
        break;
      }
    if (best == 0) throw std::domain_error("power_of_two_betas: no dyadic beta fits");
    bits.push_back(best);
  }
  return detail::beta_choice_from_bits(S.block_bits(), R, std::move(bits));
}

}  // namespace cknap
