#pragma once

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cknap/babai.hpp"
#include "cknap/embedding.hpp"
#include "cknap/int_matrix.hpp"
#include "cknap/lll.hpp"
#include "cknap/smith.hpp"
#include "cknap/solution_space.hpp"
#include "cknap/xof.hpp"

namespace cknap {

/// A X = C with X restricted to `space`; `planted` is the known solution when the instance was generated.
struct KnapsackInstance {
  IntMatrix A;
  IntVector C;
  SolutionSpace space;
  std::optional<IntVector> planted;

  std::size_t m() const noexcept { return A.rows(); }
  std::size_t n() const noexcept { return A.cols(); }

  void validate() const {
    if (A.cols() != space.n()) throw std::invalid_argument("KnapsackInstance: A.cols != space.n");
    if (C.size() != A.rows()) throw std::invalid_argument("KnapsackInstance: C length != A.rows");
    if (planted) {
      if (!space.contains_all(*planted)) throw std::invalid_argument("KnapsackInstance: planted solution outside space");
      if (A * *planted != C) throw std::invalid_argument("KnapsackInstance: A * planted != C");
    }
  }
};

struct AttackConfig {
  std::size_t search_width = 10;
  /// Bit scales beta_2..beta_k of the random right-hand sides; defaults to alpha_2..alpha_k.
  std::optional<std::vector<Rational>> dnc_betas;
};

struct AttackReport {
  IntVector candidate;
  std::size_t satisfied_coords = 0;
  std::size_t total_coords = 0;
  bool full_solution = false;
  bool equality_holds = false;
  /// Chosen multiplier j per block (one entry for the plain attack).
  std::vector<long> shifts;
  /// Right-hand-side draws used by divide-and-conquer (0 for the plain attack).
  std::size_t resamples = 0;

  double coordinate_fraction() const {
    return total_coords ? static_cast<double>(satisfied_coords) / static_cast<double>(total_coords) : 0.0;
  }
};

inline bool operator==(const AttackReport& a, const AttackReport& b) {
  return a.candidate == b.candidate && a.satisfied_coords == b.satisfied_coords && a.total_coords == b.total_coords &&
         a.full_solution == b.full_solution && a.equality_holds == b.equality_holds && a.shifts == b.shifts &&
         a.resamples == b.resamples;
}

/// A with i.i.d. entries from I_{entry_bits} (row-major draws), then planted <- space, C = A planted.
inline KnapsackInstance generate_instance(const SolutionSpace& space, std::size_t m, std::size_t entry_bits, ByteStream& rng) {
  if (m == 0 || m > space.n()) throw std::invalid_argument("generate_instance: need 0 < m <= n");
  IntMatrix A(m, space.n());
  for (std::size_t r = 0; r < m; ++r)
    for (auto& v : A.row(r)) v = rng.uniform_bits(entry_bits);
  IntVector x = space.sample(rng);
  IntVector C = A * x;
  return {std::move(A), std::move(C), space, std::move(x)};
}

namespace detail {

struct BlockResult {
  IntVector candidate;
  std::size_t satisfied = 0;
  long shift = 0;
};

// Particular solution, reduced kernel basis, Babai vector toward the target,
// then the best y + j b over |j| <= width. Nullopt when A x = C has no integer solution.
inline std::optional<BlockResult> cvp_block(const IntMatrix& A, const IntVector& C, const SolutionSpace& space, std::size_t width) {
  const SNFDecomposition d = snf(A);
  {
    const IntVector c = d.P * C;
    for (std::size_t i = d.rank; i < c.size(); ++i)
      if (sgn(c[i]) != 0) return std::nullopt;
    for (std::size_t i = 0; i < d.rank; ++i)
      if (!mpz_divisible_p(c[i].get_mpz_t(), d.divisors[i].get_mpz_t())) return std::nullopt;
  }

  IntVector y;
  if (auto found = lenstra_search(A, C, default_embedding_params(A, C, space.max_bits()))) {
    y = std::move(*found);
  } else {
    y = solve_integer_system(A, C)->particular;
  }

  IntVector b(A.cols());
  const auto kernel = kernel_basis_from(d);
  if (!kernel.empty()) {
    const LatticeBasis reduced = lll_reduce(make_basis(kernel));
    b = babai_nearest_plane_projected(reduced, to_rational(space.target_vector()));
  }

  BlockResult best{y, space.count_satisfied(y), 0};
  for (long a = 1; a <= static_cast<long>(width); ++a)
    for (long j : {-a, a}) {
      IntVector cand = scale_add(y, Integer(j), b);
      const std::size_t s = space.count_satisfied(cand);
      if (s > best.satisfied) best = {std::move(cand), s, j};
    }
  return best;
}

inline AttackReport finish_report(const KnapsackInstance& inst, IntVector candidate, std::vector<long> shifts, std::size_t resamples) {
  AttackReport r;
  r.total_coords = inst.n();
  r.satisfied_coords = inst.space.count_satisfied(candidate);
  r.equality_holds = inst.A * candidate == inst.C;
  r.full_solution = r.equality_holds && r.satisfied_coords == r.total_coords;
  r.candidate = std::move(candidate);
  r.shifts = std::move(shifts);
  r.resamples = resamples;
  return r;
}

}  // namespace detail

/// Lattice attack: particular solution y, Babai vector b of the reduced kernel
/// lattice toward the target vector, best of y + j b for |j| <= search_width.
/// Ties prefer smaller |j|, then the negative j.
inline AttackReport cvp_attack(const KnapsackInstance& inst, const AttackConfig& cfg = {}) {
  inst.validate();
  if (inst.m() >= inst.n()) throw std::invalid_argument("cvp_attack: requires m < n");
  if (cfg.search_width == 0) throw std::invalid_argument("cvp_attack: search_width must be >= 1");
  auto block = detail::cvp_block(inst.A, inst.C, inst.space, cfg.search_width);
  if (!block) throw NoIntegerSolutionError("cvp_attack: A X = C has no integer solution");
  return detail::finish_report(inst, std::move(block->candidate), {block->shift}, 0);
}

/// Divide and conquer: split A into k column blocks, draw random right-hand
/// sides h_2..h_k from I_{beta_i R}^m, set h_1 = C - sum h_i, attack each block
/// against its own single-scale space and concatenate. A draw that leaves some
/// block unsolvable over Z is redrawn, at most 10 times.
inline AttackReport divide_and_conquer_attack(const KnapsackInstance& inst, const AttackConfig& cfg, ByteStream& rng) {
  inst.validate();
  const std::size_t k = inst.space.blocks(), width = inst.space.block_size(), m = inst.m();
  if (m >= width) throw std::invalid_argument("divide_and_conquer_attack: requires m < n/k");
  if (cfg.search_width == 0) throw std::invalid_argument("divide_and_conquer_attack: search_width must be >= 1");

  std::vector<std::size_t> beta_bits;
  if (cfg.dnc_betas) {
    if (cfg.dnc_betas->size() + 1 != k) throw std::invalid_argument("divide_and_conquer_attack: need k-1 betas");
    for (const auto& beta : *cfg.dnc_betas) {
      const Rational bits = beta * Rational(inst.space.R());
      if (sgn(bits) <= 0 || bits.get_den() != 1) throw std::invalid_argument("divide_and_conquer_attack: beta * R must be a positive integer");
      beta_bits.push_back(bits.get_num().get_ui());
    }
  } else {
    beta_bits.assign(inst.space.block_bits().begin() + 1, inst.space.block_bits().end());
  }

  constexpr std::size_t kMaxResamples = 10;
  IntVector partial(inst.n());
  std::vector<long> shifts(k, 0);
  std::size_t draws = 0;
  for (std::size_t attempt = 0; attempt <= kMaxResamples; ++attempt) {
    ++draws;
    std::vector<IntVector> rhs(k);
    rhs[0] = inst.C;
    for (std::size_t i = 1; i < k; ++i) {
      rhs[i].resize(m);
      for (auto& v : rhs[i]) v = rng.uniform_bits(beta_bits[i - 1]);
      rhs[0] = sub(rhs[0], rhs[i]);
    }
    bool all_solved = true;
    for (std::size_t i = 0; i < k; ++i) {
      auto block = detail::cvp_block(inst.A.col_block(i * width, width), rhs[i], inst.space.block(i), cfg.search_width);
      if (!block) {
        all_solved = false;
        std::fill(partial.begin() + static_cast<std::ptrdiff_t>(i * width), partial.begin() + static_cast<std::ptrdiff_t>((i + 1) * width), Integer(0));
        shifts[i] = 0;
        continue;
      }
      std::copy(block->candidate.begin(), block->candidate.end(), partial.begin() + static_cast<std::ptrdiff_t>(i * width));
      shifts[i] = block->shift;
    }
    if (all_solved || attempt == kMaxResamples) break;
  }
  // k = 1 draws nothing and must match cvp_attack exactly.
  return detail::finish_report(inst, std::move(partial), std::move(shifts), k == 1 ? 0 : draws);
}

}  // namespace cknap
