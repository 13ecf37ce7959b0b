// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cknap/cknap.hpp"
#include "support/oracles.hpp"

using namespace cknap;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return fmt("%.1f%%", 100 * v); }

constexpr std::uint64_t kSeed = 1;

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentSpec table_spec(std::size_t n, std::vector<std::size_t> m_list, const char* alphas, std::size_t trials) {
  ExperimentSpec s;
  s.n = n;
  s.m_list = std::move(m_list);
  s.R = 80;
  s.spaces = {parse_rational_list(alphas)};
  s.entry_bits = 10;
  s.trials = trials;
  s.search_width = 10;
  s.master_seed = kSeed;
  return s;
}

// Survival function of the Kolmogorov distribution.
double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1 : -1) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2 * sum, 0.0, 1.0);
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic, with the usual small-sample correction).
double ks_two_sample(std::vector<std::uint64_t> a, std::vector<std::uint64_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const std::uint64_t v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double sq = std::sqrt(ne);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}

Outcome criterion1() {
  const auto report = run_experiment(table_spec(50, {1, 2, 10, 20, 32, 40}, "1", 20), {jobs(), true});
  Outcome o{true, "full-solution rate per m (need >= 90%):"};
  for (const auto& row : report.rows) {
    o.pass = o.pass && row.full_solution_rate >= 0.9;
    o.detail += " m=" + std::to_string(row.m) + ":" + pct(row.full_solution_rate);
  }
  return o;
}

Outcome criterion2() {
  Outcome o{true, "mean coordinate fraction (need 40%..60%):"};
  for (const char* alphas : {"1,1/2", "1/2,1/4"}) {
    const auto report = run_experiment(table_spec(50, {1, 2, 10, 20}, alphas, 20), {jobs(), true});
    o.detail += std::string(" ") + report.rows[0].space;
    for (const auto& row : report.rows) {
      o.pass = o.pass && std::fabs(row.mean_coord_fraction - 0.5) <= 0.1;
      o.detail += " m=" + std::to_string(row.m) + ":" + pct(row.mean_coord_fraction);
    }
  }
  return o;
}

Outcome criterion3() {
  const auto spec = table_spec(50, {10}, "1,1/2", 20);
  double cvp = 0, dnc = 0;
  for (std::size_t i = 0; i < spec.trials; ++i) {
    cvp += run_trial(spec, spec.spaces[0], 10, i, AttackKind::cvp).coordinate_fraction();
    dnc += run_trial(spec, spec.spaces[0], 10, i, AttackKind::dnc).coordinate_fraction();
  }
  cvp /= static_cast<double>(spec.trials);
  dnc /= static_cast<double>(spec.trials);
  const double gain = dnc - cvp;
  return {gain >= 0.05, "S_{1;1/2} m=10, 20 paired trials: cvp " + pct(cvp) + ", dnc " + pct(dnc) + ", gain " +
                            fmt("%.1f", 100 * gain) + " points (need >= 5)"};
}

Outcome criterion4() {
  const auto report = run_experiment(table_spec(48, {1, 10, 32}, "1/2,1/4,1/8", 20), {jobs(), true});
  const double reference[] = {0.633, 0.358, 0.333};
  Outcome o{true, "S_{1/2;1/4;1/8} n=48 (reference 63.3/35.8/33.3, need strictly decreasing and +-8 points):"};
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const double v = report.rows[i].mean_coord_fraction;
    o.pass = o.pass && std::fabs(v - reference[i]) <= 0.08;
    if (i > 0) o.pass = o.pass && v < report.rows[i - 1].mean_coord_fraction;
    o.detail += " m=" + std::to_string(report.rows[i].m) + ":" + pct(v);
  }
  return o;
}

// Independent Monte-Carlo estimate of Pr[x1 + x2 not in I_a], x1 in I_b, x2 in I_a, with 128-bit arithmetic.
std::pair<std::size_t, std::size_t> overflow_monte_carlo(std::size_t a, std::size_t b, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const auto draw = [&](std::size_t bits) {
    unsigned __int128 v = (static_cast<unsigned __int128>(gen()) << 64) | gen();
    if (bits < 128) v &= (static_cast<unsigned __int128>(1) << bits) - 1;
    return v | (static_cast<unsigned __int128>(1) << (bits - 1));
  };
  const unsigned __int128 limit = static_cast<unsigned __int128>(1) << a;
  std::size_t out = 0;
  for (std::size_t i = 0; i < samples; ++i) out += draw(b) + draw(a) >= limit;
  return {out, samples};
}

Outcome criterion5() {
  Outcome o{true, ""};
  const auto alphas = parse_rational_list("1/4,1/2");
  const auto maximal = choose_betas(alphas, 192, {parse_rational("1e-7")});
  const auto dyadic = power_of_two_betas(alphas, 192, maximal);
  const bool admits = dyadic.betas == std::vector<Rational>{Rational(1, 8), Rational(1, 4)};
  o.pass = admits;
  o.detail = std::string("beta=(1/8,1/4) ") + (admits ? "admitted" : "NOT admitted") + ";";
  // Standard parameters plus one pair with a sizeable epsilon so the estimate is informative.
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{48, 24}, {96, 48}, {12, 10}};
  const std::size_t N = 1000000;
  std::uint64_t seed = 100;
  for (const auto& [a, b] : pairs) {
    const double eps = overflow_probability(a, b).get_d();
    const auto [hits, total] = overflow_monte_carlo(a, b, N, seed++);
    const double sigma = std::sqrt(static_cast<double>(total) * eps * (1 - eps));
    const double diff = std::fabs(static_cast<double>(hits) - static_cast<double>(total) * eps);
    const bool ok = diff <= 3 * sigma + 1e-9 || (hits == 0 && total * eps < 3);
    o.pass = o.pass && ok;
    o.detail += " (aR=" + std::to_string(a) + ",bR=" + std::to_string(b) + ") eps=" + fmt("%.4g", eps) + " MC " + std::to_string(hits) + "/" +
                std::to_string(total) + (ok ? " ok;" : " OUTSIDE 3 sigma;");
  }
  std::size_t checked = 0, mismatches = 0;
  for (std::size_t a = 2; a <= 12; ++a)
    for (std::size_t b = 1; b < a; ++b) {
      if (!beta_admissible(a, b)) continue;
      const long lo_a = 1L << (a - 1), hi_a = (1L << a) - 1, lo_b = 1L << (b - 1), hi_b = (1L << b) - 1;
      long bad = 0, total = 0;
      for (long x1 = lo_b; x1 <= hi_b; ++x1)
        for (long x2 = lo_a; x2 <= hi_a; ++x2) {
          ++total;
          bad += x1 + x2 > hi_a;
        }
      Rational q(bad, total);
      q.canonicalize();
      ++checked;
      mismatches += q != overflow_probability(a, b);
    }
  o.pass = o.pass && mismatches == 0;
  o.detail += " exhaustive R<=12: " + std::to_string(checked - mismatches) + "/" + std::to_string(checked) + " exact";
  return o;
}

Outcome criterion6() {
  auto p = small_params();
  p.t = 1;
  const auto keys = keygen(p, as_bytes("acceptance-completeness"));
  ByteStream rng(std::string_view("ACCEPT06", 8), as_bytes("rounds"));
  const std::size_t rounds = 1000;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < rounds; ++i) {
    const auto c = commit(keys.pk, rng);
    const Challenge e = random_challenge(1, rng);
    accepted += verify(keys.pk, {c.commitment, e, respond(keys.sk, c.nonces, e)}).accepted;
  }
  const double c = completeness_probability(p).get_d();
  const double sigma = std::sqrt(c * (1 - c) / rounds);
  const double rate = static_cast<double>(accepted) / rounds;
  const bool rounds_ok = rate >= c - 3 * sigma;

  const auto sp = small_params();
  const auto skeys = keygen(sp, as_bytes("acceptance-signer"));
  ByteStream srng(std::string_view("ACCEPT06", 8), as_bytes("signer"));
  std::size_t verified = 0, restarts_total = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    const Bytes msg = srng.take(1 + i % 64);
    std::size_t restarts = 0;
    const auto sig = sign(skeys.sk, skeys.pk, msg, srng, &restarts);
    restarts_total += restarts;
    verified += verify_signature(skeys.pk, msg, parse_signature(sp, serialize_signature(sp, sig))).accepted;
  }
  return {rounds_ok && verified == 500,
          "t=1 rounds (n=8,k=2,R=24): accept " + pct(rate) + " vs product " + fmt("%.4f", c) + " - 3 sigma = " + fmt("%.4f", c - 3 * sigma) +
              "; signer: " + std::to_string(verified) + "/500 verified, " + std::to_string(restarts_total) + " restarts"};
}

Outcome criterion7() {
  const auto p = small_params();
  const auto keys = keygen(p, as_bytes("acceptance-extractor"));
  ByteStream rng(std::string_view("ACCEPT07", 8), as_bytes("extract"));
  std::size_t equation = 0, member = 0, trials = 0;
  while (trials < 100) {
    const auto c = commit(keys.pk, rng);
    const Challenge e1 = random_challenge(p.t, rng), e2 = random_challenge(p.t, rng);
    if (e1 == e2) continue;
    const Transcript t1{c.commitment, e1, respond(keys.sk, c.nonces, e1)}, t2{c.commitment, e2, respond(keys.sk, c.nonces, e2)};
    if (!verify(keys.pk, t1) || !verify(keys.pk, t2)) continue;
    ++trials;
    const auto x = extract_witness(t1, t2, keys.pk);
    equation += keys.pk.A * x.x_hat == keys.pk.b;
    member += p.S().contains_all(x.x_hat);
  }
  return {equation == 100 && member >= 99,
          "A x_hat = b in " + std::to_string(equation) + "/100, x_hat in S in " + std::to_string(member) + "/100"};
}

Outcome criterion8() {
  const auto p = standard_params();
  const auto keys = keygen(p, as_bytes("acceptance-hvzk"));
  ByteStream rng(std::string_view("ACCEPT08", 8), as_bytes("hvzk"));
  const std::size_t N = 10000;
  std::vector<std::vector<std::uint64_t>> honest(p.n), simulated(p.n);
  const Challenge zeros(p.t, false);
  while (honest[0].size() < N) {
    const auto c = commit(keys.pk, rng);
    const IntMatrix S = respond(keys.sk, c.nonces, zeros);
    const auto sim = simulate_transcript(keys.pk, zeros, rng);
    for (std::size_t col = 0; col < p.t && honest[0].size() < N; ++col)
      for (std::size_t r = 0; r < p.n; ++r) {
        honest[r].push_back(S(r, col).get_ui());
        simulated[r].push_back(sim.response(r, col).get_ui());
      }
  }
  double min_p = 1;
  for (std::size_t r = 0; r < p.n; ++r) min_p = std::min(min_p, ks_two_sample(honest[r], simulated[r]));
  const double corrected = std::min(1.0, min_p * static_cast<double>(p.n));
  return {corrected > 0.01, std::to_string(p.n) + " coordinates, N=" + std::to_string(N) + ": min KS p " + fmt("%.4f", min_p) +
                                ", Bonferroni-corrected " + fmt("%.4f", corrected) + " (need > 0.01)"};
}

Outcome criterion9() {
  auto p = small_params();
  p.t = 12;
  const auto keys = keygen(p, as_bytes("acceptance-guessing"));
  ByteStream adversary(std::string_view("ACCEPT09", 8), as_bytes("eve"));
  ByteStream verifier(std::string_view("ACCEPT09", 8), as_bytes("bob"));
  const std::size_t trials = 1u << 16;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    Transcript tr = guessing_forgery(keys.pk, adversary, nullptr);
    tr.challenge = random_challenge(p.t, verifier);
    wins += verify(keys.pk, tr).accepted;
  }
  const double q = std::ldexp(1.0, -12), expected = trials * q, sigma = std::sqrt(trials * q * (1 - q));
  return {std::fabs(static_cast<double>(wins) - expected) <= 3 * sigma,
          std::to_string(wins) + " wins in 2^16 trials, expected " + fmt("%.1f", expected) + " +- " + fmt("%.1f", 3 * sigma)};
}

Outcome criterion10() {
  const auto p = standard_params();
  const auto keys = keygen(p, as_bytes("acceptance-size"));
  ByteStream rng(std::string_view("ACCEPT10", 8), as_bytes("size"));
  const Bytes sig = serialize_signature(p, sign(keys.sk, keys.pk, as_bytes("size check"), rng));
  const double target = 33000, analytic = static_cast<double>(signature_size(p)), measured = static_cast<double>(sig.size());
  const bool sizes = std::fabs(analytic / target - 1) <= 0.25 && std::fabs(measured / target - 1) <= 0.25;
  const Bytes sk = serialize_secret_key(keys.sk);
  const bool seed = keys.sk.x_seed.size() == 16 && parse_secret_key(sk).x_seed == keys.sk.x_seed;
  return {sizes && seed, "analytic " + std::to_string(signature_size(p)) + " B, serialized " + std::to_string(sig.size()) + " B (" +
                             fmt("%+.1f%%", 100 * (measured / target - 1)) + " vs 33 KB); sk seed " + std::to_string(keys.sk.x_seed.size()) +
                             " B, sk file " + std::to_string(sk.size()) + " B"};
}

Outcome criterion11() {
  oracle::Rng rng(20240601);
  std::size_t snf_ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = static_cast<std::size_t>(rng.range(1, 10)), c = static_cast<std::size_t>(rng.range(1, 12));
    IntMatrix A(r, c);
    for (auto& v : A.entries()) v = rng.big(static_cast<std::size_t>(rng.range(1, 24)));
    if (trial % 4 == 0 && r > 2) A.add_row_multiple(r - 1, 0, Integer(2));
    const auto d = snf(A);
    bool ok = d.P * A * d.Q == d.D && abs(determinant(d.P)) == 1 && abs(determinant(d.Q)) == 1 && d.rank == oracle::rank(A);
    for (std::size_t i = 0; ok && i < d.D.rows(); ++i)
      for (std::size_t j = 0; ok && j < d.D.cols(); ++j) ok = (i == j && i < d.rank) ? d.D(i, j) > 0 : d.D(i, j) == 0;
    for (std::size_t i = 0; ok && i + 1 < d.rank; ++i) ok = mpz_divisible_p(d.divisors[i + 1].get_mpz_t(), d.divisors[i].get_mpz_t());
    snf_ok += ok;
  }

  std::size_t lll_ok = 0, lll_total = 0, babai_ok = 0, lenstra_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = static_cast<std::size_t>(rng.range(1, 6));
    IntMatrix B;
    do B = rng.matrix(k, k, -(1 << 10), 1 << 10);
    while (oracle::rank(B) != k);
    for (const auto& delta : {Rational(3, 4), Rational(99, 100)}) {
      const auto out = lll_reduce({B, std::nullopt}, delta);
      ++lll_total;
      lll_ok += oracle::is_lll_reduced(out.vectors, delta) && oracle::same_lattice(B, out.vectors);
    }
    const auto reduced = lll_reduce({B, std::nullopt}, Rational(3, 4));
    ++lll_total;
    lll_ok += oracle::is_lll_reduced(reduced.vectors, Rational(3, 4)) && oracle::same_lattice(B, reduced.vectors);
    RatVector t(k);
    for (auto& x : t) {
      x = Rational(rng.range(-4000, 4000), rng.range(1, 7));
      x.canonicalize();
    }
    const IntVector v = babai_nearest_plane(reduced, t);
    const auto best = oracle::exact_cvp(reduced.vectors, t);
    babai_ok += oracle::solve_left(B, IntMatrix::from_rows({v})).has_value() && oracle::dist2(v, t) <= Rational(pow2(k)) * best.second;
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = static_cast<std::size_t>(rng.range(1, 4)), n = m + static_cast<std::size_t>(rng.range(1, 12 - static_cast<long>(m)));
    const IntMatrix A = rng.matrix(m, n, -(1 << 10), 1 << 10);
    IntVector x0(n);
    for (auto& v : x0) v = rng.big(20);
    const IntVector d = A * x0;
    const auto via_snf = solve_integer_system(A, d);
    const auto via_lenstra = lenstra_particular_solution(A, d);
    lenstra_ok += via_snf.has_value() && via_lenstra.has_value() && A * *via_lenstra == d && A * via_snf->particular == d;
  }
  return {snf_ok == 500 && lll_ok == lll_total && babai_ok == 200 && lenstra_ok == 200,
          "SNF " + std::to_string(snf_ok) + "/500, LLL checker " + std::to_string(lll_ok) + "/" + std::to_string(lll_total) + ", Babai " +
              std::to_string(babai_ok) + "/200 within 2^(k/2), Lenstra=SNF " + std::to_string(lenstra_ok) + "/200"};
}

Outcome criterion12() {
  const auto p = tiny_params();
  const auto keys = keygen(p, as_bytes("acceptance-collisions"));
  ByteStream rng(std::string_view("ACCEPT12", 8), as_bytes("collide"));
  const std::size_t N = 10000;
  std::vector<std::string> commitments;
  commitments.reserve(N);
  while (commitments.size() < N) {
    const auto c = commit(keys.pk, rng);
    for (std::size_t col = 0; col < p.t && commitments.size() < N; ++col) commitments.push_back(to_hex(canonical_bytes(IntMatrix::column(c.commitment.col_vector(col)))));
  }
  std::sort(commitments.begin(), commitments.end());
  double pairs = 0;
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j < N && commitments[j] == commitments[i]) ++j;
    const double run = static_cast<double>(j - i);
    pairs += run * (run - 1) / 2;
    i = j;
  }
  const double freq = pairs / (static_cast<double>(N) * (N - 1) / 2);
  const double bound = commitment_collision_bound(p).get_d();
  return {freq <= 4 * bound, "pairwise collision frequency " + fmt("%.5f", freq) + " vs 4 x 2^-4 = " + fmt("%.4f", 4 * bound)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"cvp-single-scale-full-solutions", criterion1},       {"cvp-two-scale-half", criterion2},   {"dnc-improvement", criterion3},
      {"cvp-three-scale-trend", criterion4},       {"beta-choice-and-epsilon", criterion5}, {"completeness-and-restarts", criterion6},
      {"special-soundness", criterion7},              {"hvzk-bit-zero", criterion8},           {"guessing-adversary", criterion9},
      {"signature-size", criterion10},                {"exact-algebra-suites", criterion11},   {"commitment-collisions", criterion12},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s criterion %zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
