#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cknap/int_matrix.hpp"
#include "cknap/params.hpp"
#include "cknap/solution_space.hpp"
#include "cknap/xof.hpp"

namespace cknap {

using ASeed = std::array<std::uint8_t, 32>;
using XSeed = std::array<std::uint8_t, 16>;
using Challenge = std::vector<bool>;

struct PublicKey {
  SchemeParams params;
  ASeed a_seed{};
  IntMatrix A;
  IntVector b;

  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

struct SecretKey {
  SchemeParams params;
  XSeed x_seed{};
  IntVector x;

  friend bool operator==(const SecretKey&, const SecretKey&) = default;
};

struct KeyPair {
  PublicKey pk;
  SecretKey sk;
};

/// A with i.i.d. I_{entry_bits} entries, row-major, from a_seed.
inline IntMatrix expand_matrix(const SchemeParams& p, const ASeed& a_seed) {
  ByteStream rng(std::string_view("CKSEEDA\0", 8), a_seed);
  IntMatrix A(p.m, p.n);
  for (std::size_t r = 0; r < p.m; ++r)
    for (auto& v : A.row(r)) v = rng.uniform_bits(p.entry_bits);
  return A;
}

inline IntVector expand_secret(const SchemeParams& p, const XSeed& x_seed) {
  ByteStream rng(std::string_view("CKSEEDX\0", 8), x_seed);
  return p.S().sample(rng);
}

inline PublicKey make_public_key(const SchemeParams& p, const ASeed& a_seed, IntVector b) {
  p.validate();
  PublicKey pk{p, a_seed, expand_matrix(p, a_seed), std::move(b)};
  if (pk.b.size() != p.m) throw std::invalid_argument("public key: b has wrong length");
  return pk;
}

inline SecretKey make_secret_key(const SchemeParams& p, const XSeed& x_seed) {
  p.validate();
  return {p, x_seed, expand_secret(p, x_seed)};
}

inline KeyPair keygen(const SchemeParams& p, std::span<const std::uint8_t> master_seed) {
  p.validate();
  ByteStream rng(std::string_view("CKKEYGEN", 8), master_seed);
  ASeed a_seed;
  XSeed x_seed;
  rng.fill(a_seed);
  rng.fill(x_seed);
  SecretKey sk = make_secret_key(p, x_seed);
  IntMatrix A = expand_matrix(p, a_seed);
  IntVector b = A * sk.x;
  return {PublicKey{p, a_seed, std::move(A), std::move(b)}, std::move(sk)};
}

struct Commitment {
  IntMatrix nonces;      // K, n x t, columns in S'
  IntMatrix commitment;  // R = A K, m x t
};

struct Transcript {
  IntMatrix commitment;
  Challenge challenge;
  IntMatrix response;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct Verdict {
  bool accepted = false;
  std::string reason;

  explicit operator bool() const noexcept { return accepted; }
  static Verdict accept() { return {true, {}}; }
  static Verdict reject(std::string why) { return {false, std::move(why)}; }
};

namespace detail {

inline IntMatrix sample_columns(const SolutionSpace& space, std::size_t t, ByteStream& rng) {
  IntMatrix M(space.n(), t);
  for (std::size_t c = 0; c < t; ++c) M.set_column(c, space.sample(rng));
  return M;
}

}  // namespace detail

/// Columns k_1..k_t drawn in order from S'.
inline Commitment commit(const PublicKey& pk, ByteStream& rng) {
  IntMatrix K = detail::sample_columns(pk.params.S_prime(), pk.params.t, rng);
  IntMatrix R = pk.A * K;
  return {std::move(K), std::move(R)};
}

inline Commitment commit(const SecretKey&, const PublicKey& pk, ByteStream& rng) { return commit(pk, rng); }

/// s_i = k_i + e_i x.
inline IntMatrix respond(const SecretKey& sk, const IntMatrix& nonces, const Challenge& e) {
  if (e.size() != nonces.cols()) throw std::invalid_argument("respond: challenge length != t");
  if (sk.x.size() != nonces.rows()) throw std::invalid_argument("respond: nonce rows != n");
  IntMatrix S = nonces;
  for (std::size_t c = 0; c < e.size(); ++c)
    if (e[c])
      for (std::size_t r = 0; r < S.rows(); ++r) S(r, c) += sk.x[r];
  return S;
}

/// Columns whose challenge bit is 1 and whose response left S; the signer restarts on any.
inline bool response_in_range(const SchemeParams& p, const IntMatrix& response, const Challenge& e) {
  const SolutionSpace S = p.S();
  for (std::size_t c = 0; c < e.size(); ++c)
    if (e[c] && !S.contains_all(response.col_vector(c))) return false;
  return true;
}

/// A s_i = r_i + e_i b, with s_i in S' when e_i = 0 and s_i in S when e_i = 1.
inline Verdict verify(const PublicKey& pk, const Transcript& tr) {
  const auto& p = pk.params;
  if (tr.commitment.rows() != p.m || tr.commitment.cols() != p.t || tr.response.rows() != p.n || tr.response.cols() != p.t ||
      tr.challenge.size() != p.t)
    throw std::invalid_argument("verify: transcript shape does not match parameters");
  const SolutionSpace S = p.S(), Sp = p.S_prime();
  const IntMatrix AS = pk.A * tr.response;
  for (std::size_t c = 0; c < p.t; ++c) {
    const bool e = tr.challenge[c];
    for (std::size_t r = 0; r < p.m; ++r) {
      const Integer expected = e ? Integer(tr.commitment(r, c) + pk.b[r]) : tr.commitment(r, c);
      if (AS(r, c) != expected) return Verdict::reject("equation fails in column " + std::to_string(c));
    }
    const IntVector s = tr.response.col_vector(c);
    if (!(e ? S : Sp).contains_all(s))
      return Verdict::reject(std::string("response column ") + std::to_string(c) + (e ? " not in S" : " not in S'"));
  }
  return Verdict::accept();
}

/// s_i uniform in S' (e_i = 0) or S (e_i = 1), r_i = A s_i - e_i b.
inline Transcript simulate_transcript(const PublicKey& pk, const Challenge& e, ByteStream& rng) {
  const auto& p = pk.params;
  if (e.size() != p.t) throw std::invalid_argument("simulate_transcript: challenge length != t");
  const SolutionSpace S = p.S(), Sp = p.S_prime();
  IntMatrix response(p.n, p.t);
  for (std::size_t c = 0; c < p.t; ++c) response.set_column(c, (e[c] ? S : Sp).sample(rng));
  IntMatrix commitment = pk.A * response;
  for (std::size_t c = 0; c < p.t; ++c)
    if (e[c])
      for (std::size_t r = 0; r < p.m; ++r) commitment(r, c) -= pk.b[r];
  return {std::move(commitment), e, std::move(response)};
}

struct Extraction {
  IntVector x_hat;
  bool in_S = false;
  std::size_t column = 0;
};

/// Two accepting transcripts on one commitment with different challenges give
/// x_hat = s' - s at a column where the bits differ; A x_hat = b always.
inline Extraction extract_witness(const Transcript& t1, const Transcript& t2, const PublicKey& pk) {
  if (t1.commitment != t2.commitment) throw std::invalid_argument("extract_witness: commitments differ");
  if (t1.challenge == t2.challenge) throw std::invalid_argument("extract_witness: identical challenges");
  if (const auto v = verify(pk, t1); !v) throw std::invalid_argument("extract_witness: first transcript rejected: " + v.reason);
  if (const auto v = verify(pk, t2); !v) throw std::invalid_argument("extract_witness: second transcript rejected: " + v.reason);
  std::size_t j = 0;
  while (t1.challenge[j] == t2.challenge[j]) ++j;
  const Transcript& one = t1.challenge[j] ? t1 : t2;
  const Transcript& zero = t1.challenge[j] ? t2 : t1;
  IntVector x_hat = sub(one.response.col_vector(j), zero.response.col_vector(j));
  if (pk.A * x_hat != pk.b) throw std::logic_error("extract_witness: extracted vector fails A x = b");
  const bool in_S = pk.params.S().contains_all(x_hat);
  return {std::move(x_hat), in_S, j};
}

inline Challenge random_challenge(std::size_t t, ByteStream& rng) {
  Challenge e(t);
  for (std::size_t i = 0; i < t; ++i) e[i] = rng.bit();
  return e;
}

/// The guessing adversary: pick e' at random, answer column i with s from S'
/// (guess 0) or S (guess 1) and r = A s - e'_i b. Passes iff the verifier's e equals e'.
inline Transcript guessing_forgery(const PublicKey& pk, ByteStream& rng, Challenge* guess) {
  Challenge g = random_challenge(pk.params.t, rng);
  Transcript tr = simulate_transcript(pk, g, rng);
  if (guess) *guess = std::move(g);
  return tr;
}

}  // namespace cknap
