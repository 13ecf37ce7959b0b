#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "cknap/embedding.hpp"
#include "cknap/int_matrix.hpp"
#include "cknap/params.hpp"
#include "cknap/sigma.hpp"
#include "cknap/xof.hpp"

namespace cknap {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SigningBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChallengeHashConfig {
  std::string algorithm_id = "SHAKE256";
  std::string domain_tag = std::string("CKSIGv1\0", 8);
  std::size_t t = 0;
};

inline ChallengeHashConfig challenge_config(const SchemeParams& p) { return {"SHAKE256", std::string("CKSIGv1\0", 8), p.t}; }

struct Signature {
  IntMatrix commitment;  // m x t
  IntMatrix response;    // n x t

  friend bool operator==(const Signature&, const Signature&) = default;
};

/// Minimal big-endian two's complement, at least one byte.
inline Bytes twos_complement_bytes(const Integer& v) {
  const Integer magnitude = sgn(v) >= 0 ? v : Integer(-v - 1);
  const std::size_t len = bit_length(magnitude) / 8 + 1;
  Integer u = v;
  if (sgn(u) < 0) u += pow2(8 * len);
  Bytes out(len, 0);
  std::size_t written = 0;
  Bytes raw((bit_length(u) + 7) / 8 + 1);
  mpz_export(raw.data(), &written, 1, 1, 1, 0, u.get_mpz_t());
  std::copy(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(written), out.end() - static_cast<std::ptrdiff_t>(written));
  return out;
}

inline Integer from_twos_complement(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw FormatError("empty integer encoding");
  Integer v;
  mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  if (bytes[0] & 0x80u) v -= pow2(8 * bytes.size());
  return v;
}

/// "CKR1" || u32 rows || u32 cols || per entry (row-major): u32 length || two's complement bytes.
inline Bytes canonical_bytes(const IntMatrix& M) {
  Bytes out;
  append(out, as_bytes("CKR1"));
  append_u32be(out, static_cast<std::uint32_t>(M.rows()));
  append_u32be(out, static_cast<std::uint32_t>(M.cols()));
  for (const auto& v : M.entries()) {
    const Bytes e = twos_complement_bytes(v);
    append_u32be(out, static_cast<std::uint32_t>(e.size()));
    append(out, e);
  }
  return out;
}

/// Bounds-checked cursor over a byte buffer.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > data_.size() - pos_) throw FormatError("truncated input");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32() {
    auto s = take(4);
    return static_cast<std::uint32_t>(s[0]) << 24 | static_cast<std::uint32_t>(s[1]) << 16 | static_cast<std::uint32_t>(s[2]) << 8 | s[3];
  }

  std::uint8_t u8() { return take(1)[0]; }

  void expect(std::string_view magic) {
    auto s = take(magic.size());
    if (!std::equal(s.begin(), s.end(), magic.begin(), [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); }))
      throw FormatError("bad magic, expected " + std::string(magic));
  }

  bool done() const noexcept { return pos_ == data_.size(); }
  void finish() const {
    if (!done()) throw FormatError("trailing bytes");
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline IntMatrix parse_canonical(Reader& in) {
  in.expect("CKR1");
  const std::size_t rows = in.u32(), cols = in.u32();
  if (rows > (1u << 20) || cols > (1u << 20) || rows * cols > (1u << 24)) throw FormatError("matrix too large");
  IntMatrix M(rows, cols);
  for (auto& v : M.entries()) {
    const std::size_t len = in.u32();
    auto bytes = in.take(len);
    v = from_twos_complement(bytes);
    if (twos_complement_bytes(v).size() != len) throw FormatError("non-minimal integer encoding");
  }
  return M;
}

inline IntMatrix parse_canonical(std::span<const std::uint8_t> data) {
  Reader in(data);
  IntMatrix M = parse_canonical(in);
  in.finish();
  return M;
}

/// e_i = bit (i mod 8) of byte floor(i/8) of SHAKE256(tag || canonical(R) || u64be(|msg|) || msg).
inline Challenge derive_challenge(const ChallengeHashConfig& cfg, const IntMatrix& commitment, std::span<const std::uint8_t> msg) {
  if (cfg.algorithm_id != "SHAKE256") throw std::invalid_argument("derive_challenge: unsupported hash " + cfg.algorithm_id);
  Bytes len;
  append_u64be(len, msg.size());
  const Bytes digest = Shake256()
                           .update(as_bytes(cfg.domain_tag))
                           .update(canonical_bytes(commitment))
                           .update(len)
                           .update(msg)
                           .finish((cfg.t + 7) / 8);
  Challenge e(cfg.t);
  for (std::size_t i = 0; i < cfg.t; ++i) e[i] = (digest[i / 8] >> (i % 8)) & 1u;
  return e;
}

inline constexpr std::size_t kSignRestartBudget = 1000;

/// Commit, hash, respond; restart with fresh nonces whenever a challenged column leaves S.
inline Signature sign(const SecretKey& sk, const PublicKey& pk, std::span<const std::uint8_t> msg, ByteStream& rng,
                      std::size_t* restarts = nullptr) {
  if (!(sk.params == pk.params)) throw std::invalid_argument("sign: key parameters differ");
  const auto cfg = challenge_config(pk.params);
  for (std::size_t attempt = 0; attempt < kSignRestartBudget; ++attempt) {
    Commitment c = commit(sk, pk, rng);
    const Challenge e = derive_challenge(cfg, c.commitment, msg);
    IntMatrix S = respond(sk, c.nonces, e);
    if (response_in_range(pk.params, S, e)) {
      if (restarts) *restarts = attempt;
      return {std::move(c.commitment), std::move(S)};
    }
  }
  throw SigningBudgetError("sign: restart budget exhausted; parameters give too low completeness");
}

inline Verdict verify_signature(const PublicKey& pk, std::span<const std::uint8_t> msg, const Signature& sig) {
  const auto& p = pk.params;
  if (sig.commitment.rows() != p.m || sig.commitment.cols() != p.t || sig.response.rows() != p.n || sig.response.cols() != p.t)
    return Verdict::reject("signature shape does not match parameters");
  Transcript tr{sig.commitment, derive_challenge(challenge_config(p), sig.commitment, msg), sig.response};
  return verify(pk, tr);
}

// Key files.

inline constexpr std::uint8_t kFormatVersion = 1;

inline void append_params(Bytes& out, const SchemeParams& p) {
  append_u32be(out, static_cast<std::uint32_t>(p.n));
  append_u32be(out, static_cast<std::uint32_t>(p.m));
  append_u32be(out, static_cast<std::uint32_t>(p.R));
  append_u32be(out, static_cast<std::uint32_t>(p.t));
  append_u32be(out, static_cast<std::uint32_t>(p.k()));
  for (auto b : p.alpha_bits()) append_u32be(out, static_cast<std::uint32_t>(b));
  for (auto b : p.beta_bits()) append_u32be(out, static_cast<std::uint32_t>(b));
  append_u32be(out, static_cast<std::uint32_t>(p.entry_bits));
}

inline SchemeParams parse_params(Reader& in) {
  SchemeParams p;
  p.n = in.u32();
  p.m = in.u32();
  p.R = in.u32();
  p.t = in.u32();
  const std::size_t k = in.u32();
  if (k == 0 || k > 4096 || p.R == 0) throw FormatError("invalid parameter block");
  std::vector<std::size_t> a(k), b(k);
  for (auto& v : a) v = in.u32();
  for (auto& v : b) v = in.u32();
  p.entry_bits = in.u32();
  const auto to_rational = [&](std::size_t bits) {
    Rational q(Integer(static_cast<unsigned long>(bits)), Integer(static_cast<unsigned long>(p.R)));
    q.canonicalize();
    return q;
  };
  for (std::size_t i = 0; i < k; ++i) {
    p.alphas.push_back(to_rational(a[i]));
    p.betas.push_back(to_rational(b[i]));
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid parameters: ") + e.what());
  }
  return p;
}

inline Bytes serialize_public_key(const PublicKey& pk) {
  Bytes out;
  append(out, as_bytes("CKPK1"));
  out.push_back(kFormatVersion);
  append_params(out, pk.params);
  append(out, pk.a_seed);
  append(out, canonical_bytes(IntMatrix::column(pk.b)));
  return out;
}

inline PublicKey parse_public_key(std::span<const std::uint8_t> data) {
  Reader in(data);
  in.expect("CKPK1");
  if (in.u8() != kFormatVersion) throw FormatError("unsupported public key version");
  SchemeParams p = parse_params(in);
  ASeed a_seed;
  auto s = in.take(a_seed.size());
  std::copy(s.begin(), s.end(), a_seed.begin());
  const IntMatrix b = parse_canonical(in);
  in.finish();
  if (b.rows() != p.m || b.cols() != 1) throw FormatError("public key vector has wrong shape");
  return make_public_key(p, a_seed, b.col_vector(0));
}

inline Bytes serialize_secret_key(const SecretKey& sk) {
  Bytes out;
  append(out, as_bytes("CKSK1"));
  out.push_back(kFormatVersion);
  append_params(out, sk.params);
  append(out, sk.x_seed);
  return out;
}

inline SecretKey parse_secret_key(std::span<const std::uint8_t> data) {
  Reader in(data);
  in.expect("CKSK1");
  if (in.u8() != kFormatVersion) throw FormatError("unsupported secret key version");
  SchemeParams p = parse_params(in);
  XSeed x_seed;
  auto s = in.take(x_seed.size());
  std::copy(s.begin(), s.end(), x_seed.begin());
  in.finish();
  return make_secret_key(p, x_seed);
}

// Signature files: header then fixed-width entries. Commitment entries are
// signed with enough room for A s - b, s in S; response entries in block j
// are unsigned with ceil(alpha_j R / 8) bytes.

struct SignatureLayout {
  std::size_t header_bytes = 0;
  std::size_t commitment_entry_bytes = 0;
  std::vector<std::size_t> response_block_bytes;
  std::size_t total = 0;
};

inline SignatureLayout signature_layout(const SchemeParams& p) {
  SignatureLayout L;
  L.header_bytes = 5 + 1 + 3 * 4;
  const auto a = p.alpha_bits();
  const std::size_t max_alpha = *std::max_element(a.begin(), a.end());
  L.commitment_entry_bytes = (p.entry_bits + max_alpha + ceil_log2(p.n) + 1 + 1 + 7) / 8;
  std::size_t per_column = 0;
  for (auto bits : a) {
    L.response_block_bytes.push_back((bits + 7) / 8);
    per_column += (p.n / p.k()) * ((bits + 7) / 8);
  }
  L.total = L.header_bytes + p.m * p.t * L.commitment_entry_bytes + p.t * per_column;
  return L;
}

inline std::size_t signature_size(const SchemeParams& p) { return signature_layout(p).total; }

namespace detail {

inline void put_fixed(Bytes& out, const Integer& v, std::size_t width, bool is_signed) {
  Integer u = v;
  if (is_signed) {
    const Integer half = pow2(8 * width - 1);
    if (v >= half || v < -half) throw std::invalid_argument("signature entry does not fit its field");
    if (sgn(u) < 0) u += pow2(8 * width);
  } else if (sgn(v) < 0 || bit_length(v) > 8 * width) {
    throw std::invalid_argument("signature entry does not fit its field");
  }
  Bytes buf(width, 0);
  std::size_t written = 0;
  Bytes raw(width + 1);
  mpz_export(raw.data(), &written, 1, 1, 1, 0, u.get_mpz_t());
  std::copy(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(written), buf.end() - static_cast<std::ptrdiff_t>(written));
  append(out, buf);
}

inline Integer get_fixed(Reader& in, std::size_t width, bool is_signed) {
  auto bytes = in.take(width);
  Integer v;
  mpz_import(v.get_mpz_t(), width, 1, 1, 1, 0, bytes.data());
  if (is_signed && (bytes[0] & 0x80u)) v -= pow2(8 * width);
  return v;
}

}  // namespace detail

inline Bytes serialize_signature(const SchemeParams& p, const Signature& sig) {
  if (sig.commitment.rows() != p.m || sig.commitment.cols() != p.t || sig.response.rows() != p.n || sig.response.cols() != p.t)
    throw std::invalid_argument("serialize_signature: shape does not match parameters");
  const SignatureLayout L = signature_layout(p);
  Bytes out;
  out.reserve(L.total);
  append(out, as_bytes("CKSG1"));
  out.push_back(kFormatVersion);
  append_u32be(out, static_cast<std::uint32_t>(p.m));
  append_u32be(out, static_cast<std::uint32_t>(p.n));
  append_u32be(out, static_cast<std::uint32_t>(p.t));
  for (const auto& v : sig.commitment.entries()) detail::put_fixed(out, v, L.commitment_entry_bytes, true);
  const std::size_t block = p.n / p.k();
  for (std::size_t r = 0; r < p.n; ++r)
    for (std::size_t c = 0; c < p.t; ++c) detail::put_fixed(out, sig.response(r, c), L.response_block_bytes[r / block], false);
  return out;
}

inline Signature parse_signature(const SchemeParams& p, std::span<const std::uint8_t> data) {
  const SignatureLayout L = signature_layout(p);
  Reader in(data);
  in.expect("CKSG1");
  if (in.u8() != kFormatVersion) throw FormatError("unsupported signature version");
  if (in.u32() != p.m || in.u32() != p.n || in.u32() != p.t) throw FormatError("signature dimensions do not match the public key");
  Signature sig{IntMatrix(p.m, p.t), IntMatrix(p.n, p.t)};
  for (auto& v : sig.commitment.entries()) v = detail::get_fixed(in, L.commitment_entry_bytes, true);
  const std::size_t block = p.n / p.k();
  for (std::size_t r = 0; r < p.n; ++r)
    for (std::size_t c = 0; c < p.t; ++c) sig.response(r, c) = detail::get_fixed(in, L.response_block_bytes[r / block], false);
  in.finish();
  return sig;
}

}  // namespace cknap
