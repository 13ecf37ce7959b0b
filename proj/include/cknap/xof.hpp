#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cknap/int_matrix.hpp"

namespace cknap {

using Bytes = std::vector<std::uint8_t>;

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline void append_u32be(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void append_u64be(Bytes& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void append(Bytes& out, std::span<const std::uint8_t> data) { out.insert(out.end(), data.begin(), data.end()); }

/// One-shot SHAKE-256.
class Shake256 {
 public:
  Shake256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_shake256(), nullptr) != 1) throw std::runtime_error("SHAKE256 init failed");
  }

  Shake256& update(std::span<const std::uint8_t> data) {
    if (!data.empty() && EVP_DigestUpdate(ctx_.get(), data.data(), data.size()) != 1) throw std::runtime_error("SHAKE256 update failed");
    return *this;
  }

  Bytes finish(std::size_t out_len) {
    Bytes out(out_len);
    if (out_len == 0) return out;
    if (EVP_DigestFinalXOF(ctx_.get(), out.data(), out_len) != 1) throw std::runtime_error("SHAKE256 finalize failed");
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline Bytes shake256(std::span<const std::uint8_t> data, std::size_t out_len) { return Shake256().update(data).finish(out_len); }

/// Counter-mode byte stream: block i is the first kBlockBytes bytes of
/// SHAKE256(tag || seed || u64be(i)). Tags are exactly eight bytes.
class ByteStream {
 public:
  static constexpr std::size_t kBlockBytes = 136;
  static constexpr std::size_t kTagBytes = 8;

  ByteStream(std::string_view tag, std::span<const std::uint8_t> seed) : seed_(seed.begin(), seed.end()) {
    if (tag.size() != kTagBytes) throw std::invalid_argument("ByteStream: domain tag must be 8 bytes");
    tag_.assign(tag.begin(), tag.end());
  }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      if (pos_ == block_.size()) refill();
      b = block_[pos_++];
    }
  }

  Bytes take(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  std::uint8_t byte() {
    if (pos_ == block_.size()) refill();
    return block_[pos_++];
  }

  /// Uniform integer with exactly `bits` bits, i.e. in [2^(bits-1), 2^bits - 1]:
  /// read ceil(bits/8) bytes big-endian, keep the low `bits` bits, accept iff the top one is set.
  Integer uniform_bits(std::size_t bits) {
    if (bits == 0) throw std::invalid_argument("ByteStream::uniform_bits: bits must be positive");
    const std::size_t len = (bits + 7) / 8;
    Bytes buf(len);
    Integer v;
    for (;;) {
      fill(buf);
      const unsigned excess = static_cast<unsigned>(8 * len - bits);
      buf[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
      const bool top = (buf[0] >> (7 - excess)) & 1u;
      if (!top) continue;
      mpz_import(v.get_mpz_t(), len, 1, 1, 1, 0, buf.data());
      return v;
    }
  }

  bool bit() { return (byte() & 1u) != 0; }

  /// Uniform in [0, bound) by rejection on ceil(log2 bound)-bit chunks.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("ByteStream::below: empty range");
    if (bound == 1) return 0;
    int bits = 64 - __builtin_clzll(bound - 1);
    const std::uint64_t mask = bits == 64 ? ~0ull : ((1ull << bits) - 1);
    for (;;) {
      std::uint64_t v = 0;
      for (int i = 0; i < (bits + 7) / 8; ++i) v = (v << 8) | byte();
      v &= mask;
      if (v < bound) return v;
    }
  }

 private:
  void refill() {
    Bytes input;
    input.reserve(tag_.size() + seed_.size() + 8);
    append(input, tag_);
    append(input, seed_);
    append_u64be(input, counter_++);
    block_ = shake256(input, kBlockBytes);
    pos_ = 0;
  }

  Bytes tag_;
  Bytes seed_;
  Bytes block_;
  std::size_t pos_ = 0;
  std::uint64_t counter_ = 0;
};

/// Independent stream for trial `index` of an experiment seeded by `master`.
inline ByteStream trial_stream(std::uint64_t master, std::uint64_t index) {
  Bytes seed;
  append_u64be(seed, master);
  append_u64be(seed, index);
  return ByteStream(std::string_view("CKTRIAL\0", 8), seed);
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * bytes.size());
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

inline Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2) throw std::invalid_argument("from_hex: odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("from_hex: invalid digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

}  // namespace cknap
