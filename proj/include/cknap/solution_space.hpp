#pragma once

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cknap/int_matrix.hpp"
#include "cknap/xof.hpp"

namespace cknap {

/// Parses "3", "1/2", "0.25" or "1e-7" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  const auto fail = [&] { return std::invalid_argument("invalid rational: '" + std::string(text) + "'"); };
  if (s.empty()) throw fail();
  Rational q;
  if (s.find('/') != std::string::npos) {
    if (q.set_str(s, 10) != 0) throw fail();
    if (sgn(q.get_den()) == 0) throw fail();
    q.canonicalize();
    return q;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  std::string digits;
  long exponent = 0;
  bool seen_digit = false, seen_point = false;
  for (; pos < s.size() && s[pos] != 'e' && s[pos] != 'E'; ++pos) {
    if (s[pos] == '.' && !seen_point) {
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(s[pos]))) {
      digits.push_back(s[pos]);
      seen_digit = true;
      if (seen_point) --exponent;
    } else {
      throw fail();
    }
  }
  if (!seen_digit) throw fail();
  if (pos < s.size()) {
    const std::string e = s.substr(pos + 1);
    if (e.empty()) throw fail();
    std::size_t used = 0;
    long parsed = 0;
    try {
      parsed = std::stol(e, &used);
    } catch (const std::exception&) {
      throw fail();
    }
    if (used != e.size() || parsed > 100000 || parsed < -100000) throw fail();
    exponent += parsed;
  }
  Integer num(digits, 10), den(1);
  Integer ten(10), scale;
  mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  if (exponent < 0) den = scale; else num *= scale;
  q = Rational(negative ? Integer(-num) : num, den);
  q.canonicalize();
  return q;
}

/// Parses a separator-delimited list of rationals ("1,1/2" or "1:1/2").
inline std::vector<Rational> parse_rational_list(std::string_view text) {
  std::vector<Rational> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ':' || c == ';') {
      out.push_back(parse_rational(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(parse_rational(cur));
  return out;
}

inline std::string format_rational(const Rational& q) { return q.get_str(); }

/// The box S_{a_1..a_k}(n, R): coordinate block j holds integers with exactly a_j * R bits.
class SolutionSpace {
 public:
  SolutionSpace(std::size_t n, std::size_t R, std::vector<Rational> alphas) : n_(n), R_(R), alphas_(std::move(alphas)) {
    if (n_ == 0 || R_ == 0) throw std::invalid_argument("SolutionSpace: n and R must be positive");
    if (alphas_.empty()) throw std::invalid_argument("SolutionSpace: at least one block required");
    if (n_ % alphas_.size() != 0) throw std::invalid_argument("SolutionSpace: block count must divide n");
    for (auto& a : alphas_) {
      a.canonicalize();
      if (sgn(a) <= 0) throw std::invalid_argument("SolutionSpace: alphas must be positive");
      Rational bits = a * Rational(R_);
      if (bits.get_den() != 1) throw std::invalid_argument("SolutionSpace: alpha * R must be an integer");
      bits_.push_back(bits.get_num().get_ui());
    }
  }

  static SolutionSpace from_bits(std::size_t n, std::size_t R, const std::vector<std::size_t>& block_bits) {
    std::vector<Rational> alphas;
    for (auto b : block_bits) alphas.emplace_back(Integer(static_cast<unsigned long>(b)), Integer(static_cast<unsigned long>(R)));
    return {n, R, std::move(alphas)};
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t R() const noexcept { return R_; }
  std::size_t blocks() const noexcept { return alphas_.size(); }
  std::size_t block_size() const noexcept { return n_ / alphas_.size(); }
  const std::vector<Rational>& alphas() const noexcept { return alphas_; }
  const std::vector<std::size_t>& block_bits() const noexcept { return bits_; }
  std::size_t bits_at(std::size_t coord) const { return bits_[coord / block_size()]; }
  std::size_t max_bits() const { return *std::max_element(bits_.begin(), bits_.end()); }

  /// Block j (0-based) as a single-block space of n/k coordinates.
  SolutionSpace block(std::size_t j) const { return {block_size(), R_, {alphas_.at(j)}}; }

  /// "S_{1;1/2}"
  std::string descriptor() const {
    std::ostringstream os;
    os << "S_{";
    for (std::size_t j = 0; j < alphas_.size(); ++j) os << (j ? ";" : "") << alphas_[j].get_str();
    os << '}';
    return os.str();
  }

  bool coordinate_ok(std::size_t coord, const Integer& v) const {
    const std::size_t b = bits_at(coord);
    return sgn(v) > 0 && bit_length(v) == b;
  }

  struct Membership {
    bool member = false;
    std::vector<bool> mask;
    std::size_t satisfied = 0;
  };

  Membership contains(std::span<const Integer> v) const {
    if (v.size() != n_) throw std::invalid_argument("SolutionSpace::contains: length mismatch");
    Membership out{true, std::vector<bool>(n_), 0};
    for (std::size_t i = 0; i < n_; ++i) {
      const bool ok = coordinate_ok(i, v[i]);
      out.mask[i] = ok;
      out.satisfied += ok;
      out.member = out.member && ok;
    }
    return out;
  }

  bool contains_all(std::span<const Integer> v) const {
    if (v.size() != n_) throw std::invalid_argument("SolutionSpace::contains: length mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (!coordinate_ok(i, v[i])) return false;
    return true;
  }

  std::size_t count_satisfied(std::span<const Integer> v) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += coordinate_ok(i, v[i]);
    return s;
  }

  /// Uniform draw, coordinates in order.
  IntVector sample(ByteStream& rng) const {
    IntVector v(n_);
    for (std::size_t i = 0; i < n_; ++i) v[i] = rng.uniform_bits(bits_at(i));
    return v;
  }

  /// t with coordinate i = 2^(b-1) + 2^(b-2), b the bit count of its block.
  IntVector target_vector() const {
    IntVector t(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t b = bits_at(i);
      if (b < 2) throw std::invalid_argument("SolutionSpace::target_vector: block with fewer than 2 bits");
      t[i] = pow2(b - 1) + pow2(b - 2);
    }
    return t;
  }

  friend bool operator==(const SolutionSpace& a, const SolutionSpace& b) {
    return a.n_ == b.n_ && a.R_ == b.R_ && a.alphas_ == b.alphas_;
  }

 private:
  std::size_t n_;
  std::size_t R_;
  std::vector<Rational> alphas_;
  std::vector<std::size_t> bits_;
};

}  // namespace cknap
