#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "cknap/signature.hpp"

using namespace cknap;
using nlohmann::json;

namespace {

const json& golden() {
  static const json j = [] {
    std::ifstream in(CKNAP_GOLDEN_FILE);
    if (!in) throw std::runtime_error("cannot open golden vectors");
    return json::parse(in);
  }();
  return j;
}

IntMatrix matrix_from(const json& rows) {
  IntMatrix M(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < M.rows(); ++r)
    for (std::size_t c = 0; c < M.cols(); ++c) M(r, c) = Integer(rows[r][c].get<std::string>());
  return M;
}

IntVector vector_from(const json& xs) {
  IntVector v;
  for (const auto& x : xs) v.emplace_back(x.get<std::string>());
  return v;
}

std::string bit_string(const Challenge& e) {
  std::string s;
  for (bool b : e) s.push_back(b ? '1' : '0');
  return s;
}

ByteStream rng_for(std::string_view label) { return ByteStream(std::string_view("TESTRNG\0", 8), as_bytes(label)); }

}  // namespace

TEST(Golden, TwosComplement) {
  for (const auto& item : golden()["twos_complement"]) {
    const Integer v(item[0].get<std::string>());
    EXPECT_EQ(to_hex(twos_complement_bytes(v)), item[1].get<std::string>()) << v;
    EXPECT_EQ(from_twos_complement(from_hex(item[1].get<std::string>())), v);
  }
}

TEST(Golden, CanonicalBytes) {
  for (const auto& item : golden()["canonical"]) {
    const IntMatrix M = matrix_from(item["rows"]);
    const std::string hex = item["hex"];
    EXPECT_EQ(to_hex(canonical_bytes(M)), hex);
    EXPECT_EQ(parse_canonical(from_hex(hex)), M);
  }
}

TEST(Golden, ByteStreams) {
  EXPECT_EQ(to_hex(trial_stream(1, 0).take(300)), golden()["trial_stream_1_0"].get<std::string>());
  auto s = trial_stream(7, 3);
  for (const auto& item : golden()["uniform_bits_7_3"])
    EXPECT_EQ(s.uniform_bits(item[0].get<std::size_t>()), Integer(item[1].get<std::string>()));
  auto b = trial_stream(2, 5);
  std::string bits;
  for (int i = 0; i < 64; ++i) bits.push_back(b.bit() ? '1' : '0');
  EXPECT_EQ(bits, golden()["bits_2_5"].get<std::string>());
}

TEST(Golden, Challenges) {
  for (const auto& item : golden()["challenges"]) {
    const IntMatrix R = matrix_from(item["rows"]);
    const Bytes msg = from_hex(item["msg"].get<std::string>());
    ChallengeHashConfig cfg;
    cfg.t = item["t"];
    EXPECT_EQ(bit_string(derive_challenge(cfg, R, msg)), item["bits"].get<std::string>());
  }
}

TEST(Golden, KeysAndSignature) {
  for (const auto& [name, params] : {std::pair{"tiny_keys", tiny_params()}, std::pair{"small_keys", small_params()}}) {
    const auto& g = golden()[name];
    const Bytes master = from_hex(g["master_seed"].get<std::string>());
    const auto keys = keygen(params, master);
    EXPECT_EQ(to_hex(keys.pk.a_seed), g["a_seed"].get<std::string>());
    EXPECT_EQ(to_hex(keys.sk.x_seed), g["x_seed"].get<std::string>());
    EXPECT_EQ(keys.pk.A, matrix_from(g["A"]));
    EXPECT_EQ(keys.sk.x, vector_from(g["x"]));
    EXPECT_EQ(keys.pk.b, vector_from(g["b"]));
    EXPECT_EQ(to_hex(serialize_public_key(keys.pk)), g["pk"].get<std::string>());
    EXPECT_EQ(to_hex(serialize_secret_key(keys.sk)), g["sk"].get<std::string>());
  }
  const auto& gs = golden()["small_signature"];
  const auto keys = keygen(small_params(), from_hex(golden()["small_keys"]["master_seed"].get<std::string>()));
  ByteStream rng(std::string_view("CKSIGRNG", 8), from_hex(gs["rng_seed"].get<std::string>()));
  const Bytes msg = from_hex(gs["msg"].get<std::string>());
  std::size_t restarts = 99;
  const Signature sig = sign(keys.sk, keys.pk, msg, rng, &restarts);
  EXPECT_EQ(restarts, gs["restarts"].get<std::size_t>());
  EXPECT_EQ(sig.commitment, matrix_from(gs["commitment"]));
  EXPECT_EQ(sig.response, matrix_from(gs["response"]));
  EXPECT_EQ(bit_string(derive_challenge(challenge_config(small_params()), sig.commitment, msg)), gs["challenge"].get<std::string>());
}

TEST(Encoding, RejectsMalformedInput) {
  EXPECT_THROW(from_twos_complement({}), FormatError);
  Bytes good = canonical_bytes(IntMatrix{{5}});
  Bytes padded = good;
  padded[15] = 2;  // length 2 with a redundant leading zero
  padded.insert(padded.begin() + 16, 0);
  EXPECT_THROW(parse_canonical(padded), FormatError);
  Bytes truncated(good.begin(), good.end() - 1);
  EXPECT_THROW(parse_canonical(truncated), FormatError);
  Bytes trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(parse_canonical(trailing), FormatError);
  Bytes magic = good;
  magic[0] = 'X';
  EXPECT_THROW(parse_canonical(magic), FormatError);
}

TEST(Challenge, DeterministicAndSensitive) {
  const auto keys = keygen(standard_params(), as_bytes("challenge"));
  auto rng = rng_for("challenge");
  const auto c = commit(keys.pk, rng);
  const auto cfg = challenge_config(standard_params());
  const Bytes msg = Bytes(as_bytes("message").begin(), as_bytes("message").end());
  EXPECT_EQ(derive_challenge(cfg, c.commitment, msg), derive_challenge(cfg, c.commitment, msg));
  EXPECT_EQ(derive_challenge(cfg, c.commitment, msg).size(), 80u);
  Bytes longer = msg;
  longer.push_back(0);
  EXPECT_NE(derive_challenge(cfg, c.commitment, msg), derive_challenge(cfg, c.commitment, longer));
}

TEST(Challenge, Avalanche) {
  const std::size_t t = 80, trials = 1000;
  ChallengeHashConfig cfg;
  cfg.t = t;
  const IntMatrix R{{1, 2}, {3, 4}};
  auto rng = rng_for("avalanche");
  double sum = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    Bytes msg = rng.take(32);
    const auto e1 = derive_challenge(cfg, R, msg);
    msg[rng.below(32)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    const auto e2 = derive_challenge(cfg, R, msg);
    std::size_t d = 0;
    for (std::size_t j = 0; j < t; ++j) d += e1[j] != e2[j];
    sum += static_cast<double>(d);
  }
  const double mean = sum / trials, sigma = std::sqrt(t / 4.0 / trials);
  EXPECT_NEAR(mean, t / 2.0, 5 * sigma);
}

TEST(Signature, SignVerifyAndTamper) {
  const auto keys = keygen(small_params(), as_bytes("sig"));
  auto rng = rng_for("sig");
  const Bytes msg = rng.take(40);
  const Signature sig = sign(keys.sk, keys.pk, msg, rng);
  EXPECT_TRUE(verify_signature(keys.pk, msg, sig));
  EXPECT_NE(sign(keys.sk, keys.pk, msg, rng), sig);

  std::size_t false_accepts = 0;
  for (std::size_t i = 0; i < msg.size(); ++i) {
    Bytes flipped = msg;
    flipped[i] ^= 0x01;
    false_accepts += verify_signature(keys.pk, flipped, sig).accepted;
  }
  EXPECT_EQ(false_accepts, 0u);

  Signature swapped = sig;
  const IntVector c0 = swapped.response.col_vector(0), c1 = swapped.response.col_vector(1);
  ASSERT_NE(c0, c1);
  swapped.response.set_column(0, c1);
  swapped.response.set_column(1, c0);
  EXPECT_FALSE(verify_signature(keys.pk, msg, swapped));

  Signature wrong_shape{IntMatrix(1, 1), IntMatrix(1, 1)};
  EXPECT_FALSE(verify_signature(keys.pk, msg, wrong_shape));
}

TEST(Signature, RestartBudgetSignalsMisparameterisation) {
  // beta R = alpha R - 1 keeps the overflow bound but makes e_i = 1 columns
  // leave S with probability close to 3/4 per coordinate.
  const SchemeParams p{16, 1, 8, {Rational(1)}, {Rational(7, 8)}, 64, 4, "SHAKE256"};
  const auto keys = keygen(p, as_bytes("budget"));
  auto rng = rng_for("budget");
  EXPECT_THROW(sign(keys.sk, keys.pk, as_bytes("m"), rng), SigningBudgetError);
}

TEST(Serialization, KeysRoundTrip) {
  for (int i = 0; i < 200; ++i) {
    const SchemeParams p = i % 3 == 0 ? standard_params() : i % 3 == 1 ? small_params() : tiny_params();
    const auto keys = keygen(p, as_bytes("round-trip-" + std::to_string(i)));
    const Bytes pk = serialize_public_key(keys.pk), sk = serialize_secret_key(keys.sk);
    EXPECT_EQ(parse_public_key(pk), keys.pk);
    EXPECT_EQ(parse_secret_key(sk), keys.sk);
    EXPECT_EQ(serialize_public_key(parse_public_key(pk)), pk);
    EXPECT_EQ(serialize_secret_key(parse_secret_key(sk)), sk);
  }
}

TEST(Serialization, SignaturesRoundTripAndSizeMatchesLayout) {
  auto rng = rng_for("sig-round-trip");
  for (const auto& p : {small_params(), tiny_params(), standard_params()}) {
    const auto keys = keygen(p, as_bytes("layout"));
    const int count = p.n > 10 ? 20 : 140;
    for (int i = 0; i < count; ++i) {
      const Bytes msg = rng.take(1 + i % 17);
      const Signature sig = sign(keys.sk, keys.pk, msg, rng);
      const Bytes data = serialize_signature(p, sig);
      EXPECT_EQ(data.size(), signature_size(p));
      const Signature back = parse_signature(p, data);
      EXPECT_EQ(back, sig);
      EXPECT_EQ(serialize_signature(p, back), data);
      EXPECT_TRUE(verify_signature(keys.pk, msg, back));
    }
  }
}

TEST(Serialization, StandardSizes) {
  EXPECT_EQ(signature_size(standard_params()), 39698u);
  EXPECT_EQ(sizeof(XSeed), 16u);
  const auto keys = keygen(standard_params(), as_bytes("sizes"));
  EXPECT_EQ(serialize_secret_key(keys.sk).size(), 6 + 4 * (5 + 2 + 2 + 1) + 16);
}

TEST(Serialization, MalformedFilesRaiseFormatError) {
  const auto keys = keygen(tiny_params(), as_bytes("malformed"));
  auto rng = rng_for("malformed");
  const Bytes pk = serialize_public_key(keys.pk), sk = serialize_secret_key(keys.sk);
  const Bytes sig = serialize_signature(tiny_params(), sign(keys.sk, keys.pk, as_bytes("m"), rng));
  for (const Bytes* data : {&pk, &sk, &sig}) {
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, data->size() / 2, data->size() - 1}) {
      const Bytes part(data->begin(), data->begin() + static_cast<std::ptrdiff_t>(cut));
      const auto parse = [&] {
        if (data == &pk) parse_public_key(part);
        else if (data == &sk) parse_secret_key(part);
        else parse_signature(tiny_params(), part);
      };
      EXPECT_THROW(parse(), FormatError);
    }
  }
  Bytes bad_version = pk;
  bad_version[5] = 2;
  EXPECT_THROW(parse_public_key(bad_version), FormatError);
  EXPECT_THROW(parse_signature(small_params(), sig), FormatError);
  Bytes bad_params = sk;
  bad_params[6 + 4 * 5 + 3] = 0;  // alpha_1 R = 0
  EXPECT_THROW(parse_secret_key(bad_params), FormatError);
}

TEST(Serialization, OutOfRangeEntriesAreRefused) {
  const auto p = tiny_params();
  Signature sig{IntMatrix(p.m, p.t), IntMatrix(p.n, p.t)};
  sig.response(0, 0) = -1;
  EXPECT_THROW(serialize_signature(p, sig), std::invalid_argument);
  sig.response(0, 0) = 256;
  EXPECT_THROW(serialize_signature(p, sig), std::invalid_argument);
}
