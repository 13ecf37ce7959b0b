#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "cknap/cknap.hpp"

namespace {

using cknap::Bytes;
using nlohmann::json;

// Exit codes: 0 success/accept, 1 reject, 2 usage or parse error, 3 other failure.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

json read_json(const std::string& path) {
  const Bytes raw = read_file(path);
  try {
    return json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Decimal seeds become 8 big-endian bytes; anything else is read as hex.
Bytes seed_bytes(const std::string& text) {
  if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
    Bytes out;
    cknap::append_u64be(out, std::stoull(text));
    return out;
  }
  try {
    return cknap::from_hex(text.starts_with("0x") ? text.substr(2) : text);
  } catch (const std::invalid_argument&) {
    throw UsageError("seed must be a decimal integer or hex string");
  }
}

Bytes fresh_seed() {
  std::random_device rd;
  Bytes out(32);
  for (auto& b : out) b = static_cast<std::uint8_t>(rd());
  return out;
}

cknap::Integer json_integer(const json& j) {
  if (j.is_number_integer()) return cknap::Integer(j.dump());
  if (j.is_string()) {
    cknap::Integer v;
    if (v.set_str(j.get<std::string>(), 10) != 0) throw UsageError("invalid integer '" + j.get<std::string>() + "'");
    return v;
  }
  throw UsageError("expected an integer, got " + j.dump());
}

cknap::IntVector json_vector(const json& j) {
  if (!j.is_array()) throw UsageError("expected an array of integers");
  cknap::IntVector v;
  for (const auto& e : j) v.push_back(json_integer(e));
  return v;
}

json vector_json(const cknap::IntVector& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(e.get_str());
  return out;
}

std::string rationals_text(const std::vector<cknap::Rational>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + cknap::format_rational(v[i]);
  return s;
}

std::vector<cknap::Rational> rationals_from(const json& j) {
  if (j.is_string()) return cknap::parse_rational_list(j.get<std::string>());
  std::vector<cknap::Rational> out;
  for (const auto& e : j) out.push_back(cknap::parse_rational(e.is_string() ? e.get<std::string>() : e.dump()));
  return out;
}

cknap::SchemeParams load_params(const std::string& where) {
  if (!std::filesystem::exists(where)) return cknap::preset_params(where);
  const json j = read_json(where);
  cknap::SchemeParams p;
  try {
    p.n = j.at("n").get<std::size_t>();
    p.m = j.at("m").get<std::size_t>();
    p.R = j.at("R").get<std::size_t>();
    p.t = j.at("t").get<std::size_t>();
    p.alphas = rationals_from(j.at("alphas"));
    p.betas = rationals_from(j.at("betas"));
    p.entry_bits = j.contains("entry_bits") ? j.at("entry_bits").get<std::size_t>() : std::max<std::size_t>(p.R / 8, 1);
  } catch (const json::exception& e) {
    throw UsageError(std::string("parameter file: ") + e.what());
  }
  p.validate();
  return p;
}

json report_json(const cknap::AttackReport& r, const cknap::KnapsackInstance& inst, const std::string& kind) {
  json j;
  j["attack"] = kind;
  j["space"] = inst.space.descriptor();
  j["m"] = inst.m();
  j["n"] = inst.n();
  j["R"] = inst.space.R();
  j["satisfied_coords"] = r.satisfied_coords;
  j["total_coords"] = r.total_coords;
  j["coord_fraction"] = r.coordinate_fraction();
  j["full_solution"] = r.full_solution;
  j["equality_holds"] = r.equality_holds;
  j["shifts"] = r.shifts;
  if (kind == "dnc") j["rhs_draws"] = r.resamples;
  j["candidate"] = vector_json(r.candidate);
  if (inst.planted) j["matches_planted"] = *inst.planted == r.candidate;
  return j;
}

/// "n=50,m=10,R=80,alphas=1:1/2,entry_bits=10,seed=7"
cknap::KnapsackInstance random_instance(const std::string& spec, cknap::ByteStream** rng_out, std::unique_ptr<cknap::ByteStream>& holder) {
  std::size_t n = 50, m = 10, R = 80, entry_bits = 0;
  std::uint64_t seed = 1;
  std::vector<cknap::Rational> alphas{cknap::Rational(1)};
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t end = std::min(spec.find(',', pos), spec.size());
    const std::string item = spec.substr(pos, end - pos);
    pos = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--random: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      if (key == "n") n = std::stoul(value);
      else if (key == "m") m = std::stoul(value);
      else if (key == "R") R = std::stoul(value);
      else if (key == "entry_bits") entry_bits = std::stoul(value);
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "alphas" || key == "space") alphas = cknap::parse_rational_list(value);
      else throw UsageError("--random: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw UsageError("--random: bad value for '" + key + "'");
    }
  }
  if (entry_bits == 0) entry_bits = std::max<std::size_t>(R / 8, 1);
  holder = std::make_unique<cknap::ByteStream>(cknap::trial_stream(seed, 0));
  *rng_out = holder.get();
  return cknap::generate_instance(cknap::SolutionSpace(n, R, alphas), m, entry_bits, *holder);
}

cknap::KnapsackInstance load_instance(const std::string& path) {
  const json j = read_json(path);
  try {
    const auto rows = j.at("A");
    std::vector<cknap::IntVector> A;
    for (const auto& r : rows) A.push_back(json_vector(r));
    if (A.empty()) throw UsageError("instance: A is empty");
    cknap::IntMatrix M = cknap::IntMatrix::from_rows(A);
    cknap::SolutionSpace space(M.cols(), j.at("R").get<std::size_t>(), rationals_from(j.at("alphas")));
    cknap::KnapsackInstance inst{std::move(M), json_vector(j.at("C")), std::move(space), std::nullopt};
    if (j.contains("planted")) inst.planted = json_vector(j.at("planted"));
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw UsageError(std::string("instance file: ") + e.what());
  }
}

void print_error(bool as_json, const std::string& kind, const std::string& message) {
  if (as_json) {
    std::cout << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
}

bool wants_json(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--format=json" || (a == "--format" && i + 1 < argc && std::string(argv[i + 1]) == "json")) return true;
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  const bool json_errors = wants_json(argc, argv);
  CLI::App app{"Compact knapsack toolkit: keys, signatures, lattice attacks and benchmarks"};
  app.require_subcommand(1);
  int exit_code = 0;

  auto* keygen = app.add_subcommand("keygen", "Generate a key pair");
  std::string params_src = "standard", out_pk, out_sk, seed_text;
  keygen->add_option("--params", params_src, "Parameter JSON file or preset (standard, small, tiny)");
  keygen->add_option("--out-pk", out_pk, "Public key output")->required();
  keygen->add_option("--out-sk", out_sk, "Secret key output")->required();
  keygen->add_option("--seed", seed_text, "Master seed (decimal or hex); random when omitted");

  auto* sign = app.add_subcommand("sign", "Sign a file");
  std::string sk_path, pk_path, msg_path, sig_path, sign_seed;
  sign->add_option("--sk", sk_path)->required();
  sign->add_option("--pk", pk_path, "Public key (holds the seed of A)")->required();
  sign->add_option("--msg-file", msg_path)->required();
  sign->add_option("--out", sig_path)->required();
  sign->add_option("--seed", sign_seed, "Nonce seed for reproducible signatures");

  auto* verify = app.add_subcommand("verify", "Verify a signature (exit 0 accept, 1 reject)");
  verify->add_option("--pk", pk_path)->required();
  verify->add_option("--msg-file", msg_path)->required();
  verify->add_option("--sig", sig_path)->required();

  auto* attack = app.add_subcommand("attack", "Run a lattice attack on one instance");
  std::string attack_kind, instance_path, random_spec, betas_text, attack_format = "text";
  std::size_t width = 10;
  std::uint64_t attack_seed = 1;
  attack->add_option("kind", attack_kind, "cvp or dnc")->required()->check(CLI::IsMember({"cvp", "dnc"}));
  auto* inst_opt = attack->add_option("--instance", instance_path, "Instance JSON (A, C, R, alphas, optional planted)");
  auto* rand_opt = attack->add_option("--random", random_spec, "Random instance, e.g. n=50,m=10,R=80,alphas=1:1/2,seed=7");
  inst_opt->excludes(rand_opt);
  attack->add_option("--width", width, "Search width alpha")->check(CLI::PositiveNumber);
  attack->add_option("--dnc-betas", betas_text, "beta_2..beta_k for dnc, e.g. 1/2");
  attack->add_option("--seed", attack_seed, "Seed of the dnc right-hand-side draws for --instance");
  attack->add_option("--format", attack_format)->check(CLI::IsMember({"text", "json"}));

  auto* bench = app.add_subcommand("bench", "Benchmarks");
  auto* tables = bench->add_subcommand("tables", "Attack success tables from a spec file");
  bench->require_subcommand(1);
  std::string spec_path, bench_format = "csv", bench_out;
  std::size_t jobs = 1;
  bool deterministic = false;
  tables->add_option("--spec", spec_path, "Experiment spec JSON")->required();
  tables->add_option("--format", bench_format)->check(CLI::IsMember({"csv", "json"}));
  tables->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  tables->add_option("--out", bench_out, "Write the report here instead of stdout");
  tables->add_flag("--deterministic", deterministic, "Report wall_ms as 0 so output bytes depend only on the spec");

  auto* params = app.add_subcommand("params", "Parameter calculus");
  auto* suggest = params->add_subcommand("suggest", "Choose betas for target epsilons");
  params->require_subcommand(1);
  std::string alphas_text, eps_text, params_format = "text";
  std::size_t R = 0, n_for_completeness = 0;
  suggest->add_option("--alphas", alphas_text)->required();
  suggest->add_option("--R", R)->required()->check(CLI::PositiveNumber);
  suggest->add_option("--epsilon", eps_text, "One value or one per alpha")->required();
  suggest->add_option("--n", n_for_completeness, "Dimension for the completeness figure");
  suggest->add_option("--format", params_format)->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(json_errors, "usage", e.what());
    if (!json_errors) std::cerr << "run with --help for usage\n";
    return 2;
  }

  try {
    if (*keygen) {
      const auto p = load_params(params_src);
      const Bytes seed = seed_text.empty() ? fresh_seed() : seed_bytes(seed_text);
      const auto keys = cknap::keygen(p, seed);
      write_file(out_pk, cknap::serialize_public_key(keys.pk));
      write_file(out_sk, cknap::serialize_secret_key(keys.sk));
      std::cout << "public key " << out_pk << " (" << cknap::serialize_public_key(keys.pk).size() << " bytes), secret key " << out_sk << " ("
                << cknap::serialize_secret_key(keys.sk).size() << " bytes)\n";
    } else if (*sign) {
      const auto sk = cknap::parse_secret_key(read_file(sk_path));
      const auto pk = cknap::parse_public_key(read_file(pk_path));
      const Bytes msg = read_file(msg_path);
      cknap::ByteStream rng(std::string_view("CKSIGRNG", 8), sign_seed.empty() ? fresh_seed() : seed_bytes(sign_seed));
      std::size_t restarts = 0;
      const auto sig = cknap::sign(sk, pk, msg, rng, &restarts);
      const Bytes out = cknap::serialize_signature(pk.params, sig);
      write_file(sig_path, out);
      std::cout << "signature " << sig_path << " (" << out.size() << " bytes, " << restarts << " restarts)\n";
    } else if (*verify) {
      const auto pk = cknap::parse_public_key(read_file(pk_path));
      const auto sig = cknap::parse_signature(pk.params, read_file(sig_path));
      const auto verdict = cknap::verify_signature(pk, read_file(msg_path), sig);
      std::cout << (verdict ? "accept" : "reject: " + verdict.reason) << '\n';
      exit_code = verdict ? 0 : 1;
    } else if (*attack) {
      if (instance_path.empty() == random_spec.empty()) throw UsageError("attack: give exactly one of --instance or --random");
      std::unique_ptr<cknap::ByteStream> holder;
      cknap::ByteStream* rng = nullptr;
      cknap::KnapsackInstance inst = instance_path.empty() ? random_instance(random_spec, &rng, holder) : load_instance(instance_path);
      if (!rng) {
        holder = std::make_unique<cknap::ByteStream>(cknap::trial_stream(attack_seed, 0));
        rng = holder.get();
      }
      cknap::AttackConfig cfg{width, std::nullopt};
      if (!betas_text.empty()) cfg.dnc_betas = cknap::parse_rational_list(betas_text);
      const auto report = attack_kind == "cvp" ? cknap::cvp_attack(inst, cfg) : cknap::divide_and_conquer_attack(inst, cfg, *rng);
      const json j = report_json(report, inst, attack_kind);
      if (attack_format == "json") {
        std::cout << j.dump() << '\n';
      } else {
        std::cout << attack_kind << " attack on " << inst.space.descriptor() << ", m=" << inst.m() << ", n=" << inst.n() << '\n'
                  << "satisfied " << report.satisfied_coords << "/" << report.total_coords << ", full solution "
                  << (report.full_solution ? "yes" : "no") << ", equation " << (report.equality_holds ? "holds" : "fails") << '\n';
      }
    } else if (*tables) {
      const auto spec = cknap::spec_from_json(read_json(spec_path));
      const auto report = cknap::run_experiment(spec, {jobs, deterministic});
      const std::string text = bench_format == "csv" ? cknap::report_csv(report) : cknap::report_json(report);
      if (bench_out.empty()) {
        std::cout << text;
      } else {
        write_file(bench_out, cknap::as_bytes(text));
      }
    } else if (*suggest) {
      const auto alphas = cknap::parse_rational_list(alphas_text);
      const auto eps = cknap::parse_rational_list(eps_text);
      const auto best = cknap::choose_betas(alphas, R, eps);
      const auto dyadic = cknap::power_of_two_betas(alphas, R, best);
      const auto describe = [&](const cknap::BetaChoice& c) {
        json j;
        j["betas"] = rationals_text(c.betas);
        j["beta_R"] = c.beta_bits;
        json e = json::array();
        for (const auto& q : c.epsilons) e.push_back({{"exact", q.get_str()}, {"approx", q.get_d()}});
        j["epsilons"] = e;
        if (n_for_completeness) {
          cknap::SchemeParams p{n_for_completeness, 1, R, alphas, c.betas, 1, 1, "SHAKE256"};
          p.validate();
          j["completeness"] = cknap::completeness_probability(p).get_d();
          j["collision_bound"] = cknap::commitment_collision_bound(p).get_d();
        }
        return j;
      };
      json out{{"alphas", rationals_text(alphas)}, {"R", R}, {"candidates", {describe(best), describe(dyadic)}}};
      out["candidates"][0]["kind"] = "maximal";
      out["candidates"][1]["kind"] = "power_of_two";
      if (params_format == "json") {
        std::cout << out.dump() << '\n';
      } else {
        for (const auto& c : out["candidates"]) {
          std::cout << c["kind"].get<std::string>() << ": betas " << c["betas"].get<std::string>() << " (beta R = " << c["beta_R"].dump() << ")";
          for (const auto& e : c["epsilons"]) std::cout << ", eps " << e["approx"].get<double>();
          if (c.contains("completeness")) std::cout << ", completeness " << c["completeness"].get<double>();
          std::cout << '\n';
        }
      }
    }
  } catch (const UsageError& e) {
    print_error(json_errors, "usage", e.what());
    return 2;
  } catch (const cknap::FormatError& e) {
    print_error(json_errors, "format", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    print_error(json_errors, "invalid_argument", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(json_errors, "failure", e.what());
    return 3;
  }
  return exit_code;
}
