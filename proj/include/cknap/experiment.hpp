#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cknap/attacks.hpp"
#include "cknap/solution_space.hpp"
#include "cknap/xof.hpp"

namespace cknap {

enum class AttackKind { cvp, dnc };

inline std::string to_string(AttackKind k) { return k == AttackKind::cvp ? "cvp" : "dnc"; }

inline AttackKind parse_attack_kind(std::string_view s) {
  if (s == "cvp") return AttackKind::cvp;
  if (s == "dnc") return AttackKind::dnc;
  throw std::invalid_argument("unknown attack kind '" + std::string(s) + "' (expected cvp or dnc)");
}

struct ExperimentSpec {
  std::size_t n = 50;
  std::vector<std::size_t> m_list;
  std::size_t R = 80;
  std::vector<std::vector<Rational>> spaces;
  std::size_t entry_bits = 10;
  std::size_t trials = 20;
  std::size_t search_width = 10;
  AttackKind attack = AttackKind::cvp;
  std::uint64_t master_seed = 1;
  std::optional<std::vector<Rational>> dnc_betas;

  /// Throws std::invalid_argument on an infeasible spec.
  void validate() const {
    if (trials == 0) throw std::invalid_argument("spec: trials must be >= 1");
    if (m_list.empty()) throw std::invalid_argument("spec: m_list must be nonempty");
    if (spaces.empty()) throw std::invalid_argument("spec: at least one space required");
    if (entry_bits == 0) throw std::invalid_argument("spec: entry_bits must be positive");
    if (search_width == 0) throw std::invalid_argument("spec: search_width must be >= 1");
    for (const auto& alphas : spaces) {
      const SolutionSpace S(n, R, alphas);
      S.target_vector();
      for (auto m : m_list) {
        if (m == 0 || m >= n) throw std::invalid_argument("spec: every m must satisfy 0 < m < n");
        if (attack == AttackKind::dnc && m >= S.block_size()) throw std::invalid_argument("spec: dnc needs m < n/k");
      }
    }
  }
};

namespace detail {

inline std::string alphas_text(const std::vector<Rational>& alphas) {
  std::string s;
  for (std::size_t i = 0; i < alphas.size(); ++i) s += (i ? "," : "") + format_rational(alphas[i]);
  return s;
}

inline std::vector<Rational> alphas_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_rational_list(j.get<std::string>());
  if (j.is_array()) {
    std::vector<Rational> out;
    for (const auto& e : j) out.push_back(e.is_string() ? parse_rational(e.get<std::string>()) : parse_rational(e.dump()));
    return out;
  }
  if (j.is_number()) return {parse_rational(j.dump())};
  throw std::invalid_argument("spec: a space must be a string like \"1,1/2\" or an array");
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["n"] = s.n;
  j["m_list"] = s.m_list;
  j["R"] = s.R;
  j["spaces"] = nlohmann::json::array();
  for (const auto& a : s.spaces) j["spaces"].push_back(detail::alphas_text(a));
  j["entry_bits"] = s.entry_bits;
  j["trials"] = s.trials;
  j["search_width"] = s.search_width;
  j["attack"] = to_string(s.attack);
  j["master_seed"] = s.master_seed;
  if (s.dnc_betas) j["dnc_betas"] = detail::alphas_text(*s.dnc_betas);
  return j;
}

/// Reads a spec object; "space" (one) or "spaces" (several), entry_bits defaults to R/8.
inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("spec: expected a JSON object");
  static const std::vector<std::string> known = {"n", "m_list", "R", "space", "spaces", "entry_bits", "trials", "search_width",
                                                 "attack", "master_seed", "dnc_betas", "description"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw std::invalid_argument("spec: unknown field '" + key + "'");
  ExperimentSpec s;
  try {
    s.n = j.at("n").get<std::size_t>();
    s.m_list = j.at("m_list").get<std::vector<std::size_t>>();
    s.R = j.at("R").get<std::size_t>();
    if (j.contains("spaces")) {
      for (const auto& e : j.at("spaces")) s.spaces.push_back(detail::alphas_from_json(e));
    } else {
      s.spaces.push_back(detail::alphas_from_json(j.at("space")));
    }
    s.entry_bits = j.contains("entry_bits") ? j.at("entry_bits").get<std::size_t>() : std::max<std::size_t>(s.R / 8, 1);
    s.trials = j.value("trials", std::size_t{20});
    s.search_width = j.value("search_width", std::size_t{10});
    s.attack = parse_attack_kind(j.value("attack", std::string("cvp")));
    s.master_seed = j.value("master_seed", std::uint64_t{1});
    if (j.contains("dnc_betas")) s.dnc_betas = detail::alphas_from_json(j.at("dnc_betas"));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spec: ") + e.what());
  }
  s.validate();
  return s;
}

/// First 16 bytes of SHAKE256 over the normalized spec JSON, hex.
inline std::string spec_hash(const ExperimentSpec& s) { return to_hex(shake256(as_bytes(to_json(s).dump()), 16)); }

/// Trial `index` of row (alphas, m): instance then attack, both from one per-trial stream.
inline AttackReport run_trial(const ExperimentSpec& spec, const std::vector<Rational>& alphas, std::size_t m, std::size_t index,
                              std::optional<AttackKind> kind = std::nullopt) {
  const SolutionSpace space(spec.n, spec.R, alphas);
  ByteStream rng = trial_stream(spec.master_seed, index);
  KnapsackInstance inst = generate_instance(space, m, spec.entry_bits, rng);
  AttackConfig cfg{spec.search_width, spec.dnc_betas};
  return kind.value_or(spec.attack) == AttackKind::cvp ? cvp_attack(inst, cfg) : divide_and_conquer_attack(inst, cfg, rng);
}

struct ExperimentRow {
  std::string space;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t R = 0;
  std::size_t trials = 0;
  double full_solution_rate = 0;
  double mean_coord_fraction = 0;
  std::uint64_t seed = 0;
  std::uint64_t wall_ms = 0;
  std::vector<double> coord_fractions;
};

struct ExperimentReport {
  std::string spec_hash;
  std::string attack;
  std::vector<ExperimentRow> rows;
};

struct RunOptions {
  std::size_t jobs = 1;
  bool deterministic = false;
};

/// Rows in (space, m) order; trials run on `jobs` workers and are aggregated by index.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {}) {
  spec.validate();
  ExperimentReport report{spec_hash(spec), to_string(spec.attack), {}};
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, spec.trials));
  for (const auto& alphas : spec.spaces) {
    for (std::size_t m : spec.m_list) {
      const auto start = std::chrono::steady_clock::now();
      std::vector<AttackReport> results(spec.trials);
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w)
          workers.emplace_back([&] {
            for (std::size_t i = next++; i < spec.trials; i = next++) {
              try {
                results[i] = run_trial(spec, alphas, m, i);
              } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
              }
            }
          });
      }
      if (failure) std::rethrow_exception(failure);
      ExperimentRow row;
      row.space = SolutionSpace(spec.n, spec.R, alphas).descriptor();
      row.m = m;
      row.n = spec.n;
      row.R = spec.R;
      row.trials = spec.trials;
      row.seed = spec.master_seed;
      std::size_t full = 0;
      double frac = 0;
      for (const auto& r : results) {
        full += r.full_solution;
        frac += r.coordinate_fraction();
        row.coord_fractions.push_back(r.coordinate_fraction());
      }
      row.full_solution_rate = static_cast<double>(full) / static_cast<double>(spec.trials);
      row.mean_coord_fraction = frac / static_cast<double>(spec.trials);
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
      row.wall_ms = opts.deterministic ? 0 : static_cast<std::uint64_t>(elapsed.count());
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

/// Shortest round-trip decimal form, shared by the CSV and JSON writers.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return {buf, end};
}

inline std::string report_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "space,m,n,R,trials,full_solution_rate,mean_coord_fraction,seed,wall_ms\n";
  for (const auto& row : r.rows)
    os << row.space << ',' << row.m << ',' << row.n << ',' << row.R << ',' << row.trials << ',' << format_double(row.full_solution_rate) << ','
       << format_double(row.mean_coord_fraction) << ',' << row.seed << ',' << row.wall_ms << '\n';
  return os.str();
}

inline std::string report_json(const ExperimentReport& r) {
  std::ostringstream os;
  os << "{\"spec_hash\":\"" << r.spec_hash << "\",\"attack\":\"" << r.attack << "\",\"rows\":[";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    os << (i ? "," : "") << "{\"space\":" << nlohmann::json(row.space).dump() << ",\"m\":" << row.m << ",\"n\":" << row.n << ",\"R\":" << row.R
       << ",\"trials\":" << row.trials << ",\"full_solution_rate\":" << format_double(row.full_solution_rate)
       << ",\"mean_coord_fraction\":" << format_double(row.mean_coord_fraction) << ",\"seed\":" << row.seed << ",\"wall_ms\":" << row.wall_ms
       << '}';
  }
  os << "]}\n";
  return os.str();
}

}  // namespace cknap
