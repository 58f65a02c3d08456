/**
 * @file harness.hpp
 * @brief Experiment configuration, the seeded trial runner and report I/O.
 *
 * Config files are INI documents:
 *
 *     [experiment]  name, seed, trials, n (comma list), parallelism,
 *                   output_dir, stop_at_exhaustion
 *     [source]      family (uniform|gaussian|trunc_cauchy|mixed|adversarial|mknap),
 *                   m, d_lo, d_hi, tau, permute, adv_low, adv_high,
 *                   adv_budget, adv_random_weights, file, problem, normalize
 *     [algorithms]  run = soa:sqrt_n, sfa:sqrt_t, dla, pbd@7 ...
 *     [repair]      enabled, skip_if_feasible, d_lo
 *     [solver]      pivot_tol, feas_tol, opt_tol, refactor_interval, max_iterations
 *
 * A relative `file` is resolved against the config file's directory.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/tokenizer.hpp>
#include <nlohmann/json.hpp>

#include "olp/algorithms.hpp"
#include "olp/core.hpp"
#include "olp/generators.hpp"
#include "olp/metrics.hpp"
#include "olp/simplex.hpp"

namespace olp {

inline constexpr int kReportFormatVersion = 1;
inline constexpr const char* kParallelismEnv = "OLP_PARALLELISM";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, used to turn tags into integers.
inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/**
 * Child seed for (root, n, trial, tag). Each key component is folded in with
 * a splitmix64 round, so seeds for one tag do not depend on which other tags
 * exist in the experiment. Stable across versions.
 */
inline std::uint64_t derive_seed(std::uint64_t root, Index n, Index trial, std::string_view tag) {
  std::uint64_t s = mix64(root);
  s = mix64(s ^ static_cast<std::uint64_t>(n));
  s = mix64(s ^ static_cast<std::uint64_t>(trial));
  return mix64(s ^ hash_tag(tag));
}

struct AlgorithmEntry {
  AlgorithmConfig config;
  /// Fixed rng seed ("pbd@7"); otherwise derived per trial.
  std::optional<std::uint64_t> fixed_seed;

  std::string spec() const {
    auto s = config.label();
    if (config.kind == AlgorithmKind::DLA || config.kind == AlgorithmKind::PBD) {
      s = std::string(to_string(config.kind));
    }
    if (fixed_seed) s += "@" + std::to_string(*fixed_seed);
    return s;
  }
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  Index trials = 1;
  std::vector<Index> n_values;
  /// Generator family and parameters; n and seed are filled per trial.
  GeneratorSpec generator;
  /// Benchmark file source; replaces the generator when set.
  std::optional<std::string> mknap_file;
  /// 1-based problem index inside the mknap file.
  Index mknap_problem = 1;
  /// Rescale mknap data to unit magnitude (see normalize_units).
  bool normalize = true;
  bool permute = false;
  std::vector<AlgorithmEntry> algorithms;
  RepairConfig repair;
  bool stop_at_exhaustion = false;
  SimplexOptions solver;
  std::string output_dir;
  /// 0: fall back to the environment, then 1.
  Index parallelism = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto piece = trim(s.substr(pos, comma == std::string_view::npos ? s.npos : comma - pos));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  const auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

inline double parse_double(const std::string& text, const std::string& key) {
  try {
    return parse_real(trim(text));
  } catch (const DataError&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  const auto t = trim(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + text + "'");
}

inline AlgorithmEntry parse_algorithm_entry(const std::string& text) {
  AlgorithmEntry e;
  auto body = text;
  if (const auto at = text.find('@'); at != std::string::npos) {
    e.fixed_seed = parse_uint(text.substr(at + 1), "algorithms.run");
    body = text.substr(0, at);
  }
  try {
    e.config = parse_algorithm_config(trim(body));
  } catch (const DataError& err) {
    throw ConfigError(std::string("algorithms.run: ") + err.what());
  }
  return e;
}

using Ptree = boost::property_tree::ptree;

// Section -> allowed keys; anything else is rejected to catch typos.
inline const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"experiment",
       {"name", "seed", "trials", "n", "parallelism", "output_dir", "stop_at_exhaustion"}},
      {"source",
       {"family", "m", "d_lo", "d_hi", "tau", "permute", "adv_low", "adv_high", "adv_budget",
        "adv_random_weights", "file", "problem", "normalize"}},
      {"algorithms", {"run"}},
      {"repair", {"enabled", "skip_if_feasible", "d_lo"}},
      {"solver", {"pivot_tol", "feas_tol", "opt_tol", "refactor_interval", "max_iterations"}},
  };
  return keys;
}

}  // namespace detail

/**
 * Builds a config from parsed INI sections. `base_dir` resolves a relative
 * mknap path; `check_files` is off when re-reading a stored echo.
 */
inline ExperimentConfig config_from_ptree(const detail::Ptree& pt,
                                          const std::filesystem::path& base_dir = {},
                                          bool check_files = true) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_uint;
  for (const auto& [section, body] : pt) {
    const auto it = detail::known_keys().find(section);
    if (it == detail::known_keys().end()) throw ConfigError("unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
  auto get = [&pt](const std::string& section, const std::string& key) -> std::optional<std::string> {
    auto sec = pt.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  };

  ExperimentConfig cfg;
  if (auto v = get("experiment", "name")) cfg.name = detail::trim(*v);
  if (auto v = get("experiment", "seed")) cfg.seed = parse_uint(*v, "experiment.seed");
  if (auto v = get("experiment", "trials")) cfg.trials = parse_uint(*v, "experiment.trials");
  if (auto v = get("experiment", "parallelism")) {
    cfg.parallelism = parse_uint(*v, "experiment.parallelism");
  }
  if (auto v = get("experiment", "output_dir")) cfg.output_dir = detail::trim(*v);
  if (auto v = get("experiment", "stop_at_exhaustion")) {
    cfg.stop_at_exhaustion = parse_bool(*v, "experiment.stop_at_exhaustion");
  }
  if (auto v = get("experiment", "n")) {
    for (const auto& item : detail::split_list(*v)) {
      cfg.n_values.push_back(parse_uint(item, "experiment.n"));
    }
  }

  auto& g = cfg.generator;
  const auto family = get("source", "family").value_or("uniform");
  if (detail::trim(family) == "mknap") {
    auto file = get("source", "file");
    if (!file) throw ConfigError("source.file is required for family = mknap");
    std::filesystem::path p(detail::trim(*file));
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.mknap_file = p.lexically_normal().string();
    if (auto v = get("source", "problem")) cfg.mknap_problem = parse_uint(*v, "source.problem");
    if (auto v = get("source", "normalize")) cfg.normalize = parse_bool(*v, "source.normalize");
  } else {
    try {
      g.family = parse_family(detail::trim(family));
    } catch (const DataError& e) {
      throw ConfigError(std::string("source.family: ") + e.what());
    }
    if (get("source", "file") || get("source", "problem") || get("source", "normalize")) {
      throw ConfigError("source.file, problem and normalize only apply to family = mknap");
    }
  }
  if (auto v = get("source", "m")) g.m = parse_uint(*v, "source.m");
  if (auto v = get("source", "d_lo")) g.d_lo = parse_double(*v, "source.d_lo");
  if (auto v = get("source", "d_hi")) g.d_hi = parse_double(*v, "source.d_hi");
  if (auto v = get("source", "tau")) g.tau = parse_double(*v, "source.tau");
  if (auto v = get("source", "adv_low")) g.adversarial.low_reward = parse_double(*v, "source.adv_low");
  if (auto v = get("source", "adv_high")) {
    g.adversarial.high_reward = parse_double(*v, "source.adv_high");
  }
  if (auto v = get("source", "adv_budget")) {
    g.adversarial.budget = parse_double(*v, "source.adv_budget");
  }
  if (auto v = get("source", "adv_random_weights")) {
    g.adversarial.random_weights = parse_bool(*v, "source.adv_random_weights");
  }
  if (auto v = get("source", "permute")) cfg.permute = parse_bool(*v, "source.permute");

  if (auto v = get("algorithms", "run")) {
    for (const auto& item : detail::split_list(*v)) {
      cfg.algorithms.push_back(detail::parse_algorithm_entry(item));
    }
  }

  if (auto v = get("repair", "enabled")) cfg.repair.enabled = parse_bool(*v, "repair.enabled");
  if (auto v = get("repair", "skip_if_feasible")) {
    cfg.repair.skip_if_feasible = parse_bool(*v, "repair.skip_if_feasible");
  }
  if (auto v = get("repair", "d_lo")) cfg.repair.d_lo_override = parse_double(*v, "repair.d_lo");

  auto& s = cfg.solver;
  if (auto v = get("solver", "pivot_tol")) s.pivot_tol = parse_double(*v, "solver.pivot_tol");
  if (auto v = get("solver", "feas_tol")) s.feas_tol = parse_double(*v, "solver.feas_tol");
  if (auto v = get("solver", "opt_tol")) s.opt_tol = parse_double(*v, "solver.opt_tol");
  if (auto v = get("solver", "refactor_interval")) {
    s.refactor_interval = parse_uint(*v, "solver.refactor_interval");
  }
  if (auto v = get("solver", "max_iterations")) {
    s.max_iterations = parse_uint(*v, "solver.max_iterations");
  }

  // Validation.
  if (cfg.name.empty()) throw ConfigError("experiment.name must not be empty");
  if (cfg.trials < 1) throw ConfigError("experiment.trials must be >= 1");
  if (cfg.algorithms.empty()) throw ConfigError("algorithms.run lists no algorithm");
  if (!(s.pivot_tol > 0) || !(s.feas_tol > 0) || !(s.opt_tol > 0) || s.refactor_interval < 1) {
    throw ConfigError("solver tolerances must be positive");
  }
  if (cfg.repair.d_lo_override && !(*cfg.repair.d_lo_override > 0)) {
    throw ConfigError("repair.d_lo must be positive");
  }
  if (cfg.mknap_file) {
    if (!cfg.n_values.empty()) throw ConfigError("experiment.n does not apply to mknap sources");
    if (cfg.mknap_problem < 1) throw ConfigError("source.problem is 1-based");
    if (check_files && !std::filesystem::exists(*cfg.mknap_file)) {
      throw ConfigError("mknap file '" + *cfg.mknap_file + "' does not exist");
    }
  } else {
    if (cfg.n_values.empty()) throw ConfigError("experiment.n must list at least one value");
    for (Index n : cfg.n_values) {
      if (n < 1) throw ConfigError("experiment.n values must be >= 1");
    }
    auto probe = g;
    probe.n = 1;
    try {
      probe.validate();
    } catch (const DataError& e) {
      throw ConfigError(std::string("source: ") + e.what());
    }
    if (g.family == Family::TruncCauchyIID && !(g.tau > 0)) {
      throw ConfigError("source.tau must be positive");
    }
    if (g.family == Family::Adversarial && !(g.adversarial.budget > 0)) {
      throw ConfigError("source.adv_budget must be positive");
    }
  }
  for (const auto& a : cfg.algorithms) {
    if (a.config.kind == AlgorithmKind::SNA &&
        std::any_of(cfg.n_values.begin(), cfg.n_values.end(), [](Index n) { return n < 2; })) {
      throw ConfigError("sna needs n >= 2");
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config(std::istream& in,
                                     const std::filesystem::path& base_dir = {},
                                     bool check_files = true) {
  detail::Ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config_from_ptree(pt, base_dir, check_files);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  detail::Ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return config_from_ptree(pt, std::filesystem::path(path).parent_path());
}

/// Canonical INI form of a config; parsing it back gives the same config.
inline detail::Ptree config_to_ptree(const ExperimentConfig& cfg) {
  using detail::format_real;
  detail::Ptree pt;
  auto put = [&pt](const std::string& section, const std::string& key, const std::string& v) {
    pt.put_child(detail::Ptree::path_type(section + "/" + key, '/'), detail::Ptree(v));
  };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  put("experiment", "name", cfg.name);
  put("experiment", "seed", std::to_string(cfg.seed));
  put("experiment", "trials", std::to_string(cfg.trials));
  if (!cfg.n_values.empty()) {
    std::string ns;
    for (Index n : cfg.n_values) ns += (ns.empty() ? "" : ", ") + std::to_string(n);
    put("experiment", "n", ns);
  }
  put("experiment", "parallelism", std::to_string(cfg.parallelism));
  if (!cfg.output_dir.empty()) put("experiment", "output_dir", cfg.output_dir);
  put("experiment", "stop_at_exhaustion", flag(cfg.stop_at_exhaustion));

  const auto& g = cfg.generator;
  if (cfg.mknap_file) {
    put("source", "family", "mknap");
    put("source", "file", *cfg.mknap_file);
    put("source", "problem", std::to_string(cfg.mknap_problem));
    put("source", "normalize", flag(cfg.normalize));
  } else {
    put("source", "family", std::string(to_string(g.family)));
    put("source", "m", std::to_string(g.m));
    put("source", "d_lo", format_real(g.d_lo));
    put("source", "d_hi", format_real(g.d_hi));
    if (g.family == Family::TruncCauchyIID) put("source", "tau", format_real(g.tau));
    if (g.family == Family::Adversarial) {
      put("source", "adv_low", format_real(g.adversarial.low_reward));
      put("source", "adv_high", format_real(g.adversarial.high_reward));
      put("source", "adv_budget", format_real(g.adversarial.budget));
      put("source", "adv_random_weights", flag(g.adversarial.random_weights));
    }
  }
  put("source", "permute", flag(cfg.permute));

  std::string run;
  for (const auto& a : cfg.algorithms) run += (run.empty() ? "" : ", ") + a.spec();
  put("algorithms", "run", run);

  put("repair", "enabled", flag(cfg.repair.enabled));
  put("repair", "skip_if_feasible", flag(cfg.repair.skip_if_feasible));
  if (cfg.repair.d_lo_override) put("repair", "d_lo", format_real(*cfg.repair.d_lo_override));

  put("solver", "pivot_tol", format_real(cfg.solver.pivot_tol));
  put("solver", "feas_tol", format_real(cfg.solver.feas_tol));
  put("solver", "opt_tol", format_real(cfg.solver.opt_tol));
  put("solver", "refactor_interval", std::to_string(cfg.solver.refactor_interval));
  put("solver", "max_iterations", std::to_string(cfg.solver.max_iterations));
  return pt;
}

inline std::string config_to_ini(const ExperimentConfig& cfg) {
  std::ostringstream os;
  boost::property_tree::write_ini(os, config_to_ptree(cfg));
  return os.str();
}

/// Explicit flag, then the config value, then OLP_PARALLELISM, then 1.
inline Index resolve_parallelism(const ExperimentConfig& cfg, std::optional<Index> flag = {}) {
  if (flag && *flag > 0) return *flag;
  if (cfg.parallelism > 0) return cfg.parallelism;
  if (const char* env = std::getenv(kParallelismEnv)) {
    try {
      const auto v = detail::parse_uint(env, kParallelismEnv);
      if (v > 0) return v;
    } catch (const ConfigError&) {
      throw ConfigError(std::string(kParallelismEnv) + " must be a positive integer");
    }
  }
  return 1;
}

/// One-off instance request for `olp gen`.
struct GenRequest {
  GeneratorSpec spec;
  bool permute = false;
};

/// Keys: family, n, m, seed, d_lo, d_hi, tau, permute, adv_low, adv_high,
/// adv_budget, adv_random_weights.
inline GenRequest gen_request_from(const std::map<std::string, std::string>& kv) {
  GenRequest req;
  auto& g = req.spec;
  for (const auto& [key, value] : kv) {
    const std::string where = "gen." + key;
    if (key == "family") {
      try {
        g.family = parse_family(value);
      } catch (const DataError& e) {
        throw ConfigError(where + ": " + e.what());
      }
    } else if (key == "n") {
      g.n = detail::parse_uint(value, where);
    } else if (key == "m") {
      g.m = detail::parse_uint(value, where);
    } else if (key == "seed") {
      g.seed = detail::parse_uint(value, where);
    } else if (key == "d_lo") {
      g.d_lo = detail::parse_double(value, where);
    } else if (key == "d_hi") {
      g.d_hi = detail::parse_double(value, where);
    } else if (key == "tau") {
      g.tau = detail::parse_double(value, where);
    } else if (key == "permute") {
      req.permute = detail::parse_bool(value, where);
    } else if (key == "adv_low") {
      g.adversarial.low_reward = detail::parse_double(value, where);
    } else if (key == "adv_high") {
      g.adversarial.high_reward = detail::parse_double(value, where);
    } else if (key == "adv_budget") {
      g.adversarial.budget = detail::parse_double(value, where);
    } else if (key == "adv_random_weights") {
      g.adversarial.random_weights = detail::parse_bool(value, where);
    } else {
      throw ConfigError("unknown generator key '" + key + "'");
    }
  }
  try {
    g.validate();
  } catch (const DataError& e) {
    throw ConfigError(std::string("gen: ") + e.what());
  }
  return req;
}

/// "family=uniform,n=100,m=5" or the path of an INI file with a [generator]
/// section holding the same keys.
inline GenRequest parse_gen_spec(const std::string& text) {
  std::map<std::string, std::string> kv;
  if (text.find('=') == std::string::npos) {
    std::ifstream in(text);
    if (!in) throw ConfigError("cannot open generator spec '" + text + "'");
    detail::Ptree pt;
    try {
      boost::property_tree::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(text + ": " + e.message());
    }
    for (const auto& [section, body] : pt) {
      if (section != "generator") throw ConfigError("unknown section [" + section + "]");
      for (const auto& [key, value] : body) kv[key] = detail::trim(value.data());
    }
  } else {
    for (const auto& item : detail::split_list(text)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + item + "'");
      kv[detail::trim(item.substr(0, eq))] = detail::trim(item.substr(eq + 1));
    }
  }
  return gen_request_from(kv);
}

inline Instance generate_request(const GenRequest& req) {
  Instance inst = generate(req.spec);
  if (req.permute) {
    inst = permute(inst, PermutationPlan::random(
                             inst.n(), derive_seed(req.spec.seed, inst.n(), 0, "permutation")));
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct ScalingEntry {
  std::string algorithm;
  /// "regret" or "violation".
  std::string metric;
  std::optional<ScalingFit> fit;
  /// Why no fit was produced.
  std::string error;
};

struct ExperimentReport {
  int format_version = kReportFormatVersion;
  ExperimentConfig config;
  /// Sorted by (n, trial, algorithm position in the config).
  std::vector<TrialResult> trials;
  std::vector<Summary> summaries;
  std::vector<ScalingEntry> scaling;
  Index parallelism = 1;
  double total_wall_time = 0.0;
};

/// Row labels produced for one configured algorithm.
inline std::vector<std::string> row_labels(const ExperimentConfig& cfg, const AlgorithmEntry& a) {
  std::string base = a.config.label();
  if (cfg.stop_at_exhaustion) base += "+stop";
  std::vector<std::string> out{base};
  if (cfg.repair.enabled) out.push_back(base + "+repair");
  return out;
}

namespace detail {

inline TrialResult failed_row(std::string label, Index n, Index m, Index trial,
                              std::uint64_t seed, std::string why) {
  TrialResult r;
  r.algorithm = std::move(label);
  r.n = n;
  r.m = m;
  r.trial = trial;
  r.seed = seed;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.objective = r.offline_lp_opt = r.regret = r.violation = nan;
  r.capacity_norm = r.max_dual_norm = nan;
  r.status = why.empty() ? "error" : std::move(why);
  return r;
}

struct Job {
  Index n;
  Index trial;
};

inline Instance make_trial_instance(const ExperimentConfig& cfg, const Instance* base, Index n,
                                    Index trial) {
  Instance inst = base ? *base : [&] {
    GeneratorSpec spec = cfg.generator;
    spec.n = n;
    spec.seed = derive_seed(cfg.seed, n, trial, "instance");
    return generate(spec);
  }();
  if (cfg.permute) {
    inst = permute(inst, PermutationPlan::random(inst.n(), derive_seed(cfg.seed, n, trial,
                                                                       "permutation")));
  }
  return inst;
}

inline std::vector<TrialResult> run_job(const ExperimentConfig& cfg, const Instance* base,
                                        const Job& job) {
  std::vector<TrialResult> rows;
  const Index m_hint = base ? base->m() : cfg.generator.m;
  auto fail_all = [&](const std::string& why) {
    for (const auto& a : cfg.algorithms) {
      for (const auto& label : row_labels(cfg, a)) {
        rows.push_back(failed_row(label, job.n, m_hint, job.trial, 0, why));
      }
    }
  };
  std::optional<Instance> inst;
  double lp_opt = 0.0;
  try {
    inst.emplace(make_trial_instance(cfg, base, job.n, job.trial));
    const auto sol = solve_relaxation(*inst, cfg.solver);
    if (sol.status != LpStatus::Optimal) {
      throw SolverError("offline LP is " + std::string(to_string(sol.status)));
    }
    lp_opt = sol.objective;
  } catch (const std::exception& e) {
    fail_all(e.what());
    return rows;
  }

  using Clock = std::chrono::steady_clock;
  for (const auto& a : cfg.algorithms) {
    AlgorithmConfig ac = a.config;
    ac.solver = cfg.solver;
    ac.rng_seed = a.fixed_seed ? *a.fixed_seed
                               : derive_seed(cfg.seed, job.n, job.trial, "alg:" + ac.label());
    const auto labels = row_labels(cfg, a);
    try {
      const auto t0 = Clock::now();
      RunTrace trace = run_algorithm(*inst, ac);
      if (cfg.stop_at_exhaustion) trace = truncate_at_exhaustion(*inst, trace);
      const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
      auto res = evaluate_trial(*inst, trace, lp_opt);
      res.algorithm = labels[0];
      res.trial = job.trial;
      res.n = job.n;
      res.wall_time = elapsed;
      rows.push_back(res);
      if (cfg.repair.enabled) {
        const auto seed = derive_seed(cfg.seed, job.n, job.trial, "repair:" + ac.label());
        const auto t1 = Clock::now();
        try {
          RunTrace fixed = repair_feasibility(*inst, trace, cfg.repair, seed);
          const double extra = std::chrono::duration<double>(Clock::now() - t1).count();
          auto rep = evaluate_trial(*inst, fixed, lp_opt);
          rep.algorithm = labels[1];
          rep.trial = job.trial;
          rep.n = job.n;
          rep.seed = seed;
          rep.wall_time = elapsed + extra;
          rows.push_back(rep);
        } catch (const std::exception& e) {
          rows.push_back(failed_row(labels[1], job.n, inst->m(), job.trial, seed, e.what()));
        }
      }
    } catch (const std::exception& e) {
      for (const auto& label : labels) {
        rows.push_back(failed_row(label, job.n, inst->m(), job.trial, ac.rng_seed, e.what()));
      }
    }
  }
  return rows;
}

}  // namespace detail

/// Summaries per (algorithm, n) over successful rows, plus log-log fits of
/// mean regret and mean violation against n for each algorithm.
inline void summarize(ExperimentReport& report) {
  report.summaries.clear();
  report.scaling.clear();
  std::vector<std::string> labels;
  for (const auto& a : report.config.algorithms) {
    for (auto& l : row_labels(report.config, a)) labels.push_back(l);
  }
  std::vector<Index> ns;
  for (const auto& r : report.trials) {
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  }
  for (const auto& label : labels) {
    std::vector<ScalingPoint> reg, vio;
    for (Index n : ns) {
      std::vector<TrialResult> group;
      for (const auto& r : report.trials) {
        if (r.algorithm == label && r.n == n && r.ok()) group.push_back(r);
      }
      if (group.empty()) continue;
      auto s = aggregate(group);
      reg.push_back({n, s.regret.mean, s.regret.stderr_});
      vio.push_back({n, s.violation.mean, s.violation.stderr_});
      report.summaries.push_back(std::move(s));
    }
    for (auto [metric, pts] : {std::pair{"regret", &reg}, std::pair{"violation", &vio}}) {
      ScalingEntry e;
      e.algorithm = label;
      e.metric = metric;
      try {
        e.fit = fit_scaling(*pts);
      } catch (const DataError& err) {
        e.error = err.what();
      }
      report.scaling.push_back(std::move(e));
    }
  }
}

/**
 * Runs every (n, trial) job on a pool of `parallelism` workers. Each job
 * builds its own instance, solves the offline LP once and runs all
 * configured algorithms on it. Rows land in a slot fixed by the job index,
 * so output does not depend on scheduling.
 */
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, Index parallelism = 1) {
  if (cfg.algorithms.empty()) throw ConfigError("no algorithms configured");
  ExperimentReport report;
  report.config = cfg;
  report.parallelism = std::max<Index>(parallelism, 1);

  std::optional<Instance> base;
  std::vector<Index> ns = cfg.n_values;
  if (cfg.mknap_file) {
    std::vector<MknapProblem> probs;
    try {
      probs = read_mknap(*cfg.mknap_file);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    if (cfg.mknap_problem > probs.size()) {
      throw ConfigError("source.problem " + std::to_string(cfg.mknap_problem) + " out of range (" +
                        std::to_string(probs.size()) + " problems)");
    }
    const auto& chosen = probs[cfg.mknap_problem - 1].instance;
    base.emplace(cfg.normalize ? normalize_units(chosen) : chosen);
    ns = {base->n()};
  }

  std::vector<detail::Job> jobs;
  for (Index n : ns) {
    for (Index t = 0; t < cfg.trials; ++t) jobs.push_back({n, t});
  }
  std::vector<std::vector<TrialResult>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  const Instance* base_ptr = base ? &*base : nullptr;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      slots[k] = detail::run_job(cfg, base_ptr, jobs[k]);
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  const Index workers = std::min<Index>(report.parallelism, jobs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.total_wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (auto& s : slots) {
    for (auto& r : s) report.trials.push_back(std::move(r));
  }
  summarize(report);
  return report;
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& trial_csv_columns() {
  static const std::vector<std::string> cols{
      "algorithm", "n",         "m",          "trial",          "seed",
      "objective", "offline_lp_opt", "regret", "violation", "competitiveness",
      "capacity_norm", "max_dual_norm", "status"};
  return cols;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\\") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::string real_field(double v) { return std::isnan(v) ? "nan" : format_real(v); }

inline double parse_real_field(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return parse_real(s);
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json stat_json(const Stat& s) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"mean", num(s.mean)}, {"stderr", num(s.stderr_)}, {"count", s.count}};
}

inline Stat stat_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  return {num(j.at("mean")), num(j.at("stderr")), j.at("count").get<Index>()};
}

}  // namespace detail

/// Per-trial rows; wall time is kept out so reruns are byte-identical.
inline std::string trials_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "# olp trials v" << report.format_version << '\n';
  const auto& cols = trial_csv_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  using detail::real_field;
  for (const auto& r : report.trials) {
    os << detail::csv_field(r.algorithm) << ',' << r.n << ',' << r.m << ',' << r.trial << ','
       << r.seed << ',' << real_field(r.objective) << ',' << real_field(r.offline_lp_opt) << ','
       << real_field(r.regret) << ',' << real_field(r.violation) << ','
       << real_field(r.competitiveness) << ',' << real_field(r.capacity_norm) << ','
       << real_field(r.max_dual_norm) << ',' << detail::csv_field(r.status) << '\n';
  }
  return os.str();
}

inline std::string timings_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "algorithm,n,trial,wall_time\n";
  for (const auto& r : report.trials) {
    os << detail::csv_field(r.algorithm) << ',' << r.n << ',' << r.trial << ','
       << detail::real_field(r.wall_time) << '\n';
  }
  return os.str();
}

inline nlohmann::json summary_json(const ExperimentReport& report) {
  using nlohmann::json;
  json config = json::object();
  for (const auto& [section, body] : config_to_ptree(report.config)) {
    json sec = json::object();
    for (const auto& [key, value] : body) sec[key] = value.data();
    config[section] = sec;
  }
  json aggregates = json::array();
  for (const auto& s : report.summaries) {
    aggregates.push_back({{"algorithm", s.algorithm},
                          {"n", s.n},
                          {"m", s.m},
                          {"trials", s.trials},
                          {"objective", detail::stat_json(s.objective)},
                          {"regret", detail::stat_json(s.regret)},
                          {"violation", detail::stat_json(s.violation)},
                          {"competitiveness", detail::stat_json(s.competitiveness)},
                          {"normalized_regret", detail::stat_json(s.normalized_regret)},
                          {"normalized_violation", detail::stat_json(s.normalized_violation)},
                          {"max_dual_norm", detail::stat_json(s.max_dual_norm)},
                          {"wall_time", detail::stat_json(s.wall_time)},
                          {"competitiveness_flagged", s.competitiveness_flagged}});
  }
  json scaling = json::array();
  for (const auto& e : report.scaling) {
    json item{{"algorithm", e.algorithm}, {"metric", e.metric}};
    if (e.fit) {
      json pts = json::array();
      for (const auto& p : e.fit->points) {
        pts.push_back({{"n", p.n}, {"mean", p.mean}, {"stderr", p.stderr_}});
      }
      item["exponent"] = e.fit->exponent;
      item["intercept"] = e.fit->intercept;
      item["r_squared"] = e.fit->r_squared;
      item["points"] = pts;
      item["excluded_nonpositive"] = e.fit->excluded;
    } else {
      item["error"] = e.error;
    }
    scaling.push_back(item);
  }
  Index failed = 0;
  for (const auto& r : report.trials) failed += !r.ok();
  json meta{{"seed_root", report.config.seed},
            {"parallelism", report.parallelism},
            {"total_wall_time", report.total_wall_time},
            {"trial_rows", report.trials.size()},
            {"failed_rows", failed},
            {"competitiveness_denominator", "lp_relaxation"},
            {"cauchy_truncation", "two_sided_rejection"},
            {"wall_time_scope", "algorithm_only"},
            {"seed_derivation", "splitmix64(root, n, trial, fnv1a(tag))"}};
  return {{"format_version", report.format_version},
          {"name", report.config.name},
          {"config", config},
          {"metadata", meta},
          {"aggregates", aggregates},
          {"scaling", scaling}};
}

inline std::string summary_text(const ExperimentReport& report) {
  return summary_json(report).dump(2) + "\n";
}

/// Writes trials.csv, timings.csv and summary.json into `dir`.
inline void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::write_atomically(dir / "trials.csv", trials_csv(report));
  detail::write_atomically(dir / "timings.csv", timings_csv(report));
  detail::write_atomically(dir / "summary.json", summary_text(report));
}

/// Reads a report written by write_report; writing it back is byte-identical.
inline ExperimentReport load_report(const std::filesystem::path& dir) {
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  using nlohmann::json;
  const json js = json::parse(slurp(dir / "summary.json"));
  ExperimentReport report;
  report.format_version = js.at("format_version").get<int>();
  if (report.format_version != kReportFormatVersion) {
    throw DataError("unsupported report format version " + std::to_string(report.format_version));
  }
  detail::Ptree pt;
  for (const auto& [section, body] : js.at("config").items()) {
    for (const auto& [key, value] : body.items()) {
      pt.put_child(detail::Ptree::path_type(section + "/" + key, '/'),
                   detail::Ptree(value.get<std::string>()));
    }
  }
  report.config = config_from_ptree(pt, {}, false);
  const auto& meta = js.at("metadata");
  report.parallelism = meta.at("parallelism").get<Index>();
  report.total_wall_time = meta.at("total_wall_time").get<double>();
  for (const auto& a : js.at("aggregates")) {
    Summary s;
    s.algorithm = a.at("algorithm").get<std::string>();
    s.n = a.at("n").get<Index>();
    s.m = a.at("m").get<Index>();
    s.trials = a.at("trials").get<Index>();
    s.objective = detail::stat_from_json(a.at("objective"));
    s.regret = detail::stat_from_json(a.at("regret"));
    s.violation = detail::stat_from_json(a.at("violation"));
    s.competitiveness = detail::stat_from_json(a.at("competitiveness"));
    s.normalized_regret = detail::stat_from_json(a.at("normalized_regret"));
    s.normalized_violation = detail::stat_from_json(a.at("normalized_violation"));
    s.max_dual_norm = detail::stat_from_json(a.at("max_dual_norm"));
    s.wall_time = detail::stat_from_json(a.at("wall_time"));
    s.competitiveness_flagged = a.at("competitiveness_flagged").get<bool>();
    report.summaries.push_back(std::move(s));
  }
  for (const auto& item : js.at("scaling")) {
    ScalingEntry e;
    e.algorithm = item.at("algorithm").get<std::string>();
    e.metric = item.at("metric").get<std::string>();
    if (item.contains("error")) {
      e.error = item.at("error").get<std::string>();
    } else {
      ScalingFit fit;
      fit.exponent = item.at("exponent").get<double>();
      fit.intercept = item.at("intercept").get<double>();
      fit.r_squared = item.at("r_squared").get<double>();
      for (const auto& p : item.at("points")) {
        fit.points.push_back({p.at("n").get<Index>(), p.at("mean").get<double>(),
                              p.at("stderr").get<double>()});
      }
      fit.excluded = item.at("excluded_nonpositive").get<std::vector<Index>>();
      e.fit = std::move(fit);
    }
    report.scaling.push_back(std::move(e));
  }

  // Per-trial rows plus their timings.
  using Tok = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::istringstream trials(slurp(dir / "trials.csv"));
  std::string line;
  std::getline(trials, line);  // version comment
  std::getline(trials, line);  // header
  Index line_no = 2;
  while (std::getline(trials, line)) {
    ++line_no;
    std::vector<std::string> f;
    try {
      Tok tok(line);
      f.assign(tok.begin(), tok.end());
    } catch (const boost::escaped_list_error& e) {
      throw DataError("trials.csv:" + std::to_string(line_no) + ": " + e.what());
    }
    if (f.size() != trial_csv_columns().size()) {
      throw DataError("trials.csv:" + std::to_string(line_no) + ": wrong field count");
    }
    TrialResult r;
    r.algorithm = f[0];
    r.n = detail::parse_uint(f[1], "n");
    r.m = detail::parse_uint(f[2], "m");
    r.trial = detail::parse_uint(f[3], "trial");
    r.seed = detail::parse_uint(f[4], "seed");
    r.objective = detail::parse_real_field(f[5]);
    r.offline_lp_opt = detail::parse_real_field(f[6]);
    r.regret = detail::parse_real_field(f[7]);
    r.violation = detail::parse_real_field(f[8]);
    r.competitiveness = detail::parse_real_field(f[9]);
    r.capacity_norm = detail::parse_real_field(f[10]);
    r.max_dual_norm = detail::parse_real_field(f[11]);
    r.status = f[12];
    report.trials.push_back(std::move(r));
  }
  std::istringstream timings(slurp(dir / "timings.csv"));
  std::getline(timings, line);
  std::size_t k = 0;
  while (std::getline(timings, line)) {
    Tok tok(line);
    std::vector<std::string> f(tok.begin(), tok.end());
    if (k >= report.trials.size() || f.size() != 4) throw DataError("timings.csv does not match trials.csv");
    report.trials[k++].wall_time = detail::parse_real_field(f[3]);
  }
  if (k != report.trials.size()) throw DataError("timings.csv does not match trials.csv");
  return report;
}

}  // namespace olp
