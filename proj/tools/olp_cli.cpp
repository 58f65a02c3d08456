// olp: run experiments, solve instance files, benchmark mknap files and
// generate instances.
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "olp/algorithms.hpp"
#include "olp/generators.hpp"
#include "olp/harness.hpp"
#include "olp/metrics.hpp"
#include "olp/simplex.hpp"

namespace {

using namespace olp;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

int cmd_run(const std::string& path, std::optional<Index> jobs, const std::string& out_flag,
            bool quiet) {
  const auto cfg = load_config(path);
  const Index par = resolve_parallelism(cfg, jobs);
  const auto report = run_experiment(cfg, par);
  std::filesystem::path out = !out_flag.empty()          ? out_flag
                              : !cfg.output_dir.empty() ? cfg.output_dir
                                                        : "results/" + cfg.name;
  write_report(report, out);
  if (!quiet) {
    std::printf("%-22s %7s %6s %12s %10s %12s %10s %8s\n", "algorithm", "n", "trials",
                "regret", "+-", "violation", "comp", "time_s");
    for (const auto& s : report.summaries) {
      std::printf("%-22s %7zu %6zu %12.4f %10.4f %12.4f %10.4f %8.4f\n", s.algorithm.c_str(),
                  s.n, s.trials, s.regret.mean, s.regret.stderr_, s.violation.mean,
                  s.competitiveness.mean, s.wall_time.mean);
    }
    for (const auto& e : report.scaling) {
      if (e.fit) {
        std::printf("fit %-18s %-9s slope %.4f r2 %.4f%s\n", e.algorithm.c_str(), e.metric.c_str(),
                    e.fit->exponent, e.fit->r_squared,
                    e.fit->excluded.empty() ? "" : " (nonpositive means excluded)");
      }
    }
    Index failed = 0;
    for (const auto& r : report.trials) failed += !r.ok();
    if (failed) std::fprintf(stderr, "warning: %zu trial rows failed\n", failed);
    std::printf("report written to %s\n", out.string().c_str());
  }
  return 0;
}

int cmd_solve(const std::string& path, bool exact) {
  const auto inst = load_instance(path);
  const auto t0 = Clock::now();
  const auto sol = solve_relaxation(inst);
  const double elapsed = seconds_since(t0);
  std::cout << "status " << to_string(sol.status) << '\n';
  if (sol.status != LpStatus::Optimal) return 2;
  std::cout << "objective " << detail::format_real(sol.objective) << '\n';
  std::cout << "duals";
  for (double p : sol.duals) std::cout << ' ' << detail::format_real(p);
  std::cout << '\n';
  std::cout << "iterations " << sol.iterations << '\n';
  std::cout << "time_s " << fixed(elapsed, 6) << '\n';
  if (exact && inst.n() <= kMaxExactColumns) {
    const auto bin = solve_binary_exact(inst);
    std::cout << "binary_objective " << detail::format_real(bin.objective) << '\n';
    std::cout << "binary_x";
    for (int x : bin.x) std::cout << ' ' << x;
    std::cout << '\n';
  }
  return 0;
}

struct BenchRow {
  std::string label;
  std::vector<double> comp, time, violation;
};

int cmd_bench(const std::string& path, Index problem, Index permutations, std::uint64_t seed,
              bool stop, bool baselines, bool raw) {
  const auto probs = read_mknap(path);
  if (problem > probs.size()) {
    throw ConfigError("--problem " + std::to_string(problem) + " out of range");
  }
  std::printf("%-8s %5s %3s %-14s %10s %10s %12s %10s\n", "problem", "n", "m", "method", "comp",
              "violation", "time_s", "lp_time_s");
  for (Index k = 0; k < probs.size(); ++k) {
    if (problem && k + 1 != problem) continue;
    const auto& p = probs[k];
    for (const auto& w : p.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    const Instance base = raw ? p.instance : normalize_units(p.instance);
    auto t0 = Clock::now();
    const auto lp = solve_relaxation(base);
    const double lp_time = seconds_since(t0);
    if (lp.status != LpStatus::Optimal) throw SolverError("offline LP not optimal");

    std::vector<AlgorithmConfig> algs{
        make_config(AlgorithmKind::SOA, StepSchedule::OneOverSqrtN, 0),
        make_config(AlgorithmKind::SOA, StepSchedule::OneOverSqrtT, 0)};
    if (baselines) {
      algs.push_back(make_config(AlgorithmKind::DLA, std::nullopt, 0));
      algs.push_back(make_config(AlgorithmKind::PBD, std::nullopt, 0));
    }
    std::vector<BenchRow> rows;
    for (const auto& a : algs) rows.push_back({a.label(), {}, {}, {}});
    const Index reps = std::max<Index>(permutations, 1);
    for (Index r = 0; r < reps; ++r) {
      const Instance inst =
          permutations == 0
              ? base
              : permute(base, PermutationPlan::random(base.n(), derive_seed(seed, k, r,
                                                                            "permutation")));
      for (std::size_t q = 0; q < algs.size(); ++q) {
        auto ac = algs[q];
        ac.rng_seed = derive_seed(seed, k, r, "alg:" + ac.label());
        t0 = Clock::now();
        auto trace = run_algorithm(inst, ac);
        if (stop) trace = truncate_at_exhaustion(inst, trace);
        rows[q].time.push_back(seconds_since(t0));
        const auto res = evaluate_trial(inst, trace, lp.objective);
        rows[q].comp.push_back(res.competitiveness);
        rows[q].violation.push_back(res.violation);
      }
    }
    auto mean = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    for (const auto& row : rows) {
      std::printf("%-8zu %5zu %3zu %-14s %10.4f %10.4f %12.6f %10.6f\n", k + 1, base.n(),
                  base.m(), row.label.c_str(), mean(row.comp), mean(row.violation),
                  mean(row.time), lp_time);
    }
    if (p.known_optimum) {
      std::printf("%-8zu lp %.4f stated optimum %.4f\n", k + 1, lp.objective, *p.known_optimum);
    }
  }
  return 0;
}

int cmd_gen(const std::string& spec, const std::string& out, const std::string& format) {
  const auto req = parse_gen_spec(spec);
  const auto inst = generate_request(req);
  std::ostringstream os;
  if (format == "mknap") {
    write_mknap(os, {MknapProblem{inst, std::nullopt, {}}});
  } else {
    write_instance(os, inst);
  }
  if (out == "-") {
    std::cout << os.str();
  } else {
    detail::write_atomically(out, os.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online binary LP: one-pass dual algorithms, baselines and experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  Index jobs = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run an experiment config and write a report");
  run->add_option("config", config_path, "INI experiment config")->required();
  run->add_option("-j,--parallelism", jobs, "worker threads (overrides config and OLP_PARALLELISM)");
  run->add_option("-o,--output", out_dir, "report directory (overrides output_dir)");
  run->add_flag("-q,--quiet", quiet, "no summary table");

  std::string instance_path;
  bool no_exact = false;
  auto* solve = app.add_subcommand("solve", "solve the LP relaxation of an instance file");
  solve->add_option("instance", instance_path, "instance text file")->required();
  solve->add_flag("--no-exact", no_exact, "skip exact binary enumeration for n <= 25");

  std::string mknap_path;
  Index problem = 0, permutations = 0;
  std::uint64_t bench_seed = 0;
  bool allow_violation = false, baselines = false, raw = false;
  auto* bench = app.add_subcommand("bench", "one-pass SOA against the offline LP on mknap files");
  bench->add_option("file", mknap_path, "mknap file")->required();
  bench->add_option("--problem", problem, "1-based problem index (default: all)");
  bench->add_option("--permutations", permutations,
                    "random arrival orders to average over (0: file order)");
  bench->add_option("--seed", bench_seed, "seed for permutations and randomized baselines");
  bench->add_flag("--allow-violation", allow_violation,
                  "keep accepting after a capacity is exhausted");
  bench->add_flag("--baselines", baselines, "also run dla and pbd");
  bench->add_flag("--raw", raw, "skip rescaling rewards and rows to unit magnitude");

  std::string gen_spec, gen_out = "-", gen_format = "text";
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  gen->add_option("spec", gen_spec, "key=value list or INI file with a [generator] section")
      ->required();
  gen->add_option("-o,--output", gen_out, "output path ('-' for stdout)");
  gen->add_option("--format", gen_format, "text or mknap")
      ->check(CLI::IsMember({"text", "mknap"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, jobs ? std::optional<Index>(jobs) : std::nullopt,
                             out_dir, quiet);
    if (*solve) return cmd_solve(instance_path, !no_exact);
    if (*bench) {
      return cmd_bench(mknap_path, problem, permutations, bench_seed, !allow_violation, baselines, raw);
    }
    if (*gen) return cmd_gen(gen_spec, gen_out, gen_format);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
