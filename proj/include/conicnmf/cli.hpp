// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conicnmf/campaign.hpp"

namespace conicnmf {
namespace cli {

// Exit codes: 0 success, 1 completed without reaching the exactness
// tolerance, 2 usage or input error.
constexpr int kExitSuccess = 0;
constexpr int kExitNoSuccess = 1;
constexpr int kExitError = 2;

struct CommonArgs {
  std::string builtin;
  std::string matrix_file;
  std::vector<int> random_dims;  // F,N,K
  int K = 0;
  std::string form = "soc";
  std::string step = "unit";
  int maxiter = 750;
  std::vector<int> spi_at;
  bool spi_at_given = false;
  double spi_th = 1e-3;
  std::string refine = "auto";
  std::string init = "uniform";
  std::uint64_t seed = 1;
  int jobs = 0;
  std::string out_dir = ".";
  int verbose = 0;
  bool full_trace = false;
  bool eps_shift = false;
};

inline void add_instance_flags(CLI::App* cmd, CommonArgs& a) {
  auto* b = cmd->add_option("--builtin", a.builtin,
                            "builtin instance: random, Vinf1..Vinf4, hex_a2, "
                            "hex_a3, hex_a4, hex_ainf, appB_example");
  auto* m = cmd->add_option("--matrix", a.matrix_file, "CSV matrix file");
  auto* r = cmd->add_option("--random", a.random_dims,
                            "random product instance F,N,K")
                ->delimiter(',')
                ->expected(3);
  b->excludes(m)->excludes(r);
  m->excludes(r);
}

inline void add_run_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--k", a.K, "factorization rank (default: known rank)");
  cmd->add_option("--form", a.form, "formulation: exp | soc")
      ->check(CLI::IsMember({"exp", "soc"}));
  cmd->add_option("--step", a.step, "step rule: unit | adaptive")
      ->check(CLI::IsMember({"unit", "adaptive"}));
  cmd->add_option("--maxiter", a.maxiter, "iteration budget");
  cmd->add_option("--spi-at", a.spi_at,
                  "iterations triggering sparsity integration (default "
                  "80% and 95% of maxiter; pass 0 to disable)")
      ->delimiter(',');
  cmd->add_option("--spi-th", a.spi_th, "sparsity threshold");
  cmd->add_option("--refine", a.refine, "final refinement: auto | on | off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  cmd->add_option("--init", a.init,
                  "initializer: uniform | rank1 | rank1:<d>");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--verbose", a.verbose, "verbosity level");
  cmd->add_flag("--full-trace", a.full_trace,
                "disable early stopping (full-length traces)");
  cmd->add_flag("--eps-shift", a.eps_shift,
                "exp form: shift zero entries of V by a small epsilon");
}

inline InstanceSpec make_instance(const CommonArgs& a) {
  InstanceSpec spec;
  if (!a.random_dims.empty() || a.builtin == "random") {
    spec.kind = InstanceSpec::Kind::Random;
    if (!a.random_dims.empty()) {
      spec.F = a.random_dims[0];
      spec.N = a.random_dims[1];
      spec.K = a.random_dims[2];
    }
  } else if (!a.matrix_file.empty()) {
    spec.kind = InstanceSpec::Kind::File;
    spec.name = a.matrix_file;
  } else if (!a.builtin.empty()) {
    spec.kind = InstanceSpec::Kind::Builtin;
    spec.name = a.builtin;
  } else {
    throw validation_error("no instance given: use --builtin, --matrix or --random");
  }
  return spec;
}

inline DriverConfig make_driver_config(const CommonArgs& a) {
  DriverConfig cfg;
  cfg.maxiter = a.maxiter;
  cfg.step_rule = a.step == "unit" ? StepRule::Unit : StepRule::Adaptive;
  if (a.spi_at_given || !a.spi_at.empty()) {
    std::vector<int> sched;
    for (int v : a.spi_at)
      if (v > 0) sched.push_back(v);
    cfg.spi_schedule = sched;
  }
  cfg.spi_threshold = a.spi_th;
  cfg.refine = a.refine == "auto"  ? RefineMode::Auto
               : a.refine == "on" ? RefineMode::On
                                  : RefineMode::Off;
  cfg.seed = a.seed;
  cfg.early_stop = !a.full_trace;
  cfg.eps_shift = a.eps_shift;
  cfg.verbosity = a.verbose;
  if (a.verbose > 0) cfg.log = &std::cerr;
  if (a.init == "uniform") {
    cfg.init = InitKind::Uniform;
  } else if (a.init.rfind("rank1", 0) == 0) {
    cfg.init = InitKind::PerturbedRank1;
    const auto colon = a.init.find(':');
    if (colon != std::string::npos)
      cfg.rank1_d = std::stod(a.init.substr(colon + 1));
  } else {
    throw validation_error("unknown initializer '" + a.init + "'");
  }
  return cfg;
}

inline int resolve_rank(const CommonArgs& a, const NonnegMatrix& V) {
  if (a.K > 0) return a.K;
  if (V.known_nonneg_rank()) return *V.known_nonneg_rank();
  throw validation_error("no --k given and the instance has no known rank");
}

inline int cmd_factorize(const CommonArgs& a) {
  const auto spec = make_instance(a);
  const auto cfg = make_driver_config(a);
  NonnegMatrix V = spec.materialize(a.seed);
  const int K = resolve_rank(a, V);
  const auto tag = a.form == "exp" ? Formulation::ExpUnder : Formulation::SocOver;
  RunReport rep = run(V, K, tag, cfg);

  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  save_report(rep, a.out_dir + "/report.json");
  save_trace_csv(rep, a.out_dir + "/trace.csv");
  if (rep.factors) {
    save_factor_csv(rep.factors->W(), a.out_dir + "/W.csv");
    save_factor_csv(rep.factors->H(), a.out_dir + "/H.csv");
  }
  std::cout << spec.label() << " K=" << K << " form=" << to_string(tag)
            << " error=" << rep.final_error
            << (rep.success ? " (exact)" : "")
            << " iters=" << rep.iterations << "\n";
  if (rep.aborted) {
    std::cerr << "run aborted: " << rep.abort_reason << "\n";
    return kExitError;
  }
  return rep.success ? kExitSuccess : kExitNoSuccess;
}

inline int cmd_campaign(const CommonArgs& a, int n_inits,
                        const std::string& forms) {
  Campaign c;
  c.instance = make_instance(a);
  c.K = a.K;
  c.n_inits = n_inits;
  c.driver = make_driver_config(a);
  c.master_seed = a.seed;
  c.out_dir = a.out_dir;
  c.jobs = a.jobs;
  if (forms == "both")
    c.tags = {Formulation::ExpUnder, Formulation::SocOver};
  else
    c.tags = {forms == "exp" ? Formulation::ExpUnder : Formulation::SocOver};
  auto summary = run_campaign(c);
  std::cout << campaign_table_row(summary) << "  (" << summary.wall_time_s
            << " s)\n";
  return kExitSuccess;
}

inline int cmd_rank1(const CommonArgs& a) {
  const auto spec = make_instance(a);
  NonnegMatrix V = spec.materialize(a.seed);
  auto sol = solve_rank1(V);
  nlohmann::json j;
  j["w"] = std::vector<double>(sol.w.data(), sol.w.data() + sol.w.size());
  j["h"] = std::vector<double>(sol.h.data(), sol.h.data() + sol.h.size());
  j["objective"] = sol.objective;
  j["degenerate_rows"] = sol.degenerate_rows;
  std::cout << j.dump(2) << "\n";
  return kExitSuccess;
}

inline int cmd_gaptrace(const CommonArgs& a) {
  const auto spec = make_instance(a);
  NonnegMatrix V = spec.materialize(a.seed);
  const int K = resolve_rank(a, V);
  const auto tag = a.form == "exp" ? Formulation::ExpUnder : Formulation::SocOver;

  DriverConfig cfg = make_driver_config(a);
  cfg.early_stop = false;
  cfg.step_rule = StepRule::Unit;
  RunReport unit = run(V, K, tag, cfg);
  cfg.step_rule = StepRule::Adaptive;
  RunReport adaptive = run(V, K, tag, cfg);

  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  save_trace_csv(unit, a.out_dir + "/trace_unit.csv");
  save_trace_csv(adaptive, a.out_dir + "/trace_adaptive.csv");

  const double c0 = unit.phi0 - unit.phi_lb;
  const double tau_ad = tau_tilde_for(StepRule::Adaptive, cfg.maxiter);
  std::ofstream out(a.out_dir + "/gaptrace.csv");
  out << "iter,min_gap_unit,min_gap_adaptive,ref_unit,ref_adaptive\n";
  const size_t rows =
      std::min(unit.min_gap_trace.size(), adaptive.min_gap_trace.size());
  char buf[200];
  for (size_t j = 0; j < rows; ++j) {
    // record j+1 holds the gap at iterate Z^j, bounded by C/(tau*(j+1))
    const double i1 = static_cast<double>(j + 1);
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", j + 1,
                  unit.min_gap_trace[j], adaptive.min_gap_trace[j], c0 / i1,
                  c0 / (tau_ad * i1));
    out << buf;
  }
  std::cout << "wrote " << a.out_dir << "/gaptrace.csv (" << rows
            << " rows, C = " << c0 << ")\n";
  return kExitSuccess;
}

// Builds the CLI and dispatches. Kept separate from main() so the test
// suite can drive it in-process.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"exact nonnegative matrix factorization via conic optimization"};
  app.require_subcommand(1);

  CommonArgs fa, ca, ra, ga;
  int n_inits = 20;
  std::string forms = "soc";

  auto* fcmd = app.add_subcommand("factorize",
                                  "run one factorization and write reports");
  add_instance_flags(fcmd, fa);
  add_run_flags(fcmd, fa);

  auto* ccmd = app.add_subcommand(
      "campaign", "run many seeded initializations and tally successes");
  add_instance_flags(ccmd, ca);
  add_run_flags(ccmd, ca);
  ccmd->add_option("--inits", n_inits, "number of initializations");
  ccmd->add_option("--forms", forms, "exp | soc | both")
      ->check(CLI::IsMember({"exp", "soc", "both"}));
  ccmd->add_option("--jobs", ca.jobs,
                   "parallel runs (default: CONIC_NMF_JOBS or all cores)");

  auto* rcmd =
      app.add_subcommand("rank1", "optimal rank-one over-approximation");
  add_instance_flags(rcmd, ra);
  rcmd->add_option("--seed", ra.seed, "seed (random instances only)");

  auto* gcmd = app.add_subcommand(
      "gaptrace", "minimum-gap traces for both step rules plus the "
                  "theoretical reference curve");
  add_instance_flags(gcmd, ga);
  add_run_flags(gcmd, ga);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitError;
  }

  try {
    if (fcmd->parsed()) {
      fa.spi_at_given = fcmd->count("--spi-at") > 0;
      return cmd_factorize(fa);
    }
    if (ccmd->parsed()) {
      ca.spi_at_given = ccmd->count("--spi-at") > 0;
      return cmd_campaign(ca, n_inits, forms);
    }
    if (rcmd->parsed()) return cmd_rank1(ra);
    if (gcmd->parsed()) {
      ga.spi_at_given = gcmd->count("--spi-at") > 0;
      return cmd_gaptrace(ga);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace cli
}  // namespace conicnmf
