// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conicnmf/formulations.hpp"
#include "conicnmf/hals.hpp"
#include "conicnmf/ipm.hpp"
#include "conicnmf/matrix.hpp"
#include "conicnmf/rank1.hpp"

namespace conicnmf {

// Unit step = successive conic convex approximation (the linearized
// subproblem is minimized exactly and its optimum taken as the next
// iterate); Adaptive = classical Frank-Wolfe step 2/(i+1).
enum class StepRule { Unit, Adaptive };
enum class RefineMode { Auto, On, Off };
enum class InitKind { Uniform, PerturbedRank1, Explicit };

inline std::string to_string(StepRule s) {
  return s == StepRule::Unit ? "unit" : "adaptive";
}

struct DriverConfig {
  int maxiter = 750;  // 3000 is the working setting for the rigid instances
  StepRule step_rule = StepRule::Unit;
  double success_tol = 1e-6;
  bool early_stop = true;  // full traces (reference protocol) need this off
  // unset = the default two triggers at 80% and 95% of maxiter; an empty
  // list disables the procedure entirely
  std::optional<std::vector<int>> spi_schedule;
  double spi_threshold = 1e-3;
  SpiUnits spi_units = SpiUnits::FactorSpace;
  RefineMode refine = RefineMode::Auto;
  std::uint64_t seed = 0;
  InitKind init = InitKind::Uniform;
  double rank1_d = 0.03;  // perturbation size, paper range [0.01, 0.05]
  std::optional<FactorPair> explicit_init;
  bool normalize = true;   // solve V / max(V) internally
  bool eps_shift = false;  // ExpUnder: shift zero entries of V by eps
  double eps_rel = 1e-8;
  double wh_bound = 1e4;
  HalsConfig hals;
  SolverConfig ipm;
  int verbosity = 0;
  std::ostream* log = nullptr;

  std::vector<int> effective_spi_schedule() const {
    if (spi_schedule) return *spi_schedule;
    return {static_cast<int>(std::ceil(0.8 * maxiter)),
            static_cast<int>(std::ceil(0.95 * maxiter))};
  }
};

struct SpiEventRecord {
  int iteration = 0;
  int zeroed_U = 0;
  int zeroed_T = 0;
  bool rolled_back = false;
  bool rank_collapse = false;
  double error_before = 0.0;
};

// Full per-run trace. Indexing: entry j describes iteration j+1.
struct RunReport {
  std::string instance;
  int F = 0, N = 0, K = 0;
  Formulation tag = Formulation::SocOver;
  StepRule step_rule = StepRule::Unit;
  std::uint64_t seed = 0;
  int maxiter = 0;
  double scale = 1.0;  // V was divided by this internally

  std::vector<double> phi_trace;      // Phi(Z^i), internal (normalized) units
  std::vector<double> gap_trace;      // mu^(i)
  std::vector<double> min_gap_trace;  // running minimum of gap_trace
  std::vector<double> rel_err_trace;
  std::vector<unsigned char> spi_flag;
  std::vector<int> newton_steps;
  std::vector<SpiEventRecord> spi_events;

  double phi0 = 0.0;    // Phi(Z^0)
  double phi_lb = 0.0;  // certified lower bound on Phi over Q
  int iterations = 0;
  std::optional<FactorPair> factors;  // input units
  double final_error = kInf;
  bool success = false;
  bool refined = false;
  double error_before_refine = kInf;
  bool aborted = false;
  std::string abort_reason;
  bool rate_check_ok = false;
  double descent_violation = 0.0;   // worst Phi increase beyond tau*mu slack
  bool iterates_feasible = true;
  double wall_time_s = 0.0;
};

// FW gap <grad, Z - V_lmo> over the U,T coordinates. Tiny negatives from
// subproblem tolerance are clamped to zero; a clearly negative value means
// the oracle was not solved and is a contract violation.
inline double fw_gap(const Eigen::MatrixXd& gU, const Eigen::MatrixXd& gT,
                     const LatentPoint& Z, const LatentPoint& Vlmo) {
  double at_z = 0.0, at_v = 0.0;
  for (int f = 0; f < Z.F(); ++f)
    for (int k = 0; k < Z.K(); ++k) {
      at_z += gU(f, k) * Z.U(f, k);
      at_v += gU(f, k) * Vlmo.U(f, k);
    }
  for (int k = 0; k < Z.K(); ++k)
    for (int n = 0; n < Z.N(); ++n) {
      at_z += gT(k, n) * Z.T(k, n);
      at_v += gT(k, n) * Vlmo.T(k, n);
    }
  double gap = at_z - at_v;
  const double floor_scale =
      std::max(1.0, std::max(std::abs(at_z), std::abs(at_v)));
  if (gap < -1e-6 * floor_scale)
    throw validation_error(
        "negative FW gap: the linear minimization oracle was not solved to "
        "tolerance (gap " + std::to_string(gap) + ")");
  if (gap < 0.0 && gap >= -1e-9 * floor_scale) gap = 0.0;
  return gap;
}

// Rate certificate over a finished trace: the j-th recorded gap is the
// gap at iterate Z^(j-1), so the running minimum over the first j records
// must satisfy min_gap * tau_tilde * j <= Phi(Z0) - lb, with lb a
// certified lower bound standing in for the unknowable optimum.
inline bool rate_check(const RunReport& report, double tau_tilde) {
  const double c0 = report.phi0 - report.phi_lb;
  for (size_t j = 0; j < report.min_gap_trace.size(); ++j) {
    const double denom = static_cast<double>(j + 1);
    if (report.min_gap_trace[j] * tau_tilde * denom > c0 * (1.0 + 1e-9))
      return false;
  }
  return true;
}

inline double tau_tilde_for(StepRule rule, int maxiter) {
  return rule == StepRule::Unit ? 1.0 : 2.0 / (maxiter + 1.0);
}

// Runs the successive linearization scheme (Algorithm block structure:
// initialization, iterative conic updates with SPI, optional refinement).
inline RunReport run(const NonnegMatrix& Vin, int K, Formulation tag,
                     const DriverConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.instance = Vin.name();
  rep.F = static_cast<int>(Vin.rows());
  rep.N = static_cast<int>(Vin.cols());
  rep.K = K;
  rep.tag = tag;
  rep.step_rule = cfg.step_rule;
  rep.seed = cfg.seed;
  rep.maxiter = cfg.maxiter;

  if (K < 1 || K > std::min(rep.F, rep.N))
    throw validation_error("K must satisfy 1 <= K <= min(F, N)");

  rep.scale = cfg.normalize ? Vin.max_entry() : 1.0;
  if (!(rep.scale > 0.0)) throw validation_error("V must have a positive entry");
  Eigen::MatrixXd V = Vin.matrix() / rep.scale;
  const double wh_unscale = std::sqrt(rep.scale);

  if (tag == Formulation::ExpUnder && V.minCoeff() == 0.0) {
    if (!cfg.eps_shift)
      throw validation_error(
          "ExpUnder rejects zero entries of V by default; enable eps_shift");
    V.array() += cfg.eps_rel * V.maxCoeff();
  }

  // Block 1: initialization
  Eigen::MatrixXd W0, H0;
  switch (cfg.init) {
    case InitKind::Uniform: {
      Rng rng(cfg.seed);
      W0.resize(rep.F, K);
      H0.resize(K, rep.N);
      for (int f = 0; f < rep.F; ++f)
        for (int k = 0; k < K; ++k) W0(f, k) = rng.uniform_pos();
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < rep.N; ++n) H0(k, n) = rng.uniform_pos();
      break;
    }
    case InitKind::PerturbedRank1: {
      auto P = perturbed_init(Vin, K, cfg.rank1_d, cfg.seed, cfg.ipm);
      W0 = P.W() / wh_unscale;  // convert to the normalized problem's units
      H0 = P.H() / wh_unscale;
      break;
    }
    case InitKind::Explicit: {
      if (!cfg.explicit_init)
        throw validation_error("explicit initializer requested but missing");
      W0 = cfg.explicit_init->W() / wh_unscale;
      H0 = cfg.explicit_init->H() / wh_unscale;
      break;
    }
  }

  LatentPoint Z = from_factors(V, W0, H0, tag);
  SparsityPattern pattern(rep.F, K, rep.N);
  rep.phi_lb = phi_lower_bound(V, tag);
  rep.phi0 = phi(Z, pattern);

  BuildOptions opts;
  opts.wh_bound = cfg.wh_bound;
  auto widen_for = [&](const LatentPoint& zp) {
    opts.widen_lo = std::min(zp.U.minCoeff(), zp.T.minCoeff()) - 2.0;
    opts.widen_hi =
        std::max({zp.U.maxCoeff(), zp.T.maxCoeff(), 1.0}) * 4.0;
  };
  widen_for(Z);

  Eigen::MatrixXd gU, gT;
  grad_phi(Z, pattern, gU, gT);
  auto built = build_program(V, K, tag, pattern, gU, gT, opts);
  auto solver = std::make_unique<BarrierSolver>(built.program);
  Eigen::VectorXd anchor = built.layout.pack(Z);

  const auto spi_schedule = cfg.effective_spi_schedule();
  double min_gap = kInf;
  double prev_phi = rep.phi0;
  bool solver_retry_used = false;

  auto record_error = [&](const LatentPoint& zp) {
    auto P = to_factors(zp, pattern);
    return relative_error(V, P.W(), P.H());
  };

  for (int i = 1; i <= cfg.maxiter; ++i) {
    grad_phi(Z, pattern, gU, gT);
    solver->set_objective(built.layout.pack_gradient(gU, gT));
    auto sol = solver->solve(cfg.ipm, anchor);
    if (!sol.optimal() && !solver_retry_used) {
      // one retry from a fresh interior point before giving up
      solver_retry_used = true;
      auto p1 = phase1(built.program, cfg.ipm, built.layout.pack(Z));
      if (p1.interior()) {
        anchor = p1.z;
        sol = solver->solve(cfg.ipm, anchor);
      }
    }
    if (!sol.optimal()) {
      rep.aborted = true;
      rep.abort_reason = "subproblem solve " + to_string(sol.status) +
                         (sol.message.empty() ? "" : ": " + sol.message);
      break;
    }
    if (sol.z_mid.size()) anchor = sol.z_mid;

    LatentPoint Vlmo = built.layout.unpack(sol.z);
    const double gap = fw_gap(gU, gT, Z, Vlmo);
    min_gap = std::min(min_gap, gap);

    const double tau =
        cfg.step_rule == StepRule::Unit ? 1.0 : 2.0 / (i + 1.0);
    Z.U = (1.0 - tau) * Z.U + tau * Vlmo.U;
    Z.T = (1.0 - tau) * Z.T + tau * Vlmo.T;
    Z.t = (1.0 - tau) * Z.t + tau * Vlmo.t;

    const double phi_i = phi(Z, pattern);
    const double err_i = record_error(Z);
    rep.phi_trace.push_back(phi_i);
    rep.gap_trace.push_back(gap);
    rep.min_gap_trace.push_back(min_gap);
    rep.rel_err_trace.push_back(err_i);
    rep.newton_steps.push_back(sol.newton_steps);
    rep.spi_flag.push_back(0);
    rep.iterations = i;

    // descent certificate Phi(Z^i) <= Phi(Z^{i-1}) - tau*gap + slack
    rep.descent_violation = std::max(
        rep.descent_violation, phi_i - (prev_phi - tau * gap));
    prev_phi = phi_i;
    if (!latent_feasible(Z, built.V, pattern, 1e-7 * (1.0 + V.maxCoeff())))
      rep.iterates_feasible = false;

    if (cfg.verbosity >= 1 && cfg.log && (i % 50 == 0 || i == 1))
      (*cfg.log) << "iter " << i << " phi " << phi_i << " gap " << gap
                 << " err " << err_i << "\n";

    if (cfg.early_stop && err_i <= cfg.success_tol) break;

    // Sparsity Pattern Integration at scheduled iterations
    if (std::find(spi_schedule.begin(), spi_schedule.end(), i) !=
        spi_schedule.end()) {
      SpiEventRecord ev;
      ev.iteration = i;
      ev.error_before = err_i;
      auto outcome = spi_apply(Z, pattern, cfg.spi_threshold, cfg.spi_units,
                               wh_unscale);
      ev.zeroed_U = outcome.newly_zeroed_U;
      ev.zeroed_T = outcome.newly_zeroed_T;
      ev.rank_collapse = outcome.rank_collapse_warning;
      if (outcome.newly_zeroed_U + outcome.newly_zeroed_T > 0) {
        bool ok = false;
        try {
          grad_phi(outcome.Z, outcome.pattern, gU, gT);
          widen_for(outcome.Z);
          auto rebuilt =
              build_program(V, K, tag, outcome.pattern, gU, gT, opts);
          auto p1 = phase1(rebuilt.program, cfg.ipm,
                           rebuilt.layout.pack(outcome.Z));
          if (p1.interior()) {
            built = std::move(rebuilt);
            solver = std::make_unique<BarrierSolver>(built.program);
            pattern = outcome.pattern;
            anchor = p1.z;
            Z = built.layout.unpack(p1.z);
            prev_phi = phi(Z, pattern);  // new objective segment
            ok = true;
          }
        } catch (const infeasible_pattern_error&) {
          ok = false;
        }
        if (!ok) {
          // roll the event back and continue on the previous program
          ev.rolled_back = true;
          ev.zeroed_U = 0;
          ev.zeroed_T = 0;
        }
      }
      rep.spi_flag.back() = 1;
      rep.spi_events.push_back(ev);
    }
  }

  // final factors in input units
  auto P = to_factors(Z, pattern);
  Eigen::MatrixXd Wf = P.W() * wh_unscale;
  Eigen::MatrixXd Hf = P.H() * wh_unscale;
  rep.final_error = relative_error(Vin.matrix(), Wf, Hf);

  // Block 3: refinement (always for the exponential form under Auto; for
  // the second-order form only to rescue near-misses)
  bool do_refine = cfg.refine == RefineMode::On;
  if (cfg.refine == RefineMode::Auto) {
    if (tag == Formulation::ExpUnder)
      do_refine = true;
    else
      do_refine = rep.final_error > cfg.success_tol &&
                  rep.final_error <= 1e-4;
  }
  if (do_refine && !rep.aborted) {
    rep.error_before_refine = rep.final_error;
    HalsConfig hc = cfg.hals;
    hc.success_tol = cfg.success_tol;
    auto refined = refine(Vin, Wf, Hf, hc);
    if (refined.relative_error <= rep.final_error) {
      Wf = refined.W;
      Hf = refined.H;
      rep.final_error = refined.relative_error;
    }
    rep.refined = true;
  }

  rep.factors = FactorPair(std::move(Wf), std::move(Hf));
  rep.success = rep.final_error <= cfg.success_tol;
  rep.rate_check_ok =
      rate_check(rep, tau_tilde_for(cfg.step_rule, cfg.maxiter));
  rep.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
  return rep;
}

}  // namespace conicnmf
