// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0
//
// Acceptance suite: every criterion prints one pass/fail line with its
// measured statistic. Pass criterion numbers (1..8) as arguments to run a
// subset. Exit code is the number of failed criteria.

#include <cstdio>
#include <cstring>
#include <set>
#include <string>

#include "conicnmf/campaign.hpp"
#include "conicnmf/cli.hpp"
#include "oracles.hpp"

using namespace conicnmf;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] C%d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct InvariantTally {
  bool rate_ok = true;
  bool feasible = true;
  double worst_descent = 0.0;
  int aborted = 0;

  void absorb(const CampaignSummary& s) {
    for (const auto& row : s.rows) {
      rate_ok = rate_ok && row.all_rate_checks_ok;
      feasible = feasible && row.all_iterates_feasible;
      worst_descent = std::max(worst_descent, row.max_descent_violation);
      aborted += row.aborted;
    }
  }
  void absorb(const RunReport& r) {
    rate_ok = rate_ok && r.rate_check_ok;
    feasible = feasible && r.iterates_feasible;
    worst_descent = std::max(worst_descent, r.descent_violation);
    if (r.aborted) ++aborted;
  }
};

InvariantTally tally;

Campaign base_campaign() {
  Campaign c;
  c.n_inits = 20;
  c.driver.maxiter = 750;
  c.master_seed = 20260811;
  return c;
}

// C1: random 10x10 products of nonnegative rank 5, second-order form.
void criterion1() {
  Campaign c = base_campaign();
  c.instance.kind = InstanceSpec::Kind::Random;
  c.instance.F = c.instance.N = 10;
  c.instance.K = 5;
  c.K = 5;
  c.tags = {Formulation::SocOver};
  auto s = run_campaign(c);
  tally.absorb(s);
  const int succ = s.rows[0].successes;
  report(1, "random products 10x10 rank 5", succ >= 19,
         std::to_string(succ) + "/20 successes (>= 19 required)");
}

// C2: both formulations solve the easy hexagons in every run.
void criterion2() {
  bool all_pass = true;
  std::string detail;
  for (const auto& [name, K] :
       std::vector<std::pair<std::string, int>>{{"hex_a2", 3}, {"hex_a3", 4}}) {
    Campaign c = base_campaign();
    c.instance.name = name;
    c.K = K;
    c.tags = {Formulation::ExpUnder, Formulation::SocOver};
    auto s = run_campaign(c);
    tally.absorb(s);
    for (const auto& row : s.rows) {
      all_pass = all_pass && row.successes == row.n_inits;
      detail += name + "/" + to_string(row.tag) + " " +
                std::to_string(row.successes) + "/" +
                std::to_string(row.n_inits) + "  ";
    }
  }
  report(2, "easy hexagons, both formulations", all_pass, detail);
}

// C3: the hard instances keep a strictly positive success count.
void criterion3() {
  Campaign c = base_campaign();
  c.instance.name = "hex_ainf";
  c.K = 5;
  auto s1 = run_campaign(c);
  tally.absorb(s1);
  const int succ_hex = s1.rows[0].successes;

  Campaign c2 = base_campaign();
  c2.instance.name = "Vinf2";
  c2.K = 4;
  c2.n_inits = 30;
  c2.driver.maxiter = 3000;
  auto s2 = run_campaign(c2);
  tally.absorb(s2);
  const int succ_rigid = s2.rows[0].successes;

  report(3, "hard instances reach exactness sometimes",
         succ_hex > 0 && succ_rigid > 0,
         "hex_ainf " + std::to_string(succ_hex) +
             "/20 (expect about 8), Vinf2 " + std::to_string(succ_rigid) +
             "/30 (expect about 11)");
}

// C4: the perturbed rank-one initializer beats uniform on hex_ainf.
void criterion4() {
  Campaign uniform = base_campaign();
  uniform.instance.name = "hex_ainf";
  uniform.K = 5;
  uniform.n_inits = 30;
  auto su = run_campaign(uniform);
  tally.absorb(su);

  Campaign seeded = uniform;
  seeded.driver.init = InitKind::PerturbedRank1;
  seeded.driver.rank1_d = 0.03;
  auto sr = run_campaign(seeded);
  tally.absorb(sr);

  const int u = su.rows[0].successes, r = sr.rows[0].successes;
  report(4, "rank-one initialization effect", r > u,
         "perturbed rank-one " + std::to_string(r) + "/30 vs uniform " +
             std::to_string(u) + "/30");
}

// C5: the sparsity-integration worked example. Runs that stall above the
// tolerance until the trigger must be unlocked by it, dropping the error
// at least tenfold by termination.
void criterion5() {
  auto V = builtin_matrix("appB_example");
  int successes = 0;
  bool drops_ok = true;
  int spi_successes = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DriverConfig cfg;
    cfg.maxiter = 500;
    cfg.spi_schedule = std::vector<int>{400};
    cfg.spi_threshold = 1e-3;
    cfg.seed = seed;
    auto rep = run(V, 5, Formulation::SocOver, cfg);
    tally.absorb(rep);
    if (!rep.success) continue;
    ++successes;
    for (const auto& ev : rep.spi_events)
      if (!ev.rolled_back && ev.zeroed_U + ev.zeroed_T > 0) {
        ++spi_successes;
        if (ev.error_before < 10.0 * rep.final_error) drops_ok = false;
      }
  }
  report(5, "sparsity integration worked example",
         successes >= 1 && drops_ok,
         std::to_string(successes) + "/10 exact, " +
             std::to_string(spi_successes) +
             " unlocked by the trigger, all with >= 10x error drop: " +
             (drops_ok ? "yes" : "no"));
}

// C6: zero rate-certificate violations across everything this binary ran.
void criterion6() {
  report(6, "minimal-gap rate certificate", tally.rate_ok,
         tally.rate_ok ? "no violations recorded across all runs"
                       : "violation recorded");
}

// C7: invariant suite (descent, gap sign, feasibility, membership
// rechecks, derivative cross-checks, refinement monotonicity).
void criterion7() {
  bool ok = tally.feasible && tally.worst_descent <= 1e-8;
  std::string detail = "worst descent slack " +
                       std::to_string(tally.worst_descent) + ", feasible " +
                       (tally.feasible ? "yes" : "no");

  // barrier derivative spot checks
  Rng rng(123);
  for (int trial = 0; trial < 20 && ok; ++trial) {
    const Cone c = trial % 2 ? rsoc_cone(0) : exp_cone(0);
    double x[3];
    x[1] = 0.3 + rng.uniform();
    x[2] = rng.uniform() - 0.5;
    x[0] = trial % 2 ? 0.3 + rng.uniform()
                     : x[1] * std::exp(x[2] / x[1]) + 0.5 + rng.uniform();
    if (trial % 2) x[2] *= std::sqrt(2.0 * x[0] * x[1]) * 0.9;
    double g[3], h[9];
    barrier_derivs(c, x, g, h);
    for (int i = 0; i < 3; ++i) {
      double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      const double fd =
          (barrier_value(c, xp) - barrier_value(c, xm)) / 2e-6;
      if (std::abs(g[i] - fd) >
          1e-5 * std::max(1.0, std::abs(fd)) + 1e-7) {
        ok = false;
        detail += "; barrier gradient mismatch";
      }
    }
  }

  // objective derivative spot check
  {
    auto rp = gen_random_product_with_factors(4, 4, 2, 9);
    Eigen::MatrixXd Vn = rp.V.matrix() / rp.V.max_entry();
    Rng r2(5);
    Eigen::MatrixXd W(4, 2), H(2, 4);
    for (int f = 0; f < 4; ++f)
      for (int k = 0; k < 2; ++k) W(f, k) = 0.2 + r2.uniform();
    for (int k = 0; k < 2; ++k)
      for (int n = 0; n < 4; ++n) H(k, n) = 0.2 + r2.uniform();
    for (Formulation tag : {Formulation::SocOver, Formulation::ExpUnder}) {
      auto Z = from_factors(Vn, W, H, tag);
      Eigen::MatrixXd gU, gT;
      grad_phi(Z, {}, gU, gT);
      LatentPoint Zp = Z, Zm = Z;
      Zp.U(1, 1) += 1e-6;
      Zm.U(1, 1) -= 1e-6;
      const double fd = (phi(Zp) - phi(Zm)) / 2e-6;
      if (std::abs(gU(1, 1) - fd) > 1e-6 * std::max(1.0, std::abs(fd))) {
        ok = false;
        detail += "; objective gradient mismatch";
      }
    }
  }

  // refinement monotonicity across block updates
  {
    auto rp = gen_random_product_with_factors(5, 5, 2, 77);
    Rng r3(7);
    Eigen::MatrixXd W(5, 2), H(2, 5);
    for (int f = 0; f < 5; ++f)
      for (int k = 0; k < 2; ++k) W(f, k) = r3.uniform();
    for (int k = 0; k < 2; ++k)
      for (int n = 0; n < 5; ++n) H(k, n) = r3.uniform();
    double prev = (rp.V.matrix() - W * H).squaredNorm();
    for (int sweep = 0; sweep < 10; ++sweep) {
      Rng dummy(0);
      detail::hals_update_H(rp.V.matrix(), W, H, 1, 1e-16, dummy);
      const double mid = (rp.V.matrix() - W * H).squaredNorm();
      if (mid > prev + 1e-12) ok = false;
      Eigen::MatrixXd Wt = W.transpose(), Ht = H.transpose();
      detail::hals_update_H(rp.V.matrix().transpose(), Ht, Wt, 1, 1e-16,
                            dummy);
      W = Wt.transpose();
      const double after = (rp.V.matrix() - W * H).squaredNorm();
      if (after > mid + 1e-12) ok = false;
      prev = after;
    }
  }

  // membership recheck on optimal returns
  {
    auto V = builtin_matrix("hex_a2").matrix() / 1.5;
    Eigen::MatrixXd gU = Eigen::MatrixXd::Ones(6, 3),
                    gT = Eigen::MatrixXd::Ones(3, 6);
    auto built = build_program(V, 3, Formulation::SocOver, {}, gU, gT);
    auto sol = solve(built.program, SolverConfig{});
    if (!sol.optimal() || sol.feasibility != 0.0) {
      ok = false;
      detail += "; membership recheck failed";
    }
  }

  if (tally.aborted > 0)
    detail += "; aborted runs: " + std::to_string(tally.aborted);
  report(7, "invariant suite", ok, detail);
}

// C8: rank-one oracle equivalence.
void criterion8() {
  NonnegMatrix I2(Eigen::MatrixXd::Identity(2, 2));
  auto ident = solve_rank1(I2);
  bool ok = std::abs(ident.objective - 4.0) <= 1e-6;
  double worst = 0.0;
  Rng rng(20260811);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd M(4, 3);
    for (int f = 0; f < 4; ++f)
      for (int n = 0; n < 3; ++n) M(f, n) = 0.05 + rng.uniform();
    auto sol = solve_rank1(NonnegMatrix(M));
    const double ref = oracles::rank1_grid_polish(M);
    worst = std::max(worst, std::abs(sol.objective - ref) / ref);
  }
  ok = ok && worst <= 1e-4;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "identity objective %.9f (want 4), worst oracle deviation "
                "%.2e over 50 matrices",
                ident.objective, worst);
  report(8, "rank-one oracle equivalence", ok, buf);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return selected.empty() || selected.count(id); };

  if (wanted(1)) criterion1();
  if (wanted(2)) criterion2();
  if (wanted(3)) criterion3();
  if (wanted(4)) criterion4();
  if (wanted(5)) criterion5();
  if (wanted(6)) criterion6();
  if (wanted(7)) criterion7();
  if (wanted(8)) criterion8();

  std::printf("%s (%d criterion failures)\n",
              failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              failures);
  return failures;
}
