// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#include <catch2/catch_amalgamated.hpp>

#include "conicnmf/ipm.hpp"
#include "conicnmf/rng.hpp"
#include "oracles.hpp"

using namespace conicnmf;
using Catch::Approx;

namespace {

// minimize x1 subject to (x1, 1, 0) in Kexp, i.e. x1 >= e^0 = 1
ConicProgram exp_analytic_program() {
  ConicProgram p;
  p.nvars = 1;
  p.c = Eigen::VectorXd::Ones(1);
  std::vector<Eigen::Triplet<double>> t{{0, 0, -1.0}};
  p.G.resize(3, 1);
  p.G.setFromTriplets(t.begin(), t.end());
  p.h = Eigen::Vector3d(0.0, 1.0, 0.0);
  p.cones = {exp_cone(0)};
  return p;
}

// LP in the solver's slack form: minimize c.x s.t. A x <= b, x >= 0.
ConicProgram lp_program(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                        const Eigen::VectorXd& b) {
  ConicProgram p;
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  p.nvars = n;
  p.c = c;
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (A(i, j) != 0.0) t.emplace_back(i, j, A(i, j));  // slack = b - Ax
  p.G.resize(m, n);
  p.G.setFromTriplets(t.begin(), t.end());
  p.h = b;
  for (int i = 0; i < m; ++i) p.cones.push_back(ray_cone(i));
  p.variable_bounds.assign(n, VarBound{0.0, kInf});
  return p;
}

}  // namespace

TEST_CASE("single exponential cone analytic optimum", "[ipm]") {
  auto sol = solve(exp_analytic_program(), SolverConfig{});
  REQUIRE(sol.optimal());
  REQUIRE(sol.z(0) == Approx(1.0).margin(1e-6));
  REQUIRE(sol.feasibility == 0.0);  // membership recheck clean
}

TEST_CASE("three-variable LPs match brute-force vertex enumeration", "[ipm]") {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3, m = 4;
    Eigen::VectorXd c(n);
    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m);
    for (int j = 0; j < n; ++j) c(j) = 2.0 * rng.uniform() - 1.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = rng.uniform();
      b(i) = 1.0 + rng.uniform();
    }
    // cap every variable so the polytope is bounded
    Eigen::MatrixXd A2(m + n, n);
    Eigen::VectorXd b2(m + n);
    A2.topRows(m) = A;
    b2.head(m) = b;
    A2.bottomRows(n) = Eigen::MatrixXd::Identity(n, n);
    b2.tail(n).setConstant(10.0);

    const double expected = oracles::lp_vertex_enumeration(c, A2, b2);
    auto sol = solve(lp_program(c, A2, b2), SolverConfig{});
    REQUIRE(sol.optimal());
    REQUIRE(sol.objective ==
            Approx(expected).epsilon(1e-6).margin(1e-7));
  }
}

TEST_CASE("rank-one over-approximation program of the 2x2 identity", "[ipm]") {
  // After eliminating u2 via the tight budget, the objective reduces to
  // u1 + u1/(u1 - 1); locate its minimum by grid + shrink as the oracle.
  double best = kInf, best_u = 0.0;
  for (double u = 1.01; u < 10.0; u += 0.001) {
    const double v = u + u / (u - 1.0);
    if (v < best) {
      best = v;
      best_u = u;
    }
  }
  REQUIRE(best == Approx(4.0).margin(1e-4));
  REQUIRE(best_u == Approx(2.0).margin(1e-2));

  // full program: min t1 + t2, sum y <= 1, (u_f, y_f, sqrt 2) in Qr3,
  // t_n >= u_f V_fn with V = I
  ConicProgram p;
  p.nvars = 6;  // u1 u2 y1 y2 t1 t2
  p.c = Eigen::VectorXd::Zero(6);
  p.c(4) = p.c(5) = 1.0;
  std::vector<Eigen::Triplet<double>> tr;
  std::vector<double> hs;
  tr.emplace_back(0, 2, 1.0);
  tr.emplace_back(0, 3, 1.0);
  hs.push_back(1.0);
  int row = 1;
  for (int f = 0; f < 2; ++f) {
    tr.emplace_back(row, f, -1.0);
    hs.push_back(0.0);
    tr.emplace_back(row + 1, 2 + f, -1.0);
    hs.push_back(0.0);
    hs.push_back(std::sqrt(2.0));
    row += 3;
  }
  for (int f = 0; f < 2; ++f)
    for (int n = 0; n < 2; ++n) {
      tr.emplace_back(row, 4 + n, -1.0);
      if (f == n) tr.emplace_back(row, f, 1.0);  // V = I
      hs.push_back(0.0);
      ++row;
    }
  p.G.resize(row, 6);
  p.G.setFromTriplets(tr.begin(), tr.end());
  p.h = Eigen::Map<Eigen::VectorXd>(hs.data(), row);
  p.cones = {ray_cone(0), rsoc_cone(1), rsoc_cone(4),
             ray_cone(7), ray_cone(8), ray_cone(9), ray_cone(10)};

  auto sol = solve(p, SolverConfig{});
  REQUIRE(sol.optimal());
  REQUIRE(sol.objective == Approx(4.0).margin(1e-6));
  REQUIRE(sol.z(0) == Approx(2.0).margin(1e-4));  // u = (2, 2)
  REQUIRE(sol.z(1) == Approx(2.0).margin(1e-4));
}

TEST_CASE("phase one finds interior points and reports contradictions",
          "[ipm]") {
  // x >= 1 and x <= 0 as Box cone blocks on the same variable
  ConicProgram p;
  p.nvars = 1;
  p.c = Eigen::VectorXd::Ones(1);
  std::vector<Eigen::Triplet<double>> t{{0, 0, -1.0}, {1, 0, -1.0}};
  p.G.resize(2, 1);
  p.G.setFromTriplets(t.begin(), t.end());
  p.h = Eigen::Vector2d::Zero();
  p.cones = {box_cone(0, 1.0, kInf), box_cone(1, -kInf, 0.0)};
  auto r = phase1(p, SolverConfig{});
  REQUIRE(r.status == Phase1Result::Status::Infeasible);

  // same structure but compatible: x >= 1 and x <= 3
  p.cones = {box_cone(0, 1.0, kInf), box_cone(1, -kInf, 3.0)};
  auto r2 = phase1(p, SolverConfig{});
  REQUIRE(r2.interior());
  REQUIRE(r2.z(0) > 1.0);
  REQUIRE(r2.z(0) < 3.0);
}

TEST_CASE("under-approximation rows with a zero bound are infeasible",
          "[ipm]") {
  // sum_k t <= 0 with (t, 1, U+T) in Kexp forces t > 0: no interior point
  ConicProgram p;
  p.nvars = 3;  // t, u, v
  p.c = Eigen::VectorXd::Zero(3);
  p.c(1) = -1.0;
  std::vector<Eigen::Triplet<double>> tr{
      {0, 0, 1.0}, {1, 0, -1.0}, {3, 1, -1.0}, {3, 2, -1.0}};
  p.G.resize(4, 3);
  p.G.setFromTriplets(tr.begin(), tr.end());
  p.h = Eigen::Vector4d(0.0, 0.0, 1.0, 0.0);
  p.cones = {ray_cone(0), exp_cone(1)};
  p.variable_bounds = {VarBound{}, VarBound{-20.0, 20.0}, VarBound{-20.0, 20.0}};
  auto r = phase1(p, SolverConfig{});
  REQUIRE(r.status == Phase1Result::Status::Infeasible);
}

TEST_CASE("warm started solves keep membership and do not exceed the "
          "starting objective",
          "[ipm]") {
  Rng rng(5);
  const int n = 3, m = 4;
  Eigen::VectorXd c(n);
  Eigen::MatrixXd A(m + n, n);
  Eigen::VectorXd b(m + n);
  for (int j = 0; j < n; ++j) c(j) = rng.uniform() - 0.3;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = rng.uniform();
    b(i) = 1.0 + rng.uniform();
  }
  A.bottomRows(n) = Eigen::MatrixXd::Identity(n, n);
  b.tail(n).setConstant(10.0);
  auto p = lp_program(c, A, b);

  auto ph = phase1(p, SolverConfig{});
  REQUIRE(ph.interior());
  const double start_obj = c.dot(ph.z);
  BarrierSolver solver(p);
  auto sol = solver.solve(SolverConfig{}, ph.z);
  REQUIRE(sol.optimal());
  REQUIRE(sol.objective <= start_obj + 1e-9);
  REQUIRE(sol.feasibility == 0.0);
  REQUIRE(sol.complementarity <=
          SolverConfig{}.opt_tol * (1.0 + std::abs(sol.objective)) + 1e-15);

  // the barrier weight decreases strictly across outer stages (one cold
  // restart after a rejected warm start opens a new descent phase)
  REQUIRE(sol.cold_restarts <= 1);
  REQUIRE_FALSE(sol.mu_trace.empty());
  int increases = 0;
  for (size_t i = 1; i < sol.mu_trace.size(); ++i) {
    if (sol.mu_trace[i] >= sol.mu_trace[i - 1]) ++increases;
  }
  REQUIRE(increases <= sol.cold_restarts);
}
