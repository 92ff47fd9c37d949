// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#include <catch2/catch_amalgamated.hpp>

#include "conicnmf/rank1.hpp"
#include "oracles.hpp"

using namespace conicnmf;
using Catch::Approx;

TEST_CASE("identity matrix has over-approximation value four", "[rank1]") {
  NonnegMatrix V(Eigen::MatrixXd::Identity(2, 2));
  auto sol = solve_rank1(V);
  REQUIRE(sol.objective == Approx(4.0).margin(1e-6));
  REQUIRE(sol.w(0) == Approx(0.5).margin(1e-4));
  REQUIRE(sol.w(1) == Approx(0.5).margin(1e-4));
  REQUIRE(sol.h(0) == Approx(2.0).margin(1e-3));
  REQUIRE(sol.h(1) == Approx(2.0).margin(1e-3));
}

TEST_CASE("rank-one inputs are their own optimal over-approximation",
          "[rank1]") {
  Rng rng(4);
  Eigen::VectorXd w(4), h(3);
  for (int f = 0; f < 4; ++f) w(f) = 0.2 + rng.uniform();
  for (int n = 0; n < 3; ++n) h(n) = 0.2 + rng.uniform();
  NonnegMatrix V(w * h.transpose());
  auto sol = solve_rank1(V);
  REQUIRE((sol.w * sol.h.transpose() - V.matrix()).norm() / V.matrix().norm() <
          1e-7);
  REQUIRE(sol.objective == Approx(w.sum() * h.sum()).epsilon(1e-7));
}

TEST_CASE("solution invariants hold", "[rank1]") {
  auto V = gen_random_product(4, 3, 2, 19);
  auto sol = solve_rank1(V);
  REQUIRE(sol.w.sum() == Approx(1.0).margin(1e-9));
  REQUIRE(sol.y.sum() <= 1.0 + 1e-9);
  for (int f = 0; f < 4; ++f) {
    const double x[3] = {sol.u(f), sol.y(f), std::sqrt(2.0)};
    REQUIRE(membership(rsoc_cone(0), x, 1e-9));
  }
  for (int f = 0; f < 4; ++f)
    for (int n = 0; n < 3; ++n)
      REQUIRE(sol.w(f) * sol.h(n) >= V(f, n) - 1e-9);
  // eliminating y and t reproduces the piecewise-linear objective
  double recomputed = 0.0;
  for (int n = 0; n < 3; ++n) {
    double mx = 0.0;
    for (int f = 0; f < 4; ++f) mx = std::max(mx, sol.u(f) * V(f, n));
    recomputed += mx;
  }
  REQUIRE(recomputed == Approx(sol.objective).margin(1e-9));
}

TEST_CASE("objective matches the simplex grid-and-polish reference",
          "[rank1]") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Eigen::MatrixXd M(4, 3);
    for (int f = 0; f < 4; ++f)
      for (int n = 0; n < 3; ++n) M(f, n) = 0.05 + rng.uniform();
    NonnegMatrix V(M);
    auto sol = solve_rank1(V);
    const double ref = oracles::rank1_grid_polish(M);
    REQUIRE(sol.objective == Approx(ref).epsilon(1e-4));
  }
}

TEST_CASE("no random feasible candidate beats the returned objective",
          "[rank1]") {
  Rng rng(88);
  for (const char* name : {"hex_a2", "Vinf1", "hex_ainf"}) {
    auto V = builtin_matrix(name);
    auto sol = solve_rank1(V);
    const int F = static_cast<int>(V.rows());
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXd w(F);
      for (int f = 0; f < F; ++f) w(f) = 1e-3 + rng.uniform();
      w /= w.sum();
      REQUIRE(oracles::rank1_objective(V.matrix(), w) >=
              sol.objective * (1.0 - 1e-9));
    }
  }
}

TEST_CASE("scaling the matrix scales the objective and keeps w", "[rank1]") {
  auto V = gen_random_product(5, 4, 2, 33);
  auto base = solve_rank1(V);
  NonnegMatrix V3(3.0 * V.matrix());
  auto scaled = solve_rank1(V3);
  REQUIRE(scaled.objective == Approx(3.0 * base.objective).epsilon(1e-9));
  REQUIRE((scaled.w - base.w).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("all-zero rows are reported as degenerate, not rejected",
          "[rank1]") {
  Eigen::MatrixXd M(3, 2);
  M << 1.0, 2.0, 0.0, 0.0, 0.5, 1.5;
  auto sol = solve_rank1(NonnegMatrix(M));
  REQUIRE(sol.degenerate_rows == std::vector<int>{1});
  for (int f = 0; f < 3; ++f)
    for (int n = 0; n < 2; ++n)
      REQUIRE(sol.w(f) * sol.h(n) >= M(f, n) - 1e-9);
}

TEST_CASE("perturbed initializer is deterministic and shrinks to the "
          "rank-one point",
          "[rank1]") {
  auto V = builtin_matrix("hex_a2");
  auto a = perturbed_init(V, 3, 0.03, 7);
  auto b = perturbed_init(V, 3, 0.03, 7);
  REQUIRE(a.W() == b.W());
  REQUIRE(a.H() == b.H());
  auto c = perturbed_init(V, 3, 0.03, 8);
  REQUIRE(a.W() != c.W());
  REQUIRE(a.W().minCoeff() > 0.0);
  REQUIRE(a.H().minCoeff() > 0.0);

  // d -> 0: every column of W proportional to the rank-one w
  auto tiny = perturbed_init(V, 3, 1e-9, 7);
  auto r1 = solve_rank1(V);
  for (int k = 0; k < 3; ++k) {
    const double ratio0 = tiny.W()(0, k) / r1.w(0);
    for (int f = 1; f < 6; ++f)
      REQUIRE(tiny.W()(f, k) / r1.w(f) == Approx(ratio0).epsilon(1e-5));
  }
  // the replicated product reproduces the over-approximation
  REQUIRE((tiny.W() * tiny.H() - r1.w * r1.h.transpose()).cwiseAbs().maxCoeff() <
          1e-5 * r1.h.maxCoeff());

  REQUIRE_THROWS_AS(perturbed_init(V, 3, 0.0, 7), validation_error);
  REQUIRE_THROWS_AS(perturbed_init(V, 0, 0.03, 7), validation_error);
}
