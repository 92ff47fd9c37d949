// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "conicnmf/ipm.hpp"
#include "conicnmf/matrix.hpp"

namespace conicnmf {

// Globally optimal rank-one nonnegative matrix over-approximation:
//
//   minimize sum_n t_n  s.t.  sum_f y_f <= 1, (u_f, y_f, sqrt(2)) in Qr3,
//                             t_n >= u_f V_fn
//
// with w_f = 1/u_f and h_n = max_f u_f V_fn recovered afterwards. The
// program is convex (2F+N variables, F(1+N)+1 constraints), so the
// returned over-approximation w h' >= V is a global optimum.
struct Rank1Solution {
  Eigen::VectorXd u;      // u_f = 1 / w_f
  Eigen::VectorXd y;      // y_f >= 1/u_f, budget sum_f y_f <= 1
  Eigen::VectorXd tvals;  // t_n = max_f u_f V_fn = h_n
  Eigen::VectorXd w;      // normalized so <w, e> = 1
  Eigen::VectorXd h;
  double objective = 0.0;  // sum_n h_n
  std::vector<int> degenerate_rows;  // all-zero rows of V (u capped by box)
  ConicSolution solver_stats;
};

inline Rank1Solution solve_rank1(const NonnegMatrix& Vin,
                                 const SolverConfig& cfg = {}) {
  const int F = static_cast<int>(Vin.rows());
  const int N = static_cast<int>(Vin.cols());
  const double scale = Vin.max_entry();
  if (!(scale > 0.0))
    throw validation_error("rank-one NMO of an all-zero matrix is trivial "
                           "and unsupported");
  const Eigen::MatrixXd V = Vin.matrix() / scale;

  // variables: u (F), y (F), t (N)
  ConicProgram p;
  p.nvars = 2 * F + N;
  p.c = Eigen::VectorXd::Zero(p.nvars);
  for (int n = 0; n < N; ++n) p.c(2 * F + n) = 1.0;

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> hs;
  int row = 0;
  // budget row: 1 - sum_f y_f >= 0
  for (int f = 0; f < F; ++f) trips.emplace_back(row, F + f, 1.0);
  hs.push_back(1.0);
  p.cones.push_back(ray_cone(row));
  ++row;
  // per-row cones (u_f, y_f, sqrt(2)) in Qr3, i.e. u_f y_f >= 1
  for (int f = 0; f < F; ++f) {
    trips.emplace_back(row, f, -1.0);
    hs.push_back(0.0);
    trips.emplace_back(row + 1, F + f, -1.0);
    hs.push_back(0.0);
    hs.push_back(std::sqrt(2.0));
    p.cones.push_back(rsoc_cone(row));
    row += 3;
  }
  // epigraph rows: t_n - u_f V_fn >= 0
  for (int f = 0; f < F; ++f)
    for (int n = 0; n < N; ++n) {
      trips.emplace_back(row, 2 * F + n, -1.0);
      if (V(f, n) != 0.0) trips.emplace_back(row, f, V(f, n));
      hs.push_back(0.0);
      p.cones.push_back(ray_cone(row));
      ++row;
    }
  p.G.resize(row, p.nvars);
  p.G.setFromTriplets(trips.begin(), trips.end());
  p.h = Eigen::Map<Eigen::VectorXd>(hs.data(), row);

  // u is implicitly >= 1 through the budget; the upper box only binds for
  // all-zero rows of V, whose u would otherwise be unbounded
  p.variable_bounds.assign(p.nvars, VarBound{});
  for (int f = 0; f < F; ++f) p.variable_bounds[f] = {0.0, 1e8};

  auto sol = solve(p, cfg);
  if (!sol.optimal())
    throw validation_error("rank-one NMO solve failed: " + sol.message);

  Rank1Solution out;
  out.solver_stats = sol;
  // Normalize <w, e> = 1 exactly and recompute the dependent quantities;
  // h takes the minimal value allowed by the constraints, so this
  // post-processing can only improve the objective.
  Eigen::VectorXd w_raw(F);
  for (int f = 0; f < F; ++f) w_raw(f) = 1.0 / sol.z(f);
  out.w = w_raw / w_raw.sum();
  out.u = out.w.cwiseInverse();
  out.y = out.w;
  out.h.resize(N);
  out.tvals.resize(N);
  for (int n = 0; n < N; ++n) {
    double mx = 0.0;
    for (int f = 0; f < F; ++f) mx = std::max(mx, out.u(f) * V(f, n));
    out.h(n) = mx * scale;
    out.tvals(n) = mx * scale;
  }
  out.objective = out.h.sum();
  for (int f = 0; f < F; ++f)
    if (Vin.matrix().row(f).maxCoeff() == 0.0) out.degenerate_rows.push_back(f);
  return out;
}

// Initializer of the iterative scheme: the rank-one NMO replicated across
// all K columns (h scaled by 1/K so the sum reproduces the NMO product),
// perturbed by nonnegative uniform noise of relative size d in the
// squared-variable parameterization.
inline FactorPair perturbed_init(const NonnegMatrix& V, int K, double d,
                                 std::uint64_t seed,
                                 const SolverConfig& cfg = {}) {
  if (!(d > 0.0)) throw validation_error("perturbation size d must be > 0");
  if (K < 1) throw validation_error("K must be >= 1");
  auto r1 = solve_rank1(V, cfg);
  const int F = static_cast<int>(V.rows());
  const int N = static_cast<int>(V.cols());

  Eigen::MatrixXd U(F, K), T(K, N);
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) U(f, k) = r1.w(f) * r1.w(f);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) {
      const double hk = r1.h(n) / K;
      T(k, n) = hk * hk;
    }
  const double znorm =
      std::sqrt(U.squaredNorm() + T.squaredNorm());

  Rng rng(seed);
  Eigen::MatrixXd RU(F, K), RT(K, N);
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) RU(f, k) = rng.uniform_pos();
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) RT(k, n) = rng.uniform_pos();
  const double rnorm = std::sqrt(RU.squaredNorm() + RT.squaredNorm());
  const double gain = d * znorm / rnorm;
  U += gain * RU;
  T += gain * RT;

  return FactorPair(U.cwiseSqrt(), T.cwiseSqrt());
}

}  // namespace conicnmf
