// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "conicnmf/matrix.hpp"

namespace conicnmf {

// Accelerated HALS refinement: exact block coordinate descent over the
// columns of W and rows of H with closed-form nonnegative updates. Used as
// the final polish after the conic scheme.
struct HalsConfig {
  int max_outer_sweeps = 500;
  int inner_repeats = 2;        // fixed repeat count per half-sweep
  double accel_alpha = 0.0;     // > 0 switches to a size-proportional rule
  double zero_clip = 1e-16;     // denominator guard / dead-column threshold
  double success_tol = 1e-6;
  double min_improvement = 1e-12;  // stop when a sweep gains less than this
};

struct HalsResult {
  Eigen::MatrixXd W;
  Eigen::MatrixXd H;
  double relative_error = 0.0;
  int sweeps = 0;
};

namespace detail {

// One pass of exact coordinate updates over the rows of H (W fixed):
//   H_k <- max(0, H_k + (W_k'V - W_k'WH) / (W_k'W_k))
inline void hals_update_H(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W,
                          Eigen::MatrixXd& H, int repeats, double clip,
                          Rng& rng) {
  const int K = static_cast<int>(W.cols());
  const Eigen::MatrixXd WtV = W.transpose() * V;
  Eigen::MatrixXd WtW = W.transpose() * W;
  for (int rep = 0; rep < repeats; ++rep)
    for (int k = 0; k < K; ++k) {
      double denom = WtW(k, k);
      if (denom <= clip) {
        // dead column: W_:,k vanished; nothing to update here (the W pass
        // reseeds it)
        continue;
      }
      Eigen::RowVectorXd delta = (WtV.row(k) - WtW.row(k) * H) / denom;
      H.row(k) = (H.row(k) + delta).cwiseMax(0.0);
    }
  (void)rng;
}

inline void hals_reseed_dead_columns(Eigen::MatrixXd& W, double clip,
                                     Rng& rng) {
  for (int k = 0; k < W.cols(); ++k)
    if (W.col(k).squaredNorm() <= clip)
      for (int f = 0; f < W.rows(); ++f) W(f, k) = 1e-6 * rng.uniform_pos();
}

}  // namespace detail

inline HalsResult refine(const NonnegMatrix& V, const Eigen::MatrixXd& W0,
                         const Eigen::MatrixXd& H0,
                         const HalsConfig& cfg = {}) {
  if (W0.cols() != H0.rows() || W0.rows() != V.rows() || H0.cols() != V.cols())
    throw validation_error("refine: dimension mismatch");
  if (W0.minCoeff() < 0.0 || H0.minCoeff() < 0.0)
    throw validation_error("refine requires nonnegative factors");

  HalsResult res{W0, H0, 0.0, 0};
  Rng rng(0x48414c53);  // deterministic reseeding for dead columns
  const double vnorm = V.frobenius_norm();
  const int F = static_cast<int>(V.rows());
  const int N = static_cast<int>(V.cols());
  const int K = static_cast<int>(W0.cols());

  int repeats = cfg.inner_repeats;
  if (cfg.accel_alpha > 0.0) {
    // size-proportional acceleration: more inner repeats when the Gram
    // setup dominates a single coordinate pass
    const double rho = 1.0 + (static_cast<double>(F) * N) /
                                 (static_cast<double>(K) * (F + N));
    repeats = std::max(1, static_cast<int>(1.0 + cfg.accel_alpha * rho));
  }

  double prev_err = (V.matrix() - res.W * res.H).norm() / vnorm;
  for (int sweep = 0; sweep < cfg.max_outer_sweeps; ++sweep) {
    detail::hals_reseed_dead_columns(res.W, cfg.zero_clip, rng);
    detail::hals_update_H(V.matrix(), res.W, res.H, repeats, cfg.zero_clip,
                          rng);
    // W update by symmetry on the transposed problem
    Eigen::MatrixXd Wt = res.W.transpose(), Ht = res.H.transpose();
    detail::hals_update_H(V.matrix().transpose(), Ht, Wt, repeats,
                          cfg.zero_clip, rng);
    res.W = Wt.transpose();
    res.sweeps = sweep + 1;
    const double err = (V.matrix() - res.W * res.H).norm() / vnorm;
    const bool done = err <= cfg.success_tol || prev_err - err < cfg.min_improvement;
    prev_err = err;
    if (done) break;
  }
  res.relative_error = prev_err;
  return res;
}

}  // namespace conicnmf
