// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "conicnmf/conic_program.hpp"
#include "conicnmf/matrix.hpp"

namespace conicnmf {

// The two concave-over-cones reformulations of exact NMF.
//   ExpUnder: W = exp(U), H = exp(T); WH <= V elementwise (under-approx),
//             Phi(Z) = -log sum_{f,n,k} exp(U_fk + T_kn), minimized.
//   SocOver:  W = sqrt(U), H = sqrt(T); WH >= V elementwise (over-approx),
//             Phi(Z) = sum_{f,n,k} sqrt(U_fk) sqrt(T_kn), minimized.
enum class Formulation { ExpUnder, SocOver };

inline std::string to_string(Formulation f) {
  return f == Formulation::ExpUnder ? "exp" : "soc";
}

struct infeasible_pattern_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Indices of factor entries pinned to exact zero. Grows monotonically over
// a run; t entries implied by a zeroed U or T entry are dropped with it.
class SparsityPattern {
 public:
  SparsityPattern() = default;
  SparsityPattern(int F, int K, int N)
      : F_(F), K_(K), N_(N), zu_(F * K, 0), zt_(K * N, 0) {}

  int F() const { return F_; }
  int K() const { return K_; }
  int N() const { return N_; }
  bool empty() const { return nzu_ == 0 && nzt_ == 0; }
  int num_zeroed_U() const { return nzu_; }
  int num_zeroed_T() const { return nzt_; }

  bool U_zeroed(int f, int k) const { return zu_[f * K_ + k] != 0; }
  bool T_zeroed(int k, int n) const { return zt_[k * N_ + n] != 0; }
  bool t_dropped(int f, int k, int n) const {
    return U_zeroed(f, k) || T_zeroed(k, n);
  }

  void zero_U(int f, int k) {
    if (!zu_[f * K_ + k]) {
      zu_[f * K_ + k] = 1;
      ++nzu_;
    }
  }
  void zero_T(int k, int n) {
    if (!zt_[k * N_ + n]) {
      zt_[k * N_ + n] = 1;
      ++nzt_;
    }
  }

  // True when some inner index k lost its entire W column or H row.
  bool rank_collapsed() const {
    for (int k = 0; k < K_; ++k) {
      bool col_gone = true, row_gone = true;
      for (int f = 0; f < F_ && col_gone; ++f)
        if (!U_zeroed(f, k)) col_gone = false;
      for (int n = 0; n < N_ && row_gone; ++n)
        if (!T_zeroed(k, n)) row_gone = false;
      if (col_gone || row_gone) return true;
    }
    return false;
  }

 private:
  int F_ = 0, K_ = 0, N_ = 0;
  std::vector<unsigned char> zu_, zt_;
  int nzu_ = 0, nzt_ = 0;
};

// Change-of-variable iterate Z = (U, T) plus the auxiliary tensor t used by
// the conic constraints. Entries under the sparsity pattern are exact zeros.
struct LatentPoint {
  Formulation tag = Formulation::SocOver;
  Eigen::MatrixXd U;   // F x K
  Eigen::MatrixXd T;   // K x N
  Eigen::VectorXd t;   // F*K*N, flattened as (f*K + k)*N + n

  int F() const { return static_cast<int>(U.rows()); }
  int K() const { return static_cast<int>(U.cols()); }
  int N() const { return static_cast<int>(T.cols()); }
  double t_at(int f, int k, int n) const { return t((f * K() + k) * N() + n); }
  double& t_at(int f, int k, int n) { return t((f * K() + k) * N() + n); }
};

// Compact variable numbering for the program built under a pattern:
// surviving U entries first, then T, then t.
struct FormulationLayout {
  int F = 0, K = 0, N = 0;
  Formulation tag = Formulation::SocOver;
  SparsityPattern pattern;
  std::vector<int> u_var, v_var, t_var;  // -1 for dropped entries
  int n_u = 0, n_v = 0, n_t = 0;

  int nvars() const { return n_u + n_v + n_t; }

  FormulationLayout() = default;
  FormulationLayout(int Fin, int Kin, int Nin, Formulation tagin,
                    SparsityPattern pat)
      : F(Fin), K(Kin), N(Nin), tag(tagin), pattern(std::move(pat)) {
    u_var.assign(F * K, -1);
    v_var.assign(K * N, -1);
    t_var.assign(static_cast<size_t>(F) * K * N, -1);
    int idx = 0;
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        if (!pattern.U_zeroed(f, k)) u_var[f * K + k] = idx++;
    n_u = idx;
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n)
        if (!pattern.T_zeroed(k, n)) v_var[k * N + n] = idx++;
    n_v = idx - n_u;
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
          if (!pattern.t_dropped(f, k, n))
            t_var[(static_cast<size_t>(f) * K + k) * N + n] = idx++;
    n_t = idx - n_u - n_v;
  }

  Eigen::VectorXd pack(const LatentPoint& Z) const {
    Eigen::VectorXd z(nvars());
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        if (u_var[f * K + k] >= 0) z(u_var[f * K + k]) = Z.U(f, k);
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n)
        if (v_var[k * N + n] >= 0) z(v_var[k * N + n]) = Z.T(k, n);
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
          const int id = t_var[(static_cast<size_t>(f) * K + k) * N + n];
          if (id >= 0) z(id) = Z.t_at(f, k, n);
        }
    return z;
  }

  LatentPoint unpack(const Eigen::VectorXd& z) const {
    LatentPoint Z;
    Z.tag = tag;
    Z.U = Eigen::MatrixXd::Zero(F, K);
    Z.T = Eigen::MatrixXd::Zero(K, N);
    Z.t = Eigen::VectorXd::Zero(static_cast<size_t>(F) * K * N);
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        if (u_var[f * K + k] >= 0) Z.U(f, k) = z(u_var[f * K + k]);
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n)
        if (v_var[k * N + n] >= 0) Z.T(k, n) = z(v_var[k * N + n]);
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
          const int id = t_var[(static_cast<size_t>(f) * K + k) * N + n];
          if (id >= 0) Z.t_at(f, k, n) = z(id);
        }
    return Z;
  }

  // Objective vector: gradient coefficients on surviving U,T, zero on t.
  Eigen::VectorXd pack_gradient(const Eigen::MatrixXd& gU,
                                const Eigen::MatrixXd& gT) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nvars());
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        if (u_var[f * K + k] >= 0) c(u_var[f * K + k]) = gU(f, k);
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n)
        if (v_var[k * N + n] >= 0) c(v_var[k * N + n]) = gT(k, n);
    return c;
  }
};

struct BuildOptions {
  double wh_bound = 1e4;  // compactness bound B on W,H entries
  bool eps_shift = false;  // ExpUnder only: replace V by V + eps
  double eps_rel = 1e-8;   // eps = eps_rel * max(V)
  // Optional widening of the canonical U,T box so a caller-supplied start
  // point is strictly inside it (0 = use canonical bounds).
  double widen_lo = 0.0;
  double widen_hi = 0.0;
};

inline VarBound canonical_ut_bound(Formulation tag, double wh_bound) {
  if (tag == Formulation::SocOver) return {0.0, wh_bound * wh_bound};
  const double b = 2.0 * std::log(wh_bound);
  return {-b, b};
}

struct BuiltProgram {
  ConicProgram program;
  FormulationLayout layout;
  Eigen::MatrixXd V;  // matrix actually encoded (after any eps shift)
};

// Encodes the feasible set of the chosen formulation plus the linearized
// objective: F*N inequality rows as nonnegative-ray slacks and one 3-dim
// cone per surviving (f,k,n) triple.
inline BuiltProgram build_program(const Eigen::MatrixXd& Vin, int K,
                                  Formulation tag,
                                  const SparsityPattern& pattern_in,
                                  const Eigen::MatrixXd& gU,
                                  const Eigen::MatrixXd& gT,
                                  const BuildOptions& opts = {}) {
  const int F = static_cast<int>(Vin.rows());
  const int N = static_cast<int>(Vin.cols());
  if (K < 1) throw validation_error("factorization rank K must be positive");
  if (Vin.minCoeff() < 0.0) throw validation_error("V must be nonnegative");

  Eigen::MatrixXd V = Vin;
  if (tag == Formulation::ExpUnder && V.minCoeff() == 0.0) {
    if (!opts.eps_shift)
      throw validation_error(
          "ExpUnder cannot encode zero entries of V: the rows sum_k t <= 0 "
          "with t > 0 are infeasible; enable the eps shift");
    V.array() += opts.eps_rel * V.maxCoeff();
  }

  SparsityPattern pattern = pattern_in;
  if (pattern.F() == 0) pattern = SparsityPattern(F, K, N);
  FormulationLayout layout(F, K, N, tag, pattern);

  ConicProgram p;
  p.nvars = layout.nvars();
  p.c = layout.pack_gradient(gU, gT);

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> hs;
  std::vector<Cone> cones;

  // linear rows: one per (f,n) with surviving terms. A row whose terms were
  // all dropped by the pattern is trivially satisfied when V_fn = 0 and
  // must not be emitted (a constant-zero slack has no strict interior).
  int row = 0;
  for (int f = 0; f < F; ++f)
    for (int n = 0; n < N; ++n) {
      int surviving = 0;
      for (int k = 0; k < K; ++k)
        if (layout.t_var[(static_cast<size_t>(f) * K + k) * N + n] >= 0)
          ++surviving;
      if (surviving == 0) {
        if (tag == Formulation::SocOver && V(f, n) > 0.0)
          throw infeasible_pattern_error(
              "pattern drops every term of a row with V > 0 at (" +
              std::to_string(f) + "," + std::to_string(n) + ")");
        continue;
      }
      for (int k = 0; k < K; ++k) {
        const int tv = layout.t_var[(static_cast<size_t>(f) * K + k) * N + n];
        if (tv < 0) continue;
        // SocOver: slack = sum_k t - V_fn; ExpUnder: slack = V_fn - sum_k t
        trips.emplace_back(row, tv, tag == Formulation::SocOver ? -1.0 : 1.0);
      }
      hs.push_back(tag == Formulation::SocOver ? -V(f, n) : V(f, n));
      cones.push_back(ray_cone(row));
      ++row;
    }
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) {
        const int tv = layout.t_var[(static_cast<size_t>(f) * K + k) * N + n];
        if (tv < 0) continue;
        const int uv = layout.u_var[f * K + k];
        const int vv = layout.v_var[k * N + n];
        if (tag == Formulation::SocOver) {
          // (U_fk, T_kn / 2, t_fkn) in Qr3
          trips.emplace_back(row, uv, -1.0);
          hs.push_back(0.0);
          trips.emplace_back(row + 1, vv, -0.5);
          hs.push_back(0.0);
          trips.emplace_back(row + 2, tv, -1.0);
          hs.push_back(0.0);
          cones.push_back(rsoc_cone(row));
        } else {
          // (t_fkn, 1, U_fk + T_kn) in Kexp
          trips.emplace_back(row, tv, -1.0);
          hs.push_back(0.0);
          hs.push_back(1.0);
          trips.emplace_back(row + 2, uv, -1.0);
          trips.emplace_back(row + 2, vv, -1.0);
          hs.push_back(0.0);
          cones.push_back(exp_cone(row));
        }
        row += 3;
      }

  p.G.resize(row, p.nvars);
  p.G.setFromTriplets(trips.begin(), trips.end());
  p.h = Eigen::Map<Eigen::VectorXd>(hs.data(), row);
  p.cones = std::move(cones);

  VarBound ut = canonical_ut_bound(tag, opts.wh_bound);
  if (opts.widen_lo != 0.0 && tag == Formulation::ExpUnder)
    ut.lower = std::min(ut.lower, opts.widen_lo);  // SocOver keeps U,T >= 0
  if (opts.widen_hi != 0.0) ut.upper = std::max(ut.upper, opts.widen_hi);
  p.variable_bounds.assign(p.nvars, VarBound{});
  for (int i = 0; i < layout.n_u + layout.n_v; ++i) p.variable_bounds[i] = ut;
  if (tag == Formulation::SocOver) {
    const VarBound tb{-kInf, V.maxCoeff() + 1.0};
    for (int i = layout.n_u + layout.n_v; i < p.nvars; ++i)
      p.variable_bounds[i] = tb;
  }
  return {std::move(p), std::move(layout), std::move(V)};
}

// Objective Phi (minimization convention for both formulations).
inline double phi(const LatentPoint& Z, const SparsityPattern& pattern_in = {}) {
  const int F = Z.F(), K = Z.K(), N = Z.N();
  SparsityPattern pattern = pattern_in;
  if (pattern.F() == 0) pattern = SparsityPattern(F, K, N);
  if (Z.tag == Formulation::SocOver) {
    double sum = 0.0;
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k) {
        if (pattern.U_zeroed(f, k)) continue;
        const double su = std::sqrt(Z.U(f, k));
        double st = 0.0;
        for (int n = 0; n < N; ++n)
          if (!pattern.T_zeroed(k, n)) st += std::sqrt(Z.T(k, n));
        sum += su * st;
      }
    return sum;
  }
  // stable -log sum exp
  double mx = -kInf;
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) {
      if (pattern.U_zeroed(f, k)) continue;
      for (int n = 0; n < N; ++n)
        if (!pattern.T_zeroed(k, n))
          mx = std::max(mx, Z.U(f, k) + Z.T(k, n));
    }
  if (!std::isfinite(mx)) return 0.0;  // everything zeroed
  double s = 0.0;
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) {
      if (pattern.U_zeroed(f, k)) continue;
      for (int n = 0; n < N; ++n)
        if (!pattern.T_zeroed(k, n))
          s += std::exp(Z.U(f, k) + Z.T(k, n) - mx);
    }
  return -(mx + std::log(s));
}

// Gradient of Phi over the surviving (U, T) entries; pattern entries get 0.
inline void grad_phi(const LatentPoint& Z, const SparsityPattern& pattern_in,
                     Eigen::MatrixXd& gU, Eigen::MatrixXd& gT) {
  const int F = Z.F(), K = Z.K(), N = Z.N();
  SparsityPattern pattern = pattern_in;
  if (pattern.F() == 0) pattern = SparsityPattern(F, K, N);
  gU = Eigen::MatrixXd::Zero(F, K);
  gT = Eigen::MatrixXd::Zero(K, N);
  if (Z.tag == Formulation::SocOver) {
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k) {
        if (pattern.U_zeroed(f, k)) continue;
        if (Z.U(f, k) <= 0.0)
          throw validation_error(
              "sqrt gradient singular at a zero U entry outside the pattern; "
              "trigger SPI before evaluating");
      }
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) {
        if (pattern.T_zeroed(k, n)) continue;
        if (Z.T(k, n) <= 0.0)
          throw validation_error(
              "sqrt gradient singular at a zero T entry outside the pattern; "
              "trigger SPI before evaluating");
      }
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k) {
        if (pattern.U_zeroed(f, k)) continue;
        double st = 0.0;
        for (int n = 0; n < N; ++n)
          if (!pattern.T_zeroed(k, n)) st += std::sqrt(Z.T(k, n));
        gU(f, k) = st / (2.0 * std::sqrt(Z.U(f, k)));
      }
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) {
        if (pattern.T_zeroed(k, n)) continue;
        double su = 0.0;
        for (int f = 0; f < F; ++f)
          if (!pattern.U_zeroed(f, k)) su += std::sqrt(Z.U(f, k));
        gT(k, n) = su / (2.0 * std::sqrt(Z.T(k, n)));
      }
    return;
  }
  // ExpUnder: dPhi/dU_fk = -(sum_n e^{U+T}) / S, stabilized by max shift
  double mx = -kInf;
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) {
      if (pattern.U_zeroed(f, k)) continue;
      for (int n = 0; n < N; ++n)
        if (!pattern.T_zeroed(k, n))
          mx = std::max(mx, Z.U(f, k) + Z.T(k, n));
    }
  double S = 0.0;
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) {
      if (pattern.U_zeroed(f, k)) continue;
      for (int n = 0; n < N; ++n)
        if (!pattern.T_zeroed(k, n)) {
          const double e = std::exp(Z.U(f, k) + Z.T(k, n) - mx);
          S += e;
          gU(f, k) -= e;
          gT(k, n) -= e;
        }
    }
  gU /= S;
  gT /= S;
}

// Certified lower bound on Phi over the feasible set; used by the rate
// check in place of the unknowable Phi*.
inline double phi_lower_bound(const Eigen::MatrixXd& V, Formulation tag) {
  const double total = V.sum();
  return tag == Formulation::SocOver ? total : -std::log(total);
}

// Elementwise change of variables back to factor space.
inline FactorPair to_factors(const LatentPoint& Z,
                             const SparsityPattern& pattern_in = {}) {
  const int F = Z.F(), K = Z.K(), N = Z.N();
  SparsityPattern pattern = pattern_in;
  if (pattern.F() == 0) pattern = SparsityPattern(F, K, N);
  Eigen::MatrixXd W(F, K), H(K, N);
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k)
      W(f, k) = pattern.U_zeroed(f, k)
                    ? 0.0
                    : (Z.tag == Formulation::SocOver ? std::sqrt(Z.U(f, k))
                                                     : std::exp(Z.U(f, k)));
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n)
      H(k, n) = pattern.T_zeroed(k, n)
                    ? 0.0
                    : (Z.tag == Formulation::SocOver ? std::sqrt(Z.T(k, n))
                                                     : std::exp(Z.T(k, n)));
  return FactorPair(std::move(W), std::move(H));
}

// Inverse change of variables with interiorization: the factors are scaled
// so WH sits strictly on the feasible side of V, and t gets a margin off
// the cone boundaries (the interior-point solver needs strict interiority).
inline LatentPoint from_factors(const Eigen::MatrixXd& V,
                                const Eigen::MatrixXd& Win,
                                const Eigen::MatrixXd& Hin, Formulation tag,
                                double margin = 1e-6) {
  const int F = static_cast<int>(Win.rows());
  const int K = static_cast<int>(Win.cols());
  const int N = static_cast<int>(Hin.cols());
  if (Hin.rows() != K || V.rows() != F || V.cols() != N)
    throw validation_error("from_factors: dimension mismatch");
  if (Win.minCoeff() <= 0.0 || Hin.minCoeff() <= 0.0)
    throw validation_error(
        "from_factors requires strictly positive factors (the inverse maps "
        "are undefined at zero)");

  // Minimal rescale: factors already strictly on the feasible side of V
  // pass through unchanged; otherwise W and H are scaled just enough to
  // restore a relative margin.
  const Eigen::MatrixXd P = Win * Hin;
  double scale2 = 1.0;
  if (tag == Formulation::SocOver) {
    double rho = 0.0;
    for (int f = 0; f < F; ++f)
      for (int n = 0; n < N; ++n) rho = std::max(rho, V(f, n) / P(f, n));
    if (rho <= 0.0) rho = 1.0;
    scale2 = std::max(rho, 1.0 / (1.0 + margin)) * (1.0 + margin);
  } else {
    if (V.minCoeff() <= 0.0)
      throw validation_error("ExpUnder needs strictly positive V entries");
    double sigma = kInf;
    for (int f = 0; f < F; ++f)
      for (int n = 0; n < N; ++n) sigma = std::min(sigma, V(f, n) / P(f, n));
    scale2 = std::min(sigma, 1.0 + margin) / (1.0 + margin);
  }
  const double c = std::sqrt(scale2);

  LatentPoint Z;
  Z.tag = tag;
  Z.U.resize(F, K);
  Z.T.resize(K, N);
  Z.t.resize(static_cast<size_t>(F) * K * N);
  if (tag == Formulation::SocOver) {
    const double tcap = (V.maxCoeff() + 1.0) * (1.0 - margin);
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k) Z.U(f, k) = scale2 * Win(f, k) * Win(f, k);
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) Z.T(k, n) = scale2 * Hin(k, n) * Hin(k, n);
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
          Z.t_at(f, k, n) = std::min(
              scale2 * Win(f, k) * Hin(k, n) / (1.0 + 0.5 * margin), tcap);
  } else {
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k) Z.U(f, k) = std::log(c * Win(f, k));
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) Z.T(k, n) = std::log(c * Hin(k, n));
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
          Z.t_at(f, k, n) =
              scale2 * Win(f, k) * Hin(k, n) * (1.0 + 0.5 * margin);
  }
  return Z;
}

enum class SpiUnits { FactorSpace, LatentSpace };

struct SpiOutcome {
  SparsityPattern pattern;
  LatentPoint Z;  // input point with the newly zeroed entries projected out
  int newly_zeroed_U = 0;
  int newly_zeroed_T = 0;
  bool rank_collapse_warning = false;
};

// Sparsity Pattern Integration: factor entries below the threshold th are
// pinned to zero, their gradient terms leave the linearizations and their t
// slices are dropped from subsequent programs. `wh_scale` converts the
// internally normalized factors back to input units before comparing.
inline SpiOutcome spi_apply(const LatentPoint& Z,
                            const SparsityPattern& pattern_in, double th,
                            SpiUnits units = SpiUnits::FactorSpace,
                            double wh_scale = 1.0) {
  if (!(th > 0.0)) throw validation_error("SPI threshold must be positive");
  const int F = Z.F(), K = Z.K(), N = Z.N();
  SpiOutcome out;
  out.pattern = pattern_in.F() == 0 ? SparsityPattern(F, K, N) : pattern_in;
  out.Z = Z;

  auto u_small = [&](double u) {
    if (Z.tag == Formulation::SocOver && units == SpiUnits::LatentSpace)
      return u * wh_scale * wh_scale < th;
    const double w =
        Z.tag == Formulation::SocOver ? std::sqrt(std::max(u, 0.0)) : std::exp(u);
    return w * wh_scale < th;
  };

  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k)
      if (!out.pattern.U_zeroed(f, k) && u_small(Z.U(f, k))) {
        out.pattern.zero_U(f, k);
        ++out.newly_zeroed_U;
      }
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n)
      if (!out.pattern.T_zeroed(k, n) && u_small(Z.T(k, n))) {
        out.pattern.zero_T(k, n);
        ++out.newly_zeroed_T;
      }

  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) {
      if (out.pattern.U_zeroed(f, k)) out.Z.U(f, k) = 0.0;
      for (int n = 0; n < N; ++n)
        if (out.pattern.t_dropped(f, k, n)) out.Z.t_at(f, k, n) = 0.0;
    }
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n)
      if (out.pattern.T_zeroed(k, n)) out.Z.T(k, n) = 0.0;

  out.rank_collapse_warning = out.pattern.rank_collapsed();
  return out;
}

// Feasibility of a latent point w.r.t. its formulation invariants.
inline bool latent_feasible(const LatentPoint& Z, const Eigen::MatrixXd& V,
                            const SparsityPattern& pattern_in, double tol) {
  const int F = Z.F(), K = Z.K(), N = Z.N();
  SparsityPattern pattern = pattern_in;
  if (pattern.F() == 0) pattern = SparsityPattern(F, K, N);
  for (int f = 0; f < F; ++f)
    for (int n = 0; n < N; ++n) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k)
        if (!pattern.t_dropped(f, k, n)) sum += Z.t_at(f, k, n);
      if (Z.tag == Formulation::SocOver ? sum < V(f, n) - tol
                                        : sum > V(f, n) + tol)
        return false;
    }
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) {
        if (pattern.t_dropped(f, k, n)) continue;
        if (Z.tag == Formulation::SocOver) {
          const double x[3] = {Z.U(f, k), 0.5 * Z.T(k, n), Z.t_at(f, k, n)};
          if (!membership(rsoc_cone(0), x, tol)) return false;
        } else {
          const double x[3] = {Z.t_at(f, k, n), 1.0, Z.U(f, k) + Z.T(k, n)};
          if (!membership(exp_cone(0), x, tol)) return false;
        }
      }
  return true;
}

}  // namespace conicnmf
