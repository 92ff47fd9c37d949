// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "conicnmf/conic_program.hpp"

namespace conicnmf {

// Primal path-following barrier method. All cones here are 1- or
// 3-dimensional with closed-form barrier derivatives, subproblem sizes are
// modest, and the outer Frank-Wolfe loop tolerates slightly inexact
// subproblem solves, which is why a primal-only method is enough.
struct SolverConfig {
  double mu0 = 1.0;    // initial barrier weight
  double theta = 0.2;  // barrier reduction factor per outer step
  double newton_tol = 1e-10;  // Newton decrement threshold (final centering)
  int max_outer = 60;
  int max_newton_per_outer = 50;
  double line_search_beta = 0.5;
  double fraction_to_boundary = 0.99;
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  // With a warm start, fit the initial barrier weight to the point
  // (least-squares match of c/mu against the barrier gradient) instead of
  // starting from mu0. This is the main speed lever across the
  // Frank-Wolfe iterations, where consecutive objectives barely differ.
  bool adaptive_mu0 = true;
  int verbosity = 0;
  std::ostream* log = nullptr;
};

enum class SolveStatus { Optimal, Infeasible, IterLimit, NumericFailure };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "Optimal";
    case SolveStatus::Infeasible:
      return "Infeasible";
    case SolveStatus::IterLimit:
      return "IterLimit";
    case SolveStatus::NumericFailure:
      return "NumericFailure";
  }
  return "?";
}

struct ConicSolution {
  Eigen::VectorXd z;
  SolveStatus status = SolveStatus::NumericFailure;
  double objective = std::numeric_limits<double>::quiet_NaN();
  // nu * mu at termination; bounds the duality gap in objective units.
  double complementarity = std::numeric_limits<double>::quiet_NaN();
  // Worst cone-membership violation of the returned slacks (0 when interior).
  double feasibility = std::numeric_limits<double>::quiet_NaN();
  int newton_steps = 0;
  int outer_steps = 0;
  std::string message;
  // Mid-path iterate (recorded near mu ~ 1e-4). Path endpoints sit pinned
  // against the active constraints and make poor warm starts once the
  // objective rotates; this point is the recommended warm start for the
  // next solve over the same feasible set.
  Eigen::VectorXd z_mid;
  // Barrier weights per outer stage; strictly decreasing within each
  // descent phase (a cold restart after a failed warm start begins a new
  // phase).
  std::vector<double> mu_trace;
  int cold_restarts = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

namespace detail {

inline double bound_barrier_value(const VarBound& b, double x) {
  double v = 0.0;
  if (std::isfinite(b.lower)) {
    if (x <= b.lower) return kInf;
    v -= std::log(x - b.lower);
  }
  if (std::isfinite(b.upper)) {
    if (x >= b.upper) return kInf;
    v -= std::log(b.upper - x);
  }
  return v;
}

inline void bound_barrier_derivs(const VarBound& b, double x, double& g,
                                 double& h) {
  g = 0.0;
  h = 0.0;
  if (std::isfinite(b.lower)) {
    const double d = x - b.lower;
    g -= 1.0 / d;
    h += 1.0 / (d * d);
  }
  if (std::isfinite(b.upper)) {
    const double d = b.upper - x;
    g += 1.0 / d;
    h += 1.0 / (d * d);
  }
}

}  // namespace detail

// Reusable solver bound to one program. The feasible set (and hence the
// Hessian sparsity pattern and its symbolic factorization) is fixed at
// construction; the objective may be swapped between solves, which is how
// the Frank-Wolfe driver reuses one instance across iterations.
class BarrierSolver {
 public:
  using StopFn = std::function<bool(const Eigen::VectorXd&)>;

  explicit BarrierSolver(ConicProgram program) : p_(std::move(program)) {
    auto issues = validate(p_);
    if (!issues.empty()) throw validation_error("invalid program: " + issues[0]);
    nu_ = 0.0;
    for (const auto& cone : p_.cones) nu_ += cone.barrier_parameter();
    if (!p_.variable_bounds.empty())
      for (const auto& b : p_.variable_bounds)
        nu_ += (std::isfinite(b.lower) ? 1.0 : 0.0) +
               (std::isfinite(b.upper) ? 1.0 : 0.0);
    if (nu_ <= 0.0)
      throw validation_error("program has no barrier terms; nothing bounds it");
    build_plan();
  }

  const ConicProgram& program() const { return p_; }
  double barrier_complexity() const { return nu_; }

  void set_objective(const Eigen::VectorXd& c) {
    if (c.size() != p_.nvars)
      throw validation_error("objective length mismatch");
    p_.c = c;
  }

  Eigen::VectorXd slacks(const Eigen::VectorXd& z) const {
    return p_.h - p_.G * z;
  }

  // Strict interiority = finite barrier value.
  bool is_interior(const Eigen::VectorXd& z) const {
    if (z.size() != p_.nvars || !z.allFinite()) return false;
    return std::isfinite(total_barrier(z, slacks(z)));
  }

  ConicSolution solve(const SolverConfig& cfg,
                      const std::optional<Eigen::VectorXd>& warm = {}) {
    return solve_impl(cfg, warm, nullptr);
  }

  ConicSolution solve_with_stop(const SolverConfig& cfg,
                                const std::optional<Eigen::VectorXd>& warm,
                                const StopFn& stop) {
    return solve_impl(cfg, warm, stop);
  }

 private:
  struct Block {
    Cone cone;
    int dim = 0;
    int m = 0;                 // number of variables touched by the block
    std::vector<int> vars;     // local -> global variable index
    std::vector<double> Gl;    // dim x m, row-major, entries of G
    std::vector<int> slots;    // m x m value positions in H
  };

  ConicProgram p_;
  double nu_ = 0.0;
  std::vector<Block> blocks_;
  std::vector<int> diag_slots_;
  Eigen::SparseMatrix<double> H_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;

  void build_plan() {
    const int n = p_.nvars;
    blocks_.reserve(p_.cones.size());
    std::vector<Eigen::Triplet<double>> pat;
    for (const auto& cone : p_.cones) {
      Block b;
      b.cone = cone;
      b.dim = cone.dim();
      // collect the union of variables across the block's rows
      std::vector<std::unordered_map<int, double>> rows(b.dim);
      for (int d = 0; d < b.dim; ++d)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 p_.G, cone.row + d);
             it; ++it)
          rows[d][static_cast<int>(it.col())] = it.value();
      for (const auto& row : rows)
        for (const auto& [col, val] : row) {
          (void)val;
          if (std::find(b.vars.begin(), b.vars.end(), col) == b.vars.end())
            b.vars.push_back(col);
        }
      std::sort(b.vars.begin(), b.vars.end());
      b.m = static_cast<int>(b.vars.size());
      b.Gl.assign(static_cast<size_t>(b.dim) * b.m, 0.0);
      for (int d = 0; d < b.dim; ++d)
        for (int a = 0; a < b.m; ++a) {
          auto it = rows[d].find(b.vars[a]);
          if (it != rows[d].end()) b.Gl[d * b.m + a] = it->second;
        }
      for (int a = 0; a < b.m; ++a)
        for (int c2 = 0; c2 < b.m; ++c2)
          pat.emplace_back(b.vars[a], b.vars[c2], 1.0);
      blocks_.push_back(std::move(b));
    }
    for (int i = 0; i < n; ++i) pat.emplace_back(i, i, 1.0);

    H_.resize(n, n);
    H_.setFromTriplets(pat.begin(), pat.end());
    H_.makeCompressed();

    // slot lookup: (row, col) -> position in the value array
    std::unordered_map<long long, int> slot_of;
    slot_of.reserve(static_cast<size_t>(H_.nonZeros()) * 2);
    for (int j = 0; j < H_.outerSize(); ++j)
      for (int k = H_.outerIndexPtr()[j]; k < H_.outerIndexPtr()[j + 1]; ++k)
        slot_of[static_cast<long long>(H_.innerIndexPtr()[k]) * n + j] = k;

    for (auto& b : blocks_) {
      b.slots.resize(static_cast<size_t>(b.m) * b.m);
      for (int a = 0; a < b.m; ++a)
        for (int c2 = 0; c2 < b.m; ++c2)
          b.slots[a * b.m + c2] =
              slot_of.at(static_cast<long long>(b.vars[a]) * n + b.vars[c2]);
    }
    diag_slots_.resize(n);
    for (int i = 0; i < n; ++i)
      diag_slots_[i] = slot_of.at(static_cast<long long>(i) * n + i);

    ldlt_.analyzePattern(H_);
  }

  double total_barrier(const Eigen::VectorXd& z,
                       const Eigen::VectorXd& s) const {
    double v = 0.0;
    for (const auto& b : blocks_) {
      const double bv = barrier_value(b.cone, s.data() + b.cone.row);
      if (!std::isfinite(bv)) return kInf;
      v += bv;
    }
    if (!p_.variable_bounds.empty())
      for (int i = 0; i < p_.nvars; ++i) {
        const double bv = detail::bound_barrier_value(p_.variable_bounds[i], z(i));
        if (!std::isfinite(bv)) return kInf;
        v += bv;
      }
    return v;
  }

  // Assembles grad of  (1/mu) c.z + B(z)  and the barrier Hessian values.
  void assemble(const Eigen::VectorXd& z, const Eigen::VectorXd& s, double inv_mu,
                Eigen::VectorXd& grad) {
    grad = inv_mu * p_.c;
    double* hv = H_.valuePtr();
    std::fill(hv, hv + H_.nonZeros(), 0.0);

    double gl[3], hl[9], w[3];
    for (const auto& b : blocks_) {
      barrier_derivs(b.cone, s.data() + b.cone.row, gl, hl);
      for (int a = 0; a < b.m; ++a) {
        double acc = 0.0;
        for (int p = 0; p < b.dim; ++p) acc += b.Gl[p * b.m + a] * gl[p];
        grad(b.vars[a]) -= acc;  // ds/dz = -G
        for (int q = 0; q < b.dim; ++q) {
          double t = 0.0;
          for (int p = 0; p < b.dim; ++p)
            t += b.Gl[p * b.m + a] * hl[p * b.dim + q];
          w[q] = t;
        }
        for (int c2 = 0; c2 < b.m; ++c2) {
          double t = 0.0;
          for (int q = 0; q < b.dim; ++q) t += w[q] * b.Gl[q * b.m + c2];
          hv[b.slots[a * b.m + c2]] += t;
        }
      }
    }
    if (!p_.variable_bounds.empty())
      for (int i = 0; i < p_.nvars; ++i) {
        double g, h2;
        detail::bound_barrier_derivs(p_.variable_bounds[i], z(i), g, h2);
        grad(i) += g;
        hv[diag_slots_[i]] += h2;
      }
    // relative diagonal damping: caps the amplification of near-null
    // directions (the exponential form has an exact U/T shift degeneracy
    // restrained only by the box terms)
    for (int i = 0; i < p_.nvars; ++i) hv[diag_slots_[i]] *= 1.0 + 1e-12;
  }

  double max_feasible_step(const Eigen::VectorXd& z, const Eigen::VectorXd& s,
                           const Eigen::VectorXd& dz,
                           const Eigen::VectorXd& ds) const {
    double step = kInf;
    for (const auto& b : blocks_)
      step = std::min(step, cone_max_step(b.cone, s.data() + b.cone.row,
                                          ds.data() + b.cone.row));
    if (!p_.variable_bounds.empty())
      for (int i = 0; i < p_.nvars; ++i) {
        const auto& vb = p_.variable_bounds[i];
        if (std::isfinite(vb.lower) && dz(i) < 0.0)
          step = std::min(step, (vb.lower - z(i)) / dz(i));
        if (std::isfinite(vb.upper) && dz(i) > 0.0)
          step = std::min(step, (vb.upper - z(i)) / dz(i));
      }
    return step;
  }

  struct StageResult {
    bool centered = false;
    bool stopped = false;
    bool numfail = false;
    double lambda2 = kInf;
    std::string note;
  };

  // Factorizes the assembled Hessian, escalating a diagonal regularization
  // scaled to the matrix (1e-12 then 1e-8 relative) on breakdown.
  bool factorize_hessian(int attempts = 3) {
    double max_diag = 0.0;
    for (int i = 0; i < p_.nvars; ++i)
      max_diag = std::max(max_diag, H_.valuePtr()[diag_slots_[i]]);
    if (!(max_diag > 0.0)) max_diag = 1.0;
    static constexpr double kRegs[] = {0.0, 1e-12, 1e-8};
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        const double add = (kRegs[attempt] - kRegs[attempt - 1]) * max_diag;
        for (int i = 0; i < p_.nvars; ++i)
          H_.valuePtr()[diag_slots_[i]] += add;
      }
      ldlt_.factorize(H_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Factorization plus Newton direction; a negative computed decrement is
  // the roundoff symptom of indefiniteness, so it also escalates the
  // regularization.
  double factor_and_direction(const Eigen::VectorXd& grad,
                              Eigen::VectorXd& dz) {
    double max_diag = 0.0;
    for (int i = 0; i < p_.nvars; ++i)
      max_diag = std::max(max_diag, H_.valuePtr()[diag_slots_[i]]);
    if (!(max_diag > 0.0)) max_diag = 1.0;
    static constexpr double kRegs[] = {0.0, 1e-12, 1e-8, 1e-4};
    for (int attempt = 0; attempt < 4; ++attempt) {
      if (attempt > 0) {
        const double add = (kRegs[attempt] - kRegs[attempt - 1]) * max_diag;
        for (int i = 0; i < p_.nvars; ++i)
          H_.valuePtr()[diag_slots_[i]] += add;
      }
      ldlt_.factorize(H_);
      if (ldlt_.info() != Eigen::Success) continue;
      const double lambda2 = newton_direction(grad, dz);
      if (lambda2 >= 0.0) return lambda2;
    }
    return -1.0;
  }

  // Newton direction for the given gradient, with iterative refinement;
  // the deep-path Hessians are badly conditioned and the corrected
  // direction saves steps. Returns the Newton decrement squared, or -1 on
  // breakdown.
  double newton_direction(const Eigen::VectorXd& grad, Eigen::VectorXd& dz) {
    dz = ldlt_.solve(-grad);
    if (!dz.allFinite()) return -1.0;
    double lambda2 = -1.0;
    for (int round = 0; round < 3; ++round) {
      const Eigen::VectorXd resid = -grad - H_ * dz;
      const Eigen::VectorXd corr = ldlt_.solve(resid);
      if (!corr.allFinite()) break;
      dz += corr;
      lambda2 = -grad.dot(dz);
      if (std::isfinite(lambda2) && lambda2 >= 0.0) break;
    }
    return std::isfinite(lambda2) ? lambda2 : -1.0;
  }

  StageResult center(double mu, double tol, const SolverConfig& cfg,
                     Eigen::VectorXd& z, Eigen::VectorXd& s, const StopFn& stop,
                     int& newton_total) {
    StageResult res;
    const double inv_mu = 1.0 / mu;
    Eigen::VectorXd grad(p_.nvars), dz(p_.nvars), ds(p_.nrows());
    int stall_retries = 0;
    for (int it = 0; it < cfg.max_newton_per_outer; ++it) {
      assemble(z, s, inv_mu, grad);
      if (stall_retries > 0) {
        // a stalled line search means the direction was dominated by a
        // near-null subspace; damp it away
        const double bump = stall_retries == 1 ? 1e-8 : 1e-4;
        for (int i = 0; i < p_.nvars; ++i)
          H_.valuePtr()[diag_slots_[i]] *= 1.0 + bump;
      }
      const double lambda2 = factor_and_direction(grad, dz);
      if (lambda2 < 0.0) {
        res.numfail = true;
        res.note = "Newton system could not be factored";
        return res;
      }
      res.lambda2 = lambda2;
      if (0.5 * lambda2 <= tol) {
        res.centered = true;
        return res;
      }

      ds = -(p_.G * dz);
      double alpha = std::min(
          1.0, cfg.fraction_to_boundary * max_feasible_step(z, s, dz, ds));
      // the damped Newton step 1/(1+lambda) decreases any self-concordant
      // barrier; once backtracking reaches it, accept without an Armijo
      // test (whose decreases drown in barrier roundoff near the path floor)
      const double damped = 1.0 / (1.0 + std::sqrt(std::max(lambda2, 0.0)));
      const double f0 = inv_mu * p_.c.dot(z) + total_barrier(z, s);
      const double slope = grad.dot(dz);  // = -lambda2
      const double noise = 1e-10 * (1.0 + std::abs(f0));
      bool accepted = false;
      while (alpha > 1e-18) {
        const Eigen::VectorXd z1 = z + alpha * dz;
        const Eigen::VectorXd s1 = s + alpha * ds;
        const double f1 = inv_mu * p_.c.dot(z1) + total_barrier(z1, s1);
        if (std::isfinite(f1) &&
            (f1 <= f0 + 0.25 * alpha * slope + noise || alpha <= damped)) {
          z = z1;
          s = s1;
          accepted = true;
          break;
        }
        alpha *= cfg.line_search_beta;
      }
      ++newton_total;
      if (!accepted) {
        if (++stall_retries <= 2) continue;
        if (cfg.verbosity >= 2 && cfg.log)
          (*cfg.log) << "    stall: lambda2 " << lambda2 << " f0 " << f0
                     << " maxstep " << max_feasible_step(z, s, dz, ds)
                     << " |dz| " << dz.norm() << "\n";
        res.note = "line search stalled";
        return res;
      }
      stall_retries = 0;
      if (cfg.verbosity >= 3 && cfg.log)
        (*cfg.log) << "    newton " << it << " lambda2 " << lambda2
                   << " alpha " << alpha << "\n";
      if (stop && stop(z)) {
        res.stopped = true;
        return res;
      }
    }
    res.note = "newton budget exhausted";
    return res;
  }

  ConicSolution solve_impl(const SolverConfig& cfg,
                           const std::optional<Eigen::VectorXd>& warm,
                           const StopFn& stop);
};

// Finds a strictly interior point by minimizing an auxiliary infeasibility
// variable, or reports that none exists.
struct Phase1Result {
  enum class Status { Interior, Infeasible, Failed };
  Status status = Status::Failed;
  Eigen::VectorXd z;
  double alpha = kInf;  // value of the infeasibility variable at exit
  std::string message;

  bool interior() const { return status == Status::Interior; }
};

inline Phase1Result phase1(const ConicProgram& p, const SolverConfig& cfg,
                           const std::optional<Eigen::VectorXd>& hint = {}) {
  Phase1Result out;
  const int n = p.nvars;

  // Augmented program over (z, a): minimize a with every cone block shifted
  // along an interior direction; Box slack blocks split into two shifted rays.
  ConicProgram q;
  q.nvars = n + 1;
  q.c = Eigen::VectorXd::Zero(n + 1);
  q.c(n) = 1.0;
  q.variable_bounds = p.variable_bounds;
  if (q.variable_bounds.empty()) q.variable_bounds.resize(n);
  // The auxiliary objective ignores z, so any unbounded variable is a
  // recession direction along which the barrier diverges to -inf. Clamp
  // every free side with a big-M box; the point returned stays interior
  // for the original program.
  constexpr double kBigM = 1e8;
  for (auto& vb : q.variable_bounds) {
    const bool lo = std::isfinite(vb.lower), hi = std::isfinite(vb.upper);
    if (!lo && !hi) {
      vb.lower = -kBigM;
      vb.upper = kBigM;
    } else if (!lo) {
      vb.lower = vb.upper - kBigM;
    } else if (!hi) {
      vb.upper = vb.lower + kBigM;
    }
  }
  q.variable_bounds.push_back(VarBound{-1.0, kBigM});

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> hs;
  int row_out = 0;
  auto copy_row = [&](int src, int dst, double scale) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(p.G,
                                                                        src);
         it; ++it)
      trips.emplace_back(dst, static_cast<int>(it.col()), scale * it.value());
  };
  for (const auto& cone : p.cones) {
    switch (cone.kind) {
      case ConeKind::ExponentialCone3: {
        static constexpr double dshift[3] = {2.0, 1.0, 0.0};
        for (int d = 0; d < 3; ++d) {
          copy_row(cone.row + d, row_out, 1.0);
          if (dshift[d] != 0.0) trips.emplace_back(row_out, n, -dshift[d]);
          hs.push_back(p.h(cone.row + d));
          ++row_out;
        }
        q.cones.push_back(exp_cone(row_out - 3));
        break;
      }
      case ConeKind::RotatedSecondOrderCone3: {
        static constexpr double dshift[3] = {1.0, 1.0, 0.0};
        for (int d = 0; d < 3; ++d) {
          copy_row(cone.row + d, row_out, 1.0);
          if (dshift[d] != 0.0) trips.emplace_back(row_out, n, -dshift[d]);
          hs.push_back(p.h(cone.row + d));
          ++row_out;
        }
        q.cones.push_back(rsoc_cone(row_out - 3));
        break;
      }
      case ConeKind::NonnegativeRay:
        copy_row(cone.row, row_out, 1.0);
        trips.emplace_back(row_out, n, -1.0);
        hs.push_back(p.h(cone.row));
        q.cones.push_back(ray_cone(row_out));
        ++row_out;
        break;
      case ConeKind::Box:
        if (std::isfinite(cone.lower)) {
          copy_row(cone.row, row_out, 1.0);
          trips.emplace_back(row_out, n, -1.0);
          hs.push_back(p.h(cone.row) - cone.lower);
          q.cones.push_back(ray_cone(row_out));
          ++row_out;
        }
        if (std::isfinite(cone.upper)) {
          copy_row(cone.row, row_out, -1.0);
          trips.emplace_back(row_out, n, -1.0);
          hs.push_back(cone.upper - p.h(cone.row));
          q.cones.push_back(ray_cone(row_out));
          ++row_out;
        }
        break;
    }
  }
  q.G.resize(row_out, n + 1);
  q.G.setFromTriplets(trips.begin(), trips.end());
  q.h = Eigen::Map<Eigen::VectorXd>(hs.data(), row_out);

  // initial z strictly inside the variable bounds, biased toward the hint
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n + 1);
  for (int i = 0; i < n; ++i) {
    double x = (hint && hint->size() == n) ? (*hint)(i) : 0.0;
    const auto& vb = q.variable_bounds[i];
    const double pad = std::min(1e-3, 0.45 * (vb.upper - vb.lower));
    z0(i) = std::min(std::max(x, vb.lower + pad), vb.upper - pad);
  }

  BarrierSolver solver(q);
  // grow the shift until every block is comfortably interior
  double alpha0 = 1.0;
  for (;; alpha0 *= 2.0) {
    if (alpha0 > 1e14) {
      out.status = Phase1Result::Status::Failed;
      out.message = "could not construct an interior starting point";
      return out;
    }
    z0(n) = alpha0;
    Eigen::VectorXd s = q.h - q.G * z0;
    const double margin = 1e-6 * (1.0 + s.cwiseAbs().maxCoeff());
    bool ok = true;
    for (const auto& cone : q.cones)
      if (!cone_interior(cone, s.data() + cone.row, margin)) {
        ok = false;
        break;
      }
    if (ok) break;
  }

  const double exit_margin = 1e-6 * std::max(1.0, alpha0);
  SolverConfig pcfg = cfg;
  pcfg.mu0 = std::max(cfg.mu0, 1.0);
  auto sol = solver.solve_with_stop(
      pcfg, z0, [&](const Eigen::VectorXd& zz) { return zz(n) <= -exit_margin; });

  out.alpha = sol.z.size() == n + 1 ? sol.z(n) : kInf;
  if (sol.status == SolveStatus::Optimal && out.alpha <= -exit_margin) {
    out.status = Phase1Result::Status::Interior;
    out.z = sol.z.head(n);
    return out;
  }
  if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::IterLimit) {
    out.status = Phase1Result::Status::Infeasible;
    out.message = "infeasibility variable bottomed out at " +
                  std::to_string(out.alpha);
    return out;
  }
  out.status = Phase1Result::Status::Failed;
  out.message = sol.message.empty() ? "phase-1 solve failed" : sol.message;
  return out;
}

inline ConicSolution BarrierSolver::solve_impl(
    const SolverConfig& cfg, const std::optional<Eigen::VectorXd>& warm,
    const StopFn& stop) {
  ConicSolution sol;
  Eigen::VectorXd z;
  if (warm && is_interior(*warm)) {
    z = *warm;
  } else {
    auto p1 = phase1(p_, cfg, warm);
    if (p1.status == Phase1Result::Status::Infeasible) {
      sol.status = SolveStatus::Infeasible;
      sol.message = p1.message;
      return sol;
    }
    if (p1.status == Phase1Result::Status::Failed) {
      sol.status = SolveStatus::NumericFailure;
      sol.message = p1.message;
      return sol;
    }
    z = p1.z;
  }
  Eigen::VectorXd s = slacks(z);

  double mu = std::max(cfg.mu0, 1e-16);
  if (warm && cfg.adaptive_mu0) {
    // Fit the barrier weight this point is closest to being centered for:
    // the Newton decrement of c.z/mu + B at z is a/mu^2 + 2b/mu + d with
    // a = c'H^-1 c, b = c'H^-1 gB, d = gB'H^-1 gB, minimized at -a/b.
    // One factorization tells both the best mu and the decrement there, so
    // off-path warm starts are detected and fall back to mu0.
    Eigen::VectorXd gB(p_.nvars);
    assemble(z, s, 0.0, gB);
    if (factorize_hessian()) {
      const Eigen::VectorXd x = ldlt_.solve(p_.c);
      const Eigen::VectorXd y = ldlt_.solve(gB);
      const double a = p_.c.dot(x), b = p_.c.dot(y), d = gB.dot(y);
      // Deepest mu whose decrement stays in the quadratic-convergence
      // region: largest root of a u^2 + 2b u + (d - tau) = 0 over u = 1/mu.
      // When no mu reaches that region the point is off-path everywhere,
      // and the least-bad mu (the quadratic's minimizer) still beats mu0
      // by a wide margin for badly scaled starts.
      constexpr double kTau = 4.0;
      const double disc = b * b - a * (d - kTau);
      double u = 0.0;
      if (a > 0.0 && disc > 0.0)
        u = (-b + std::sqrt(disc)) / a;
      else if (a > 0.0 && b < 0.0)
        u = -b / a;
      if (u > 0.0) {
        const double floor_mu =
            10.0 * cfg.opt_tol * (1.0 + std::abs(p_.c.dot(z))) / nu_;
        mu = std::min(std::max(1.0 / u, floor_mu), std::max(cfg.mu0, 1e-16));
        if (cfg.verbosity >= 2 && cfg.log)
          (*cfg.log) << "  warm start mu " << mu << "\n";
      }
    }
  }
  int newton_total = 0;
  int outer = 0;
  bool cold_restarted = mu >= std::max(cfg.mu0, 1e-16);
  constexpr double kLooseTol = 5e-2;  // mid-path centering tolerance

  while (true) {
    if (outer >= cfg.max_outer) {
      sol.status = SolveStatus::IterLimit;
      sol.message = "outer iteration limit";
      break;
    }
    const double obj = p_.c.dot(z);
    const bool final_stage = nu_ * mu <= cfg.opt_tol * (1.0 + std::abs(obj));
    const double tol = final_stage ? cfg.newton_tol : kLooseTol;
    sol.mu_trace.push_back(mu);
    const int newton_before = newton_total;
    auto st = center(mu, tol, cfg, z, s, stop, newton_total);
    ++outer;
    if (cfg.verbosity >= 2 && cfg.log)
      (*cfg.log) << "  outer " << outer << " mu " << mu << " newton "
                 << (newton_total - newton_before) << " obj " << p_.c.dot(z)
                 << " lambda2 " << st.lambda2 << "\n";
    if (st.stopped) {
      sol.status = SolveStatus::Optimal;
      sol.message = "stopped by callback";
      break;
    }
    if (st.numfail) {
      sol.status = SolveStatus::NumericFailure;
      sol.message = st.note;
      break;
    }
    if (!st.centered) {
      // The deep-path Hessians hit a roundoff floor on the computed
      // decrement; a final stage that stalls inside the quadratic region
      // still certifies a duality gap of order nu*mu.
      if (final_stage && st.lambda2 <= 0.25) {
        sol.status = SolveStatus::Optimal;
        sol.message = "final centering limited by roundoff";
        break;
      }
      // A warm start that proved off-path gets one cold restart; progress
      // made so far is kept.
      if (!cold_restarted) {
        cold_restarted = true;
        ++sol.cold_restarts;
        mu = std::max(cfg.mu0, 1e-16);
        outer = 0;
        s = slacks(z);
        continue;
      }
      // Off-center but still descending: keep walking the path unless this
      // was the accuracy-critical final stage.
      if (final_stage || !(st.lambda2 <= 1.0)) {
        sol.status = SolveStatus::IterLimit;
        sol.message = st.note;
        break;
      }
    }
    if (st.centered && final_stage) {
      sol.status = SolveStatus::Optimal;
      break;
    }
    if (sol.z_mid.size() == 0 && mu <= 1e-4) sol.z_mid = z;
    mu *= cfg.theta;
    s = slacks(z);  // clear accumulated roundoff in the linear updates
  }

  sol.z = z;
  sol.objective = p_.c.dot(z);
  sol.complementarity = nu_ * mu;
  sol.newton_steps = newton_total;
  sol.outer_steps = outer;
  double worst = 0.0;
  s = slacks(z);
  for (const auto& b : blocks_)
    if (!membership(b.cone, s.data() + b.cone.row, cfg.feas_tol))
      worst = std::max(worst, 1.0);  // interior by construction; flag if not
  sol.feasibility = worst;
  return sol;
}

// One-shot convenience wrapper.
inline ConicSolution solve(const ConicProgram& program, const SolverConfig& cfg,
                           const std::optional<Eigen::VectorXd>& warm = {}) {
  BarrierSolver solver(program);
  return solver.solve(cfg, warm);
}

}  // namespace conicnmf
