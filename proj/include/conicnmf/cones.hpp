// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace conicnmf {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ConeKind {
  ExponentialCone3,         // x1 >= x2 exp(x3/x2), x2 > 0, plus closure branch
  RotatedSecondOrderCone3,  // 2 x1 x2 >= x3^2, x1 >= 0, x2 >= 0
  NonnegativeRay,           // x >= 0
  Box,                      // lower <= x <= upper
};

// One block of the slack vector. 3-dimensional kinds constrain three
// consecutive rows starting at `row`; the 1-dimensional kinds one row.
struct Cone {
  ConeKind kind;
  int row = 0;
  double lower = 0.0;  // Box only
  double upper = kInf;

  int dim() const {
    return (kind == ConeKind::ExponentialCone3 ||
            kind == ConeKind::RotatedSecondOrderCone3)
               ? 3
               : 1;
  }

  // Complexity parameter of the log barrier used for this cone.
  double barrier_parameter() const {
    switch (kind) {
      case ConeKind::ExponentialCone3:
        return 3.0;
      case ConeKind::RotatedSecondOrderCone3:
        return 2.0;
      case ConeKind::NonnegativeRay:
        return 1.0;
      case ConeKind::Box:
        return (std::isfinite(lower) ? 1.0 : 0.0) +
               (std::isfinite(upper) ? 1.0 : 0.0);
    }
    return 0.0;
  }
};

inline Cone exp_cone(int row) { return {ConeKind::ExponentialCone3, row}; }
inline Cone rsoc_cone(int row) {
  return {ConeKind::RotatedSecondOrderCone3, row};
}
inline Cone ray_cone(int row) { return {ConeKind::NonnegativeRay, row}; }
inline Cone box_cone(int row, double lo, double hi) {
  return {ConeKind::Box, row, lo, hi};
}

// True iff x lies within (roughly) distance tol of the cone; closure
// branches of the exponential cone included. Monotone in tol.
inline bool membership(const Cone& cone, const double* x, double tol) {
  switch (cone.kind) {
    case ConeKind::ExponentialCone3: {
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      // Closure branch {x1 >= 0, x2 = 0, x3 <= 0}, thickened by tol.
      if (std::abs(x2) <= tol && x1 >= -tol && x3 <= tol) return true;
      if (x2 <= 0.0) return false;
      // log-space comparison avoids overflow of exp(x3/x2)
      if (x1 + tol <= 0.0) return false;
      return std::log(x2) + x3 / x2 <= std::log(x1 + tol);
    }
    case ConeKind::RotatedSecondOrderCone3: {
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      if (x1 < -tol || x2 < -tol) return false;
      const double a = std::max(x1 + tol, 0.0), b = std::max(x2 + tol, 0.0);
      return 2.0 * a * b + tol >= x3 * x3;
    }
    case ConeKind::NonnegativeRay:
      return x[0] >= -tol;
    case ConeKind::Box:
      return x[0] >= cone.lower - tol && x[0] <= cone.upper + tol;
  }
  return false;
}

// Strict interior with an absolute margin; this is what the barrier and
// phase-I machinery use.
inline bool cone_interior(const Cone& cone, const double* x, double margin) {
  switch (cone.kind) {
    case ConeKind::ExponentialCone3: {
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      if (x1 <= margin || x2 <= margin) return false;
      return x2 * std::log(x1 / x2) - x3 >= margin;
    }
    case ConeKind::RotatedSecondOrderCone3: {
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      return x1 > margin && x2 > margin && 2.0 * x1 * x2 - x3 * x3 > margin;
    }
    case ConeKind::NonnegativeRay:
      return x[0] > margin;
    case ConeKind::Box:
      return x[0] > cone.lower + margin && x[0] < cone.upper - margin;
  }
  return false;
}

// Barrier value at x; +inf outside the domain. Barriers:
//   exp cone: -log(x2 log(x1/x2) - x3) - log x1 - log x2
//   rsoc:     -log(2 x1 x2 - x3^2)
//   ray:      -log x
//   box:      -log(x - l) - log(u - x), finite sides only
inline double barrier_value(const Cone& cone, const double* x) {
  switch (cone.kind) {
    case ConeKind::ExponentialCone3: {
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      if (x1 <= 0.0 || x2 <= 0.0) return kInf;
      const double r = x2 * std::log(x1 / x2) - x3;
      if (r <= 0.0) return kInf;
      return -std::log(r) - std::log(x1) - std::log(x2);
    }
    case ConeKind::RotatedSecondOrderCone3: {
      const double r = 2.0 * x[0] * x[1] - x[2] * x[2];
      if (x[0] <= 0.0 || x[1] <= 0.0 || r <= 0.0) return kInf;
      return -std::log(r);
    }
    case ConeKind::NonnegativeRay:
      return x[0] > 0.0 ? -std::log(x[0]) : kInf;
    case ConeKind::Box: {
      double v = 0.0;
      if (std::isfinite(cone.lower)) {
        if (x[0] <= cone.lower) return kInf;
        v -= std::log(x[0] - cone.lower);
      }
      if (std::isfinite(cone.upper)) {
        if (x[0] >= cone.upper) return kInf;
        v -= std::log(cone.upper - x[0]);
      }
      return v;
    }
  }
  return kInf;
}

// Gradient and Hessian of the barrier at an interior point. `hess` is
// dim x dim, row-major.
inline void barrier_derivs(const Cone& cone, const double* x, double* grad,
                           double* hess) {
  switch (cone.kind) {
    case ConeKind::ExponentialCone3: {
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      const double L = std::log(x1 / x2);
      const double r = x2 * L - x3;
      // dr = (x2/x1, L - 1, -1)
      const double dr0 = x2 / x1, dr1 = L - 1.0, dr2 = -1.0;
      grad[0] = -dr0 / r - 1.0 / x1;
      grad[1] = -dr1 / r - 1.0 / x2;
      grad[2] = -dr2 / r;
      const double ir2 = 1.0 / (r * r), ir = 1.0 / r;
      // d2r = [[-x2/x1^2, 1/x1, 0], [1/x1, -1/x2, 0], [0,0,0]]
      hess[0] = dr0 * dr0 * ir2 + (x2 / (x1 * x1)) * ir + 1.0 / (x1 * x1);
      hess[1] = dr0 * dr1 * ir2 - ir / x1;
      hess[2] = dr0 * dr2 * ir2;
      hess[3] = hess[1];
      hess[4] = dr1 * dr1 * ir2 + ir / x2 + 1.0 / (x2 * x2);
      hess[5] = dr1 * dr2 * ir2;
      hess[6] = hess[2];
      hess[7] = hess[5];
      hess[8] = dr2 * dr2 * ir2;
      return;
    }
    case ConeKind::RotatedSecondOrderCone3: {
      const double x1 = x[0], x2 = x[1], x3 = x[2];
      const double r = 2.0 * x1 * x2 - x3 * x3;
      const double dr0 = 2.0 * x2, dr1 = 2.0 * x1, dr2 = -2.0 * x3;
      grad[0] = -dr0 / r;
      grad[1] = -dr1 / r;
      grad[2] = -dr2 / r;
      const double ir2 = 1.0 / (r * r), ir = 1.0 / r;
      hess[0] = dr0 * dr0 * ir2;
      hess[1] = dr0 * dr1 * ir2 - 2.0 * ir;
      hess[2] = dr0 * dr2 * ir2;
      hess[3] = hess[1];
      hess[4] = dr1 * dr1 * ir2;
      hess[5] = dr1 * dr2 * ir2;
      hess[6] = hess[2];
      hess[7] = hess[5];
      hess[8] = dr2 * dr2 * ir2 + 2.0 * ir;
      return;
    }
    case ConeKind::NonnegativeRay:
      grad[0] = -1.0 / x[0];
      hess[0] = 1.0 / (x[0] * x[0]);
      return;
    case ConeKind::Box: {
      grad[0] = 0.0;
      hess[0] = 0.0;
      if (std::isfinite(cone.lower)) {
        const double d = x[0] - cone.lower;
        grad[0] -= 1.0 / d;
        hess[0] += 1.0 / (d * d);
      }
      if (std::isfinite(cone.upper)) {
        const double d = cone.upper - x[0];
        grad[0] += 1.0 / d;
        hess[0] += 1.0 / (d * d);
      }
      return;
    }
  }
}

namespace detail {

// Smallest positive root of a*t^2 + b*t + c with c > 0, or +inf.
inline double smallest_positive_root(double a, double b, double c) {
  if (a == 0.0) return b < 0.0 ? -c / b : kInf;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return a > 0.0 ? kInf : 0.0;  // a<0, disc<0 cannot occur
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double r1 = q != 0.0 ? c / q : kInf;
  double r2 = a != 0.0 ? q / a : kInf;
  double best = kInf;
  if (r1 > 0.0) best = std::min(best, r1);
  if (r2 > 0.0) best = std::min(best, r2);
  return best;
}

}  // namespace detail

// Upper bound on the step alpha keeping x + alpha*dx inside the cone
// domain. Exact for ray/box/rsoc; the exponential cone's transcendental
// boundary is located by bisection to line-search accuracy.
inline double cone_max_step(const Cone& cone, const double* x,
                            const double* dx) {
  auto ray_step = [](double s, double d) {
    return d < 0.0 ? -s / d : kInf;
  };
  switch (cone.kind) {
    case ConeKind::ExponentialCone3: {
      double step = std::min(ray_step(x[0], dx[0]), ray_step(x[1], dx[1]));
      auto resid = [&](double a) {
        const double x1 = x[0] + a * dx[0], x2 = x[1] + a * dx[1],
                     x3 = x[2] + a * dx[2];
        return x2 * std::log(x1 / x2) - x3;
      };
      double hi = std::isfinite(step) ? 0.999 * step : 1e8;
      if (resid(hi) > 0.0) return step;
      double lo = 0.0;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (resid(mid) > 0.0 ? lo : hi) = mid;
      }
      return lo;
    }
    case ConeKind::RotatedSecondOrderCone3: {
      double step = std::min(ray_step(x[0], dx[0]), ray_step(x[1], dx[1]));
      const double a = 2.0 * dx[0] * dx[1] - dx[2] * dx[2];
      const double b = 2.0 * (x[0] * dx[1] + x[1] * dx[0] - x[2] * dx[2]);
      const double c = 2.0 * x[0] * x[1] - x[2] * x[2];
      return std::min(step, detail::smallest_positive_root(a, b, c));
    }
    case ConeKind::NonnegativeRay:
      return ray_step(x[0], dx[0]);
    case ConeKind::Box: {
      double step = kInf;
      if (std::isfinite(cone.lower)) step = ray_step(x[0] - cone.lower, dx[0]);
      if (std::isfinite(cone.upper))
        step = std::min(step, ray_step(cone.upper - x[0], -dx[0]));
      return step;
    }
  }
  return kInf;
}

inline std::string cone_kind_name(ConeKind kind) {
  switch (kind) {
    case ConeKind::ExponentialCone3:
      return "exp";
    case ConeKind::RotatedSecondOrderCone3:
      return "rsoc";
    case ConeKind::NonnegativeRay:
      return "ray";
    case ConeKind::Box:
      return "box";
  }
  return "?";
}

}  // namespace conicnmf
