// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <ostream>
#include <string>
#include <vector>

#include "conicnmf/cones.hpp"
#include "conicnmf/errors.hpp"

namespace conicnmf {

struct VarBound {
  double lower = -kInf;
  double upper = kInf;
};

// Linear-objective conic program in affine-slack form:
//
//   minimize    c . z
//   subject to  G z + s = h,  s in K1 x K2 x ...,
//               variable_bounds[i].lower <= z_i <= variable_bounds[i].upper
//
// The cone blocks partition the rows of the slack vector. Immutable once
// built (the solver takes snapshots; objective swaps go through the
// solver, not this struct).
struct ConicProgram {
  int nvars = 0;
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double, Eigen::RowMajor> G;
  Eigen::VectorXd h;
  std::vector<Cone> cones;
  std::vector<VarBound> variable_bounds;  // empty means all variables free

  int nrows() const { return static_cast<int>(h.size()); }
};

// Dimension and partition diagnostics; empty result means the program is
// well formed.
inline std::vector<std::string> validate(const ConicProgram& p) {
  std::vector<std::string> issues;
  if (p.nvars < 1) issues.push_back("program has no variables");
  if (p.c.size() != p.nvars)
    issues.push_back("objective length " + std::to_string(p.c.size()) +
                     " != nvars " + std::to_string(p.nvars));
  if (p.G.cols() != p.nvars)
    issues.push_back("G has " + std::to_string(p.G.cols()) +
                     " columns, expected " + std::to_string(p.nvars));
  if (p.G.rows() != p.h.size())
    issues.push_back("G row count " + std::to_string(p.G.rows()) +
                     " != h length " + std::to_string(p.h.size()));
  if (!p.variable_bounds.empty() &&
      static_cast<int>(p.variable_bounds.size()) != p.nvars)
    issues.push_back("variable_bounds size != nvars");
  for (const auto& b : p.variable_bounds)
    if (!(b.lower < b.upper))
      issues.push_back("empty variable bound [" + std::to_string(b.lower) +
                       ", " + std::to_string(b.upper) + "]");

  // Cone blocks must cover rows 0..m-1 exactly once, in order.
  const int m = static_cast<int>(p.h.size());
  std::vector<int> hits(m, 0);
  for (const auto& cone : p.cones) {
    for (int d = 0; d < cone.dim(); ++d) {
      const int r = cone.row + d;
      if (r < 0 || r >= m) {
        issues.push_back("cone block row " + std::to_string(r) +
                         " outside slack vector");
      } else {
        ++hits[r];
      }
    }
  }
  for (int r = 0; r < m; ++r) {
    if (hits[r] == 0) issues.push_back("row " + std::to_string(r) +
                                       " covered by no cone block");
    if (hits[r] > 1)
      issues.push_back("row " + std::to_string(r) +
                       " covered by multiple cone blocks");
  }
  return issues;
}

// Plain-text dump (objective, triplet-form G, offsets, cone list) for
// cross-checking a program against an external solver by hand.
inline void dump(const ConicProgram& p, std::ostream& os) {
  os << "nvars " << p.nvars << "\n";
  os << "minimize";
  for (int i = 0; i < p.nvars; ++i) os << " " << p.c(i);
  os << "\nG triplets (row col value):\n";
  for (int r = 0; r < p.G.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(p.G, r);
         it; ++it)
      os << r << " " << it.col() << " " << it.value() << "\n";
  os << "h";
  for (int r = 0; r < p.h.size(); ++r) os << " " << p.h(r);
  os << "\ncones:\n";
  for (const auto& cone : p.cones) {
    os << "  " << cone_kind_name(cone.kind) << " @ " << cone.row;
    if (cone.kind == ConeKind::Box)
      os << " [" << cone.lower << ", " << cone.upper << "]";
    os << "\n";
  }
  if (!p.variable_bounds.empty()) {
    os << "variable bounds:\n";
    for (int i = 0; i < p.nvars; ++i)
      os << "  z" << i << " in [" << p.variable_bounds[i].lower << ", "
         << p.variable_bounds[i].upper << "]\n";
  }
}

}  // namespace conicnmf
