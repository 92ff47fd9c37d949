// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conicnmf/errors.hpp"
#include "conicnmf/rng.hpp"

namespace conicnmf {

// Dense nonnegative input matrix V with instance metadata.
class NonnegMatrix {
 public:
  NonnegMatrix(Eigen::MatrixXd entries, std::string name = "",
               std::optional<int> known_nonneg_rank = std::nullopt)
      : entries_(std::move(entries)),
        name_(std::move(name)),
        known_nonneg_rank_(known_nonneg_rank) {
    if (entries_.rows() < 1 || entries_.cols() < 1)
      throw validation_error("matrix must have at least one row and column");
    for (Eigen::Index f = 0; f < entries_.rows(); ++f)
      for (Eigen::Index n = 0; n < entries_.cols(); ++n)
        if (!(entries_(f, n) >= 0.0))
          throw validation_error("negative or non-finite entry at row " +
                                 std::to_string(f) + ", col " +
                                 std::to_string(n));
  }

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  double operator()(Eigen::Index f, Eigen::Index n) const {
    return entries_(f, n);
  }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  const std::string& name() const { return name_; }
  std::optional<int> known_nonneg_rank() const { return known_nonneg_rank_; }

  double max_entry() const { return entries_.maxCoeff(); }
  double frobenius_norm() const { return entries_.norm(); }
  bool has_zero_entry() const { return entries_.minCoeff() == 0.0; }

 private:
  Eigen::MatrixXd entries_;
  std::string name_;
  std::optional<int> known_nonneg_rank_;
};

// Factor pair (W, H) with W: F x K and H: K x N, both nonnegative.
class FactorPair {
 public:
  FactorPair(Eigen::MatrixXd W, Eigen::MatrixXd H)
      : W_(std::move(W)), H_(std::move(H)) {
    if (W_.cols() != H_.rows())
      throw validation_error("inner dimensions of W and H differ");
    if (W_.cols() < 1) throw validation_error("rank must be positive");
    if (W_.minCoeff() < 0.0 || H_.minCoeff() < 0.0)
      throw validation_error("factor entries must be nonnegative");
  }

  const Eigen::MatrixXd& W() const { return W_; }
  const Eigen::MatrixXd& H() const { return H_; }
  Eigen::Index rank() const { return W_.cols(); }
  Eigen::MatrixXd product() const { return W_ * H_; }

 private:
  Eigen::MatrixXd W_;
  Eigen::MatrixXd H_;
};

// Relative Frobenius error ||V - WH||_F / ||V||_F. A factorization counts
// as exact when this is <= 1e-6.
inline double relative_error(const NonnegMatrix& V, const FactorPair& P) {
  if (P.W().rows() != V.rows() || P.H().cols() != V.cols())
    throw validation_error("factor dimensions do not match the target matrix");
  double vnorm = V.frobenius_norm();
  if (vnorm <= 0.0)
    throw validation_error("relative error undefined for an all-zero matrix");
  return (V.matrix() - P.product()).norm() / vnorm;
}

inline double relative_error(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W,
                             const Eigen::MatrixXd& H) {
  return (V - W * H).norm() / V.norm();
}

struct RandomProduct {
  NonnegMatrix V;
  FactorPair factors;
};

// V = WH with uniform-[0,1) factors; rank_+(V) = K with probability one.
inline RandomProduct gen_random_product_with_factors(int F, int N, int K,
                                                     std::uint64_t seed) {
  if (K < 1 || K > std::min(F, N))
    throw validation_error("K must satisfy 1 <= K <= min(F, N)");
  Rng rng(seed);
  Eigen::MatrixXd W(F, K), H(K, N);
  for (int f = 0; f < F; ++f)
    for (int k = 0; k < K; ++k) W(f, k) = rng.uniform();
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) H(k, n) = rng.uniform();
  NonnegMatrix V(W * H, "random", K);
  return {std::move(V), FactorPair(std::move(W), std::move(H))};
}

inline NonnegMatrix gen_random_product(int F, int N, int K,
                                       std::uint64_t seed) {
  return gen_random_product_with_factors(F, N, K, seed).V;
}

// Slack matrix of two nested hexagons with ratio (a-1)/a, for a > 1.
inline NonnegMatrix hexagon_slack_matrix(double a, std::string name = "",
                                         std::optional<int> rank_plus = {}) {
  if (!(a > 1.0)) throw validation_error("hexagon parameter must exceed 1");
  const double x = a, y = 2.0 * a - 1.0;
  Eigen::MatrixXd M(6, 6);
  M << 1, x, y, y, x, 1,
       1, 1, x, y, y, x,
       x, 1, 1, x, y, y,
       y, x, 1, 1, x, y,
       y, y, x, 1, 1, x,
       x, y, y, x, 1, 1;
  M /= x;
  return NonnegMatrix(std::move(M),
                      name.empty() ? "hex_a" + std::to_string(a) : name,
                      rank_plus);
}

namespace detail {

inline Eigen::MatrixXd hex_ainf_entries() {
  Eigen::MatrixXd M(6, 6);
  M << 0, 1, 2, 2, 1, 0,
       0, 0, 1, 2, 2, 1,
       1, 0, 0, 1, 2, 2,
       2, 1, 0, 0, 1, 2,
       2, 2, 1, 0, 0, 1,
       1, 2, 2, 1, 0, 0;
  return M;
}

}  // namespace detail

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "Vinf1", "Vinf2", "Vinf3", "Vinf4",   "hex_a2",
      "hex_a3", "hex_a4", "hex_ainf", "appB_example"};
  return names;
}

// Catalog of the instance library: infinitesimally rigid 5x5 matrices
// (nonnegative rank 4), nested-hexagon slack matrices (ranks 3, 4, 5, 5)
// and the 6x6 sparsity-integration worked example (rank 5).
inline NonnegMatrix builtin_matrix(const std::string& name) {
  if (name == "Vinf1") {
    Eigen::MatrixXd M(5, 5);
    M << 573705, 806520, 167622, 246500, 531659,
         397096,  39600, 299176,  63720, 274120,
         131646, 403260,  30269, 226915, 264510,
           9114,  85160, 311182, 827468, 851798,
         147857,   3200, 351037, 599025, 697755;
    return NonnegMatrix(std::move(M), name, 4);
  }
  if (name == "Vinf2") {
    Eigen::MatrixXd M(5, 5);
    M <<  30893,  319912, 149770,    873, 111428,
         383490,   87990,   5580, 628440, 587250,
         560076, 1030324, 331070, 288045, 350647,
         203830,  305184, 277512, 264376, 205933,
          90911,  142936, 500784, 618842, 609633;
    return NonnegMatrix(std::move(M), name, 4);
  }
  if (name == "Vinf3") {
    Eigen::MatrixXd M(5, 5);
    M <<  948201, 723609, 958755, 591858, 397953,
          222448, 218040,  30429, 348793,  15825,
          329588,   7189, 623001,  12012, 469185,
          467424, 160704, 115092, 835504, 343912,
         1114797, 932972, 975775, 997164, 636096;
    return NonnegMatrix(std::move(M), name, 4);
  }
  if (name == "Vinf4") {
    Eigen::MatrixXd M(5, 5);
    M <<  88076, 294646, 658787,  902872, 244559,
           2216,   4216, 596705,  652698, 250465,
         279360, 180864, 769506, 1051380, 391634,
         553284, 826606, 765406,  293965, 883775,
         696039, 897917, 148301,  832169, 169525;
    return NonnegMatrix(std::move(M), name, 4);
  }
  if (name == "hex_a2") return hexagon_slack_matrix(2.0, name, 3);
  if (name == "hex_a3") return hexagon_slack_matrix(3.0, name, 4);
  if (name == "hex_a4") return hexagon_slack_matrix(4.0, name, 5);
  if (name == "hex_ainf" || name == "V_a_inf")
    return NonnegMatrix(detail::hex_ainf_entries(), "hex_ainf", 5);
  if (name == "appB_example")
    return NonnegMatrix(detail::hex_ainf_entries(), name, 5);
  throw lookup_error("unknown builtin matrix '" + name + "'");
}

// CSV format: one header line "F,N", then F rows of N comma-separated
// reals printed with 17 significant digits (lossless round trip).
inline void save_matrix(const NonnegMatrix& V, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open '" + path + "' for writing");
  out << V.rows() << "," << V.cols() << "\n";
  char buf[64];
  for (Eigen::Index f = 0; f < V.rows(); ++f) {
    for (Eigen::Index n = 0; n < V.cols(); ++n) {
      std::snprintf(buf, sizeof(buf), "%.17g", V(f, n));
      out << (n ? "," : "") << buf;
    }
    out << "\n";
  }
}

inline NonnegMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw parse_error("empty matrix file '" + path + "'");

  auto split_fields = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) fields.push_back(item);
    return fields;
  };

  auto header = split_fields(line);
  if (header.size() != 2)
    throw parse_error("header must be 'F,N', got '" + line + "'");
  long F = 0, N = 0;
  try {
    F = std::stol(header[0]);
    N = std::stol(header[1]);
  } catch (const std::exception&) {
    throw parse_error("non-numeric header '" + line + "'");
  }
  if (F < 1 || N < 1) throw parse_error("header dimensions must be positive");

  Eigen::MatrixXd M(F, N);
  for (long f = 0; f < F; ++f) {
    if (!std::getline(in, line))
      throw parse_error("expected " + std::to_string(F) + " rows, got " +
                        std::to_string(f));
    auto fields = split_fields(line);
    if (static_cast<long>(fields.size()) != N)
      throw parse_error("row " + std::to_string(f) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(N));
    for (long n = 0; n < N; ++n) {
      double v;
      try {
        v = std::stod(fields[n]);
      } catch (const std::exception&) {
        throw parse_error("bad value at row " + std::to_string(f) + ", col " +
                          std::to_string(n));
      }
      if (!(v >= 0.0))
        throw validation_error("negative entry at row " + std::to_string(f) +
                               ", col " + std::to_string(n));
      M(f, n) = v;
    }
  }
  return NonnegMatrix(std::move(M), path);
}

}  // namespace conicnmf
