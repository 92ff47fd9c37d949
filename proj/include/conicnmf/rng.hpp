// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <cstdint>

namespace conicnmf {

// Splitmix64 generator. The standard library engines are deterministic per
// implementation but their distributions are not; campaign outputs must be
// byte-identical across toolchains, so we keep the whole chain fixed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1): rejects exact zeros so log/sqrt changes of
  // variables stay finite.
  double uniform_pos() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  // Derives an independent per-task seed from a master seed. Used by
  // campaigns to fan one seed out to runs deterministically.
  static std::uint64_t split(std::uint64_t master, std::uint64_t index) {
    Rng g(master ^ (0x632be59bd9b4e019ULL * (index + 1)));
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace conicnmf
