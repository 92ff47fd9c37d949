// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#pragma once

#include <stdexcept>

namespace conicnmf {

struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct lookup_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace conicnmf
