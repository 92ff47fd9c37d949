// conic-nmf - exact nonnegative matrix factorization via conic optimization
// Copyright 2026 The conic-nmf authors
// Licensed under Apache 2.0

#include "conicnmf/cli.hpp"

int main(int argc, char** argv) { return conicnmf::cli::run_cli(argc, argv); }
