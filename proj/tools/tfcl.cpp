// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "tfcl/cli.hpp"

int main(int argc, char** argv) { return tfcl::cli::run(argc, argv, std::cout, std::cerr); }
