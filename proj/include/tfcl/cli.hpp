// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace tfcl::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDivergence = 3, kIo = 4 };

// Entry point of the `tfcl` tool: gen, train, eval, sweep, report, lle.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tfcl::cli
