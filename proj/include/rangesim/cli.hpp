// SPDX-License-Identifier: Apache-2.0
//
// The rangesim command line. Exit codes: 0 success (goal reached),
// 1 usage error, 2 invalid scenario or input document, 3 runtime failure,
// 4 run finished without reaching its goal.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rangesim::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kInvalid = 2;
inline constexpr int kRuntime = 3;
inline constexpr int kGoalMissed = 4;

/// Parses and dispatches; args[0] is the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rangesim::cli
