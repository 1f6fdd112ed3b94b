#pragma once
// Command-line front end: simulate, run, plot, couple, lipschitz.

#include <iosfwd>
#include <string>
#include <vector>

#include "dlpp/weight_model.hpp"

namespace dlpp {

/// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// "bernoulli:P" or "v:p,v:p,...@m" (atoms, then the hi/lo threshold).
/// Throws std::invalid_argument naming the literal.
WeightModel parse_model_literal(const std::string& literal);

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dlpp
