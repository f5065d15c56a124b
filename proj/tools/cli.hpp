/// @file cli.hpp
/// @brief Command-line front end: validate, identities, geodesic, busemann, split, compare.
#pragma once

#include <ostream>

namespace lfg::cli {

/// Exit codes.
constexpr int kOk = 0;
constexpr int kCheckFailed = 1;  ///< a check failed or a computation did not finish
constexpr int kUsage = 2;        ///< bad arguments, unreadable or malformed model, invalid parameters

/// Runs one command; the primary CSV goes to `out`, log lines to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lfg::cli
