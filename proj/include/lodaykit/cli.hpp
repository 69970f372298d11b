#pragma once
/**
 * @file cli.hpp
 * @brief Batch front end: subcommands check, courant-check, split, linearize, zoom, classify, norm-profile, zoo.
 */

#include <ostream>
#include <string>
#include <vector>

namespace lk {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

/// args excludes the program name. The report (or error object) goes to `out` unless --out is given;
/// --table adds a human-readable summary on `err`.
int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lk
