#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wdro/error.hpp"

namespace wdro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNumerical = 4;

int exit_code(ErrorKind kind) noexcept;

std::string_view version() noexcept;

/// Runs one command line (without the program name). CSV goes to `--out` when given and to
/// `out` otherwise; diagnostics go to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wdro::cli
