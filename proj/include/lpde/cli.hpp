#pragma once

#include "lpde/solver.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpde {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input_error = 2;
inline constexpr int estimation_failure = 3;
} // namespace exit_code

//! Malformed input or configuration; maps to exit code 2.
struct InputError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

//! One observation per line; blank lines and lines starting with '#' are
//! skipped. Errors name the offending line.
Vec read_sample(std::istream& in);
//! Two comma-separated coordinates per line.
Mat read_sample2d(std::istream& in);

//! "min:max:count" with count >= 2 and min < max.
Vec parse_grid(const std::string& spec);

//! %.17g, which round-trips every finite double.
std::string format_number(double v);

//! Runs the command-line tool; args[0] is the program name. CSV goes to
//! --out or `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

} // namespace lpde
