// Command-line front end: dispersion | spectrum | bands | fit.
#ifndef ISBPOL_TOOLS_CLI_HPP
#define ISBPOL_TOOLS_CLI_HPP

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isbpol::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalError = 3 };

/// Bad input from the user: exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `start:stop:step`: start, start + step, ... up to and including stop
/// (within 1e-9 step); each value is start + i * step. A single number is a
/// one-point range. Throws ConfigError for step <= 0 or stop < start.
std::vector<double> parse_range(const std::string& text);

/// Comma-separated numbers or one range.
std::vector<double> parse_list(const std::string& text);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace isbpol::cli

#endif  // ISBPOL_TOOLS_CLI_HPP
