#ifndef REPLICOAL_APP_COMMANDS_HPP
#define REPLICOAL_APP_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace replicoal::app {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNumericalError = 3 };

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  unsigned threads = 1;
  bool quiet = false;
};

/// Runs one command; errors are reported on `err` and mapped to exit codes.
int run_command(const std::string& command, const CommonOptions& options, std::ostream& out, std::ostream& err);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace replicoal::app

#endif  // REPLICOAL_APP_COMMANDS_HPP
