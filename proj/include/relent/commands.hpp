#pragma once

// Config-driven commands behind the relent executable.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace relent::commands {

enum class ExitCode : int { Ok = 0, PartialFailure = 1, ConfigError = 2, Infeasible = 3 };

enum class LogLevel { Off, Error, Warn, Info, Debug };

/// Parses RELENT_LOG values (off, error, warn, info, debug); unknown values give Warn.
LogLevel parse_log_level(const char* value);

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::string> units;  // overrides the config's "units"
  std::optional<std::uint64_t> seed;  // overrides the config's "seed"
  int jobs = 1;
  LogLevel log_level = LogLevel::Warn;
};

/// Runs one of fixed-pair, solve, qkd-sweep, capacity-sweep, ree-sweep.
/// Results go to files under out_dir and a summary to `out`; diagnostics go to `log`.
ExitCode run(const std::string& command, const RunOptions& options, std::ostream& out, std::ostream& log);

}  // namespace relent::commands
