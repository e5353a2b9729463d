#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace optoskin {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitSync = 3,
  kExitNoValidPresses = 4,
  kExitCalibration = 5,
};

enum class LogLevel { Debug, Info, Warn, Error };
LogLevel parse_log_level(const std::string& name);

struct LogRecord {
  LogLevel level{LogLevel::Info};
  std::string stage;
  std::string message;
  double elapsed_s{0.0};
};

struct CommandOutcome {
  int exit_code{kExitOk};
  std::vector<std::filesystem::path> reports;
  std::vector<LogRecord> log;
  std::string error;
};

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir{"."};
  int threads{1};
  std::optional<std::uint64_t> seed;
  LogLevel log_level{LogLevel::Info};
  /// Echo log records to stderr as they happen.
  bool echo_log{false};
  /// Camera models replacing those of the run config (calibrate output).
  std::optional<std::filesystem::path> models;
  std::optional<std::vector<std::uint32_t>> factors;
  std::optional<std::size_t> n_seeds;
  std::optional<double> h;
  bool tune{false};
};

CommandOutcome cmd_simulate(const CommandOptions& options);
CommandOutcome cmd_localize(const CommandOptions& options);
CommandOutcome cmd_calibrate(const CommandOptions& options);
CommandOutcome cmd_ablate(const CommandOptions& options);
CommandOutcome cmd_latency(const CommandOptions& options);

/// Seeds of the ablation sweep, all derived from the run seed.
std::vector<std::uint64_t> sweep_seeds(std::uint64_t run_seed, std::size_t n);

/// Full command line: subcommand plus flags. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace optoskin
