#pragma once

// Subcommands of the `pagar` runner. Each returns the process exit code:
// 0 success, 1 verification or component failure, 2 configuration error.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace pagar::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsageError = 2 };

enum class LogLevel { error, info, debug };

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> workers;
  LogLevel log_level = LogLevel::info;
};

// Reads PAGAR_LOG_LEVEL; unset means info. Throws ConfigError on other values.
LogLevel log_level_from_env();

int run_example1_sweep(const CommonOptions& opts);
int run_train(const CommonOptions& opts);
int run_verify(const CommonOptions& opts);
int run_random_suite(const CommonOptions& opts);

}  // namespace pagar::cli
