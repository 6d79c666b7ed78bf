#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tls_assist/run_config.hpp"

namespace tls_assist {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitSessionAbort = 4,
  kExitShapeMismatch = 5,
};

inline constexpr const char* kConfigEnvVar = "TLS_ASSIST_CONFIG";

struct CommonOptions {
  std::optional<std::filesystem::path> config;  // falls back to $TLS_ASSIST_CONFIG, then defaults
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::vector<std::string> tracks;  // empty: keep the config's selection
  std::optional<std::string> ablation;  // "ablation", "module" or "both"
  std::optional<std::filesystem::path> out;
};

// Loads the config and applies command-line overrides. Throws ConfigError / IoError.
RunConfig resolve_config(const CommonOptions& opts);

// Each command writes diagnostics to `err` and returns an ExitCode.

// Detection stream (JSONL) -> notice stream (JSONL). Writes to stdout when `out` is unset,
// plus "<out>.manifest.json" when it is set.
int cmd_process(const std::filesystem::path& input, const CommonOptions& opts, std::ostream& out,
                std::ostream& err);

// Writes `count` scenario/stream pairs per selected track and a manifest into `opts.out`.
int cmd_simulate(std::size_t count, const CommonOptions& opts, std::ostream& out,
                 std::ostream& err);

// Runs the selected variant matrix; writes report.json and tables.txt into `opts.out` when set
// and prints the tables.
int cmd_bench(const CommonOptions& opts, std::ostream& out, std::ostream& err);

// Prints per-metric deltas from report `a` to report `b`.
int cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b,
                const CommonOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace tls_assist
