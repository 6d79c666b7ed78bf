#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tls_assist/detector_io.hpp"
#include "tls_assist/harness.hpp"
#include "tls_assist/pipeline.hpp"

namespace tls_assist {

enum class BenchMatrix : std::uint8_t { ablation, module, both };
std::string_view to_string(BenchMatrix m) noexcept;

// Everything a command needs, loaded from one JSON document. Every key is optional; missing
// keys keep their defaults, unknown keys are rejected with their dotted path.
struct RunConfig {
  bool single_view = false;
  double view_width = 1280.0;
  double view_height = 720.0;
  PipelineConfig pipeline;
  HarnessSetup harness;
  BenchmarkPlan bench;
  BenchMatrix matrix = BenchMatrix::ablation;
  SessionOptions session;
  std::uint64_t seed = 0;

  // Checks cross-field constraints and rebuilds derived fields (layout, sensor geometry).
  void finalize();
};

RunConfig default_run_config();

nlohmann::ordered_json to_json(const RunConfig& c);

// Throws ConfigError naming the offending key.
RunConfig parse_run_config(std::string_view text);
// Throws IoError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

// Variants selected by `matrix`, ablation rows first.
std::vector<ConfigVariant> bench_variants(const RunConfig& c);

}  // namespace tls_assist
