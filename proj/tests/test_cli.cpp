#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tls_assist/cli_commands.hpp"
#include "tls_assist/report.hpp"
#include "tls_assist/run_config.hpp"

using namespace tls_assist;
namespace fs = std::filesystem;

namespace {

std::string config_error_key(std::string_view text) {
  try {
    (void)parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("tls_assist_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string read(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

CommonOptions small_bench(const fs::path& out) {
  CommonOptions o;
  o.tracks = {"tiny"};
  o.out = out;
  return o;
}

}  // namespace

TEST_CASE("defaults round trip through JSON") {
  const RunConfig d = default_run_config();
  const std::string text = to_json(d).dump();
  CHECK(to_json(parse_run_config(text)).dump() == text);
  CHECK(to_json(parse_run_config("{}")).dump() == text);
}

TEST_CASE("partial documents overlay the defaults") {
  const RunConfig c = parse_run_config(R"({"seed": 9, "pipeline": {"tlr": {"buffer_size": 5}}})");
  CHECK(c.seed == 9);
  CHECK(c.bench.master_seed == 9);
  CHECK(c.pipeline.tlr.buffer_size == 5);
  CHECK(c.pipeline.tlr.confidence_threshold == 0.5);
}

TEST_CASE("config errors carry the dotted key") {
  CHECK(config_error_key(R"({"pipeline": {"tlr": {"bogus": 1}}})") == "pipeline.tlr.bogus");
  CHECK(config_error_key(R"({"pipeline": {"tlr": {"buffer_size": "three"}}})") ==
        "pipeline.tlr.buffer_size");
  CHECK(config_error_key(R"({"pipeline": {"tlr": {"buffer_size": 0}}})") ==
        "pipeline.tlr.buffer_size");
  CHECK(config_error_key(R"({"noise": {"dropout_prob": 2}})") == "noise.dropout_prob");
  CHECK(config_error_key(R"({"penalties": {"red_light": 0}})") == "penalties.red_light");
  CHECK(config_error_key(R"({"seed": -1})") == "seed");
  CHECK(config_error_key("[1, 2]") == "");
  CHECK(config_error_key("{not json") == "");
  CHECK(config_error_key(R"({"pipeline": {"templates": {"lights": {"red": ""}}}})") ==
        "pipeline.templates.lights.red");
}

TEST_CASE("report JSON round trip") {
  RunConfig c = default_run_config();
  c.bench.tracks = {Track::tiny};
  c.bench.routes_per_track = 2;
  c.bench.repetitions = 1;
  const auto report = run_benchmark(c.bench, bench_variants(c), c.harness);
  const auto doc = report_to_json(report, nlohmann::ordered_json::object());
  const auto back = report_from_json(doc);
  CHECK(report_to_json(back, nlohmann::ordered_json::object()).dump() == doc.dump());
  CHECK_THROWS_AS(report_from_json(nlohmann::ordered_json::parse(R"({"rows": 3})")), ReportError);
}

TEST_CASE("score table layout") {
  RunConfig c = default_run_config();
  c.bench.tracks = {Track::tiny};
  c.bench.routes_per_track = 1;
  c.bench.repetitions = 1;
  const auto report = run_benchmark(c.bench, bench_variants(c), c.harness);
  const std::string table = format_score_table(report);
  CHECK(table.find("D+RP+SV") != std::string::npos);
  CHECK(table.find("Overall") != std::string::npos);
  const std::string inf = format_infraction_table(report);
  CHECK(inf.find("Red Light") != std::string::npos);
}

TEST_CASE("process command: exit codes") {
  TempDir dir("process");
  std::ostringstream out;
  std::ostringstream err;
  CommonOptions o;
  CHECK(cmd_process(dir.path / "missing.jsonl", o, out, err) == kExitIo);

  write(dir.path / "bad.json", R"({"pipeline": {"nope": true}})");
  o.config = dir.path / "bad.json";
  write(dir.path / "empty.jsonl", "");
  CHECK(cmd_process(dir.path / "empty.jsonl", o, out, err) == kExitConfig);
  CHECK(err.str().find("pipeline.nope") != std::string::npos);

  o.config.reset();
  std::string junk;
  for (int i = 0; i < 100; ++i) junk += (i % 5 == 0 ? "garbage\n" : "{}\n");
  write(dir.path / "junk.jsonl", junk);
  CHECK(cmd_process(dir.path / "junk.jsonl", o, out, err) == kExitSessionAbort);
}

TEST_CASE("config from the environment") {
  TempDir dir("env");
  write(dir.path / "env.json", R"({"views": {"bogus": 1}})");
  ::setenv(kConfigEnvVar, (dir.path / "env.json").c_str(), 1);
  std::ostringstream out;
  std::ostringstream err;
  CHECK(cmd_bench(CommonOptions{}, out, err) == kExitConfig);
  ::unsetenv(kConfigEnvVar);
}

TEST_CASE("simulate then process") {
  TempDir dir("simulate");
  CommonOptions o;
  o.tracks = {"tiny"};
  o.out = dir.path;
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(cmd_simulate(1, o, out, err) == kExitOk);
  CHECK(fs::exists(dir.path / "manifest.json"));
  REQUIRE(fs::exists(dir.path / "tiny_0.frames.jsonl"));

  CommonOptions p;
  p.out = dir.path / "notices.jsonl";
  REQUIRE(cmd_process(dir.path / "tiny_0.frames.jsonl", p, out, err) == kExitOk);
  const std::string first = read(dir.path / "notices.jsonl");
  CHECK_FALSE(first.empty());
  CHECK(fs::exists(dir.path / "notices.jsonl.manifest.json"));
  REQUIRE(cmd_process(dir.path / "tiny_0.frames.jsonl", p, out, err) == kExitOk);
  CHECK(read(dir.path / "notices.jsonl") == first);

  CommonOptions no_out;
  CHECK(cmd_simulate(1, no_out, out, err) == kExitConfig);
  CommonOptions bad_track;
  bad_track.tracks = {"medium"};
  bad_track.out = dir.path;
  CHECK(cmd_simulate(1, bad_track, out, err) == kExitConfig);
}

TEST_CASE("bench is reproducible and compare checks shape") {
  TempDir dir("bench");
  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(cmd_bench(small_bench(dir.path / "a"), out, err) == kExitOk);
  auto jobs = small_bench(dir.path / "b");
  jobs.jobs = 3;
  REQUIRE(cmd_bench(jobs, out, err) == kExitOk);
  CHECK(read(dir.path / "a" / "report.json") == read(dir.path / "b" / "report.json"));
  CHECK(read(dir.path / "a" / "tables.txt") == read(dir.path / "b" / "tables.txt"));

  std::ostringstream cmp;
  CHECK(cmd_compare(dir.path / "a" / "report.json", dir.path / "b" / "report.json",
                    CommonOptions{}, cmp, err) == kExitOk);
  CHECK(cmp.str().find("ds") != std::string::npos);

  auto other = small_bench(dir.path / "c");
  other.tracks = {"short"};
  other.seed = 4;
  REQUIRE(cmd_bench(other, out, err) == kExitOk);
  CHECK(cmd_compare(dir.path / "a" / "report.json", dir.path / "c" / "report.json",
                    CommonOptions{}, cmp, err) == kExitShapeMismatch);
  write(dir.path / "broken.json", "{}");
  CHECK(cmd_compare(dir.path / "a" / "report.json", dir.path / "broken.json", CommonOptions{},
                    cmp, err) == kExitIo);
}
