#include "tls_assist/cli_commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tls_assist/report.hpp"

namespace tls_assist {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << content;
  if (!f.flush()) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

ordered_json manifest(std::string_view command, const RunConfig& c) {
  return {{"tool", "tls_assist"},
          {"command", command},
          {"schema_version", kFrameSchemaVersion},
          {"seed", c.seed},
          {"config", to_json(c)}};
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json read_json_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  ordered_json j = ordered_json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw IoError(path.string() + " is not valid JSON");
  return j;
}

// Runs `body`, mapping the error taxonomy onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "shape mismatch: " << e.what() << '\n';
    return kExitShapeMismatch;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ReportError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig c;
  if (opts.config) {
    c = load_run_config(*opts.config);
  } else if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
    c = load_run_config(env);
  } else {
    c = default_run_config();
  }
  if (opts.seed) c.seed = *opts.seed;
  if (!opts.tracks.empty()) {
    c.bench.tracks.clear();
    for (const auto& name : opts.tracks) {
      auto t = parse_track(name);
      if (!t) throw ConfigError("--track", "unknown track '" + name + "'");
      c.bench.tracks.push_back(*t);
    }
  }
  if (opts.ablation) {
    if (*opts.ablation == "ablation") {
      c.matrix = BenchMatrix::ablation;
    } else if (*opts.ablation == "module") {
      c.matrix = BenchMatrix::module;
    } else if (*opts.ablation == "both") {
      c.matrix = BenchMatrix::both;
    } else {
      throw ConfigError("--ablation", "expected 'ablation', 'module' or 'both'");
    }
  }
  c.finalize();
  return c;
}

int cmd_process(const fs::path& input, const CommonOptions& opts, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = resolve_config(opts);
    std::ifstream in(input, std::ios::binary);
    if (!in) throw IoError("cannot read " + input.string());

    SessionSummary summary;
    if (opts.out) {
      std::ofstream file(*opts.out, std::ios::binary | std::ios::trunc);
      if (!file) throw IoError("cannot write " + opts.out->string());
      summary = stream_session(in, file, c.pipeline, c.session);
      if (!file.flush()) throw IoError("write failed for " + opts.out->string());
    } else {
      summary = stream_session(in, out, c.pipeline, c.session);
    }

    if (opts.out) {
      ordered_json m = manifest("process", c);
      m["input"] = input.filename().string();
      ordered_json errors = ordered_json::array();
      for (const auto& e : summary.first_errors) {
        errors.push_back({{"line", e.line}, {"field", e.field}, {"message", e.message}});
      }
      m["summary"] = {{"frames", summary.frames},     {"errors", summary.errors},
                      {"emitted", summary.emitted},   {"suppressed", summary.suppressed},
                      {"degraded", summary.degraded}, {"aborted", summary.aborted},
                      {"first_errors", errors}};
      write_file(fs::path(opts.out->string() + ".manifest.json"), dump(m));
    }
    for (const auto& e : summary.first_errors) {
      err << "line " << e.line << ": " << e.message << '\n';
    }
    if (summary.aborted) {
      err << "session aborted: " << summary.errors << " malformed of " << summary.frames
          << " frames\n";
      return static_cast<int>(kExitSessionAbort);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_simulate(std::size_t count, const CommonOptions& opts, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = resolve_config(opts);
    if (!opts.out) throw ConfigError("--out", "simulate needs an output directory");
    ensure_dir(*opts.out);
    const HarnessSetup& h = c.harness;

    ordered_json files = ordered_json::array();
    for (Track t : c.bench.tracks) {
      for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t sseed = scenario_seed(c.seed, t, i);
        const std::uint64_t nseed = noise_seed(c.seed, t, i, 0);
        const Scenario s = generate_scenario(t, sseed, h.scenario);
        const EgoTrace trace = constant_speed_trace(s, h.agent.cruise_speed, h.sim.tick);
        std::string stream;
        for (const auto& rec : simulate_stream(s, trace, h.sensor, h.noise, nseed)) {
          stream += serialize_frame(rec);
          stream += '\n';
        }
        const std::string stem = std::string(to_string(t)) + "_" + std::to_string(i);
        write_file(*opts.out / (stem + ".scenario.json"), serialize_scenario(s) + "\n");
        write_file(*opts.out / (stem + ".frames.jsonl"), stream);
        files.push_back({{"track", to_string(t)},
                         {"index", i},
                         {"scenario", stem + ".scenario.json"},
                         {"frames", stem + ".frames.jsonl"},
                         {"scenario_seed", sseed},
                         {"noise_seed", nseed},
                         {"route_length", s.route_length},
                         {"frame_count", trace.position.size()}});
      }
    }
    ordered_json m = manifest("simulate", c);
    m["count"] = count;
    m["files"] = std::move(files);
    write_file(*opts.out / "manifest.json", dump(m));
    out << "wrote " << m["files"].size() << " scenario/stream pairs to " << opts.out->string()
        << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_bench(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = resolve_config(opts);
    BenchmarkPlan plan = c.bench;
    plan.jobs = std::max<std::size_t>(opts.jobs, 1);
    const std::vector<ConfigVariant> variants = bench_variants(c);
    const BenchmarkReport report = run_benchmark(plan, variants, c.harness);

    const std::string tables = format_score_table(report) + "\n" + format_infraction_table(report);
    if (opts.out) {
      ensure_dir(*opts.out);
      write_file(*opts.out / "report.json", dump(report_to_json(report, manifest("bench", c))));
      write_file(*opts.out / "tables.txt", tables);
    }
    out << tables;
    return static_cast<int>(kExitOk);
  });
}

int cmd_compare(const fs::path& a, const fs::path& b, const CommonOptions& opts,
                std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const BenchmarkReport ra = report_from_json(read_json_file(a));
    const BenchmarkReport rb = report_from_json(read_json_file(b));
    const std::vector<RowDelta> deltas = compare(ra, rb);
    const std::string table = format_compare(deltas);
    if (opts.out) write_file(*opts.out, table);
    out << table;
    return static_cast<int>(kExitOk);
  });
}

}  // namespace tls_assist
