#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "tls_assist/cli_commands.hpp"

int main(int argc, char** argv) {
  using namespace tls_assist;

  CLI::App app{"Traffic light and sign notices for driving agents"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run config (default: $TLS_ASSIST_CONFIG)");
    sub->add_option("--seed", seed, "master seed override");
  };

  auto* process = app.add_subcommand("process", "run the pipeline over a detection stream");
  std::string input;
  process->add_option("input", input, "detection stream (JSONL)")->required();
  add_common(process);
  process->add_option("--out", out, "notice stream path (default: stdout)");

  auto* simulate = app.add_subcommand("simulate", "generate scenarios and detection streams");
  std::size_t count = 1;
  add_common(simulate);
  simulate->add_option("--count", count, "routes per track");
  simulate->add_option("--track", opts.tracks, "tiny, short or long (repeatable)")
      ->delimiter(',');
  simulate->add_option("--out", out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "closed-loop benchmark over a variant matrix");
  add_common(bench);
  bench->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--track", opts.tracks, "tiny, short or long (repeatable)")->delimiter(',');
  std::string ablation;
  bench->add_option("--ablation", ablation, "variant matrix")
      ->check(CLI::IsMember({"ablation", "module", "both"}));
  bench->add_option("--out", out, "directory for report.json and tables.txt");

  auto* cmp = app.add_subcommand("compare", "per-metric deltas between two bench reports");
  std::string report_a;
  std::string report_b;
  cmp->add_option("before", report_a, "report.json")->required();
  cmp->add_option("after", report_b, "report.json")->required();
  cmp->add_option("--out", out, "write the delta table here as well");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto collect = [&] {
    if (!config.empty()) opts.config = config;
    opts.seed = seed;
    if (!out.empty()) opts.out = out;
    if (!ablation.empty()) opts.ablation = ablation;
  };

  if (*process) {
    collect();
    return cmd_process(input, opts, std::cout, std::cerr);
  }
  if (*simulate) {
    collect();
    return cmd_simulate(count, opts, std::cout, std::cerr);
  }
  if (*bench) {
    collect();
    return cmd_bench(opts, std::cout, std::cerr);
  }
  collect();
  return cmd_compare(report_a, report_b, opts, std::cout, std::cerr);
}
