#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tls_assist/message_gen.hpp"
#include "tls_assist/pipeline.hpp"
#include "tls_assist/scenario_sim.hpp"

namespace tls_assist {

// -----------------------------
// Scripted ego agent
// -----------------------------

struct AgentPolicy {
  double cruise_speed = 12.0;       // m/s
  double acceleration = 2.0;        // m/s^2
  double comfort_decel = 3.0;       // m/s^2, used for planned stops and yellow decisions
  double max_decel = 8.0;           // m/s^2
  double stop_margin = 2.0;         // metres before a stop line / stop sign
  int reaction_latency_ticks = 1;   // notices reach the planner this many ticks late
  double stop_hold = 1.0;           // seconds at standstill for a stop sign
  double speed_limit_factor = 0.95; // target fraction of an announced limit
};

// What the agent is allowed to know about the route: where stop lines and sign posts are,
// but not light phases or sign types. Those only arrive through notice text.
struct RouteMap {
  std::vector<double> stop_lines;
  std::vector<double> sign_posts;

  static RouteMap from(const Scenario& s);
};

// Rule-following planner that acts on NoticeMessage content only.
class ScriptedAgent {
 public:
  ScriptedAgent(const AgentPolicy& policy, RouteMap map, const MessageTemplates& templates);

  // Feed this tick's notice (may be empty). Returns the commanded acceleration.
  double step(const NoticeMessage& notice, double position, double speed, double dt);

  [[nodiscard]] std::optional<double> active_limit() const noexcept { return limit_; }

 private:
  struct PendingLimit {
    double value;  // m/s
    double post;
  };

  // Acceleration that brings the ego to rest at `target` along a comfortable profile.
  [[nodiscard]] double stop_control(double target, double x, double v, double dt) const noexcept;

  AgentPolicy policy_;
  RouteMap map_;
  const MessageTemplates* templates_;
  std::deque<NoticeMessage> pending_;
  std::optional<double> limit_;  // m/s
  std::optional<PendingLimit> pending_limit_;
  std::optional<double> stop_sign_at_;  // post the agent will halt at
  std::optional<double> served_sign_;
  std::optional<double> tracked_line_;
  bool light_commit_ = false;
  double hold_time_ = 0.0;
};

// -----------------------------
// Infractions and scoring
// -----------------------------

enum class Termination : std::uint8_t { completed, timeout, route_deviation };
std::string_view to_string(Termination t) noexcept;

struct InfractionLedger {
  int red_light = 0;
  int stop_sign = 0;
  int speeding = 0;
  int route_deviation = 0;
  int timeout = 0;

  bool operator==(const InfractionLedger&) const = default;
};

struct PenaltyCoefficients {
  double red_light = 0.7;
  double stop_sign = 0.8;
  double speeding = 0.9;
  // Deviations and timeouts terminate the route (capping RC) instead of decaying IS.
  double route_deviation = 1.0;
  double timeout = 1.0;
  bool count_speeding = true;

  void validate() const;  // throws ConfigError
};

struct Score {
  double rc = 0.0;  // percent
  double is = 1.0;  // [0, 1]
  double ds = 0.0;  // rc * is, 0-100
};

/// IS = prod coeff^count over infraction types; DS = RC * IS.
Score score(const InfractionLedger& ledger, double rc, const PenaltyCoefficients& coeffs);

// -----------------------------
// Closed loop
// -----------------------------

struct SimulationConfig {
  double tick = 0.1;               // seconds
  double time_budget_base = 30.0;  // seconds
  double min_average_speed = 1.5;  // m/s; budget = base + length / this
  double speed_tolerance = 0.10;   // fraction over the limit
  double speed_grace = 1.0;        // seconds over the limit before an infraction
  double halt_speed = 0.05;        // m/s that counts as standing still
  double stop_zone = 10.0;         // metres before a stop sign where a halt counts

  [[nodiscard]] double time_budget(double route_length) const noexcept {
    return time_budget_base + route_length / min_average_speed;
  }
};

struct RouteReport {
  double rc = 0.0;
  double is = 1.0;
  double ds = 0.0;
  InfractionLedger ledger;
  Termination termination = Termination::completed;
  std::size_t ticks = 0;

  bool operator==(const RouteReport&) const = default;
};

struct HarnessSetup {
  SensorModel sensor;
  NoiseModel noise;
  AgentPolicy agent;
  PenaltyCoefficients penalties;
  SimulationConfig sim;
  ScenarioParams scenario;
  double initial_speed = 0.0;
};

// Ticks: ground truth -> corruption -> pipeline -> notice -> agent -> dynamics -> infractions.
// When `trace` is given it receives the ego position/speed at every tick start and the final
// state.
RouteReport run_route(const Scenario& s, const PipelineConfig& pipeline, const HarnessSetup& setup,
                      std::uint64_t noise_seed, EgoTrace* trace = nullptr);

// -----------------------------
// Benchmark
// -----------------------------

struct ConfigVariant {
  std::string label;
  PipelineConfig pipeline;
};

// Ablation rows: D+RP+SV, D+RP, D+SV, D.
std::vector<ConfigVariant> ablation_matrix(const PipelineConfig& base);
// Module rows: baseline (no notices), +TLR-only, +TSR-only, +TLS-Assist.
std::vector<ConfigVariant> module_matrix(const PipelineConfig& base);

struct BenchmarkPlan {
  std::vector<Track> tracks = {Track::tiny, Track::short_route, Track::long_route};
  std::size_t routes_per_track = 10;
  std::size_t repetitions = 3;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
};

std::uint64_t scenario_seed(std::uint64_t master, Track track, std::size_t route) noexcept;
std::uint64_t noise_seed(std::uint64_t master, Track track, std::size_t route,
                         std::size_t repetition) noexcept;

struct RouteRun {
  Track track = Track::tiny;
  std::size_t route = 0;
  std::size_t repetition = 0;
  double route_length = 0.0;
  RouteReport report;
};

struct MetricMeans {
  std::size_t routes = 0;
  double ds = 0.0;
  double rc = 0.0;
  double is = 0.0;
  double red_light = 0.0;
  double stop_sign = 0.0;
  double speeding = 0.0;
  double route_deviation = 0.0;
  double timeout = 0.0;

  bool operator==(const MetricMeans&) const = default;
};

// Arithmetic means over the runs, summed in canonical (track, route, repetition) order so the
// result does not depend on the order of `runs`.
MetricMeans aggregate(std::span<const RouteRun> runs);

struct VariantReport {
  std::string label;
  bool enable_tlr = true;
  bool enable_tsr = true;
  bool enable_rp = true;
  bool enable_sv = true;
  std::vector<std::pair<Track, MetricMeans>> per_track;
  MetricMeans overall;
  std::vector<RouteRun> runs;  // canonical order
};

struct BenchmarkReport {
  BenchmarkPlan plan;
  std::vector<VariantReport> rows;
};

BenchmarkReport run_benchmark(const BenchmarkPlan& plan, std::span<const ConfigVariant> variants,
                              const HarnessSetup& setup);

class ShapeError : public Error {
 public:
  using Error::Error;
};

struct MetricDelta {
  std::string metric;
  double before = 0.0;
  double after = 0.0;
  double absolute = 0.0;
  std::optional<double> percent;  // undefined when `before` is 0
};

struct RowDelta {
  std::string label;
  std::optional<Track> track;  // nullopt for the overall means
  std::vector<MetricDelta> metrics;
};

/// Relative change, rounded half away from zero to a whole percent.
std::optional<int> percent_change(double before, double after) noexcept;
/// "(-13%)", "(+0%)", or "(n/a)" when the baseline is 0.
std::string format_percent_change(double before, double after);

// Row-by-row deltas from `a` to `b`, per track then overall. Throws ShapeError unless labels
// and tracks match.
std::vector<RowDelta> compare(const BenchmarkReport& a, const BenchmarkReport& b);

}  // namespace tls_assist
