#include "tls_assist/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>

#include "tls_assist/rng.hpp"

namespace tls_assist {

namespace {

std::optional<double> next_ahead(const std::vector<double>& sorted, double x) noexcept {
  auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  if (it == sorted.end()) return std::nullopt;
  return *it;
}

void check_coeff(double c, const char* key) {
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError(key, "must lie in (0, 1]");
}

double repeat_factor(double coeff, int count) noexcept {
  double f = 1.0;
  for (int i = 0; i < count; ++i) f *= coeff;
  return f;
}

}  // namespace

RouteMap RouteMap::from(const Scenario& s) {
  RouteMap m;
  for (const auto& e : s.events) {
    (e.kind == EventKind::intersection ? m.stop_lines : m.sign_posts).push_back(e.position);
  }
  return m;
}

ScriptedAgent::ScriptedAgent(const AgentPolicy& policy, RouteMap map,
                             const MessageTemplates& templates)
    : policy_(policy), map_(std::move(map)), templates_(&templates) {
  std::sort(map_.stop_lines.begin(), map_.stop_lines.end());
  std::sort(map_.sign_posts.begin(), map_.sign_posts.end());
}

double ScriptedAgent::stop_control(double target, double x, double v, double dt) const noexcept {
  const double d = target - x;
  if (d <= 0.05) return std::max(-policy_.max_decel, -v / dt);
  const double required = v * v / (2.0 * d);
  const double v_allow = std::sqrt(2.0 * policy_.comfort_decel * d);
  if (v > v_allow) return -std::min(required, policy_.max_decel);
  return std::clamp((v_allow - v) / dt, -policy_.comfort_decel, policy_.acceleration);
}

double ScriptedAgent::step(const NoticeMessage& notice, double x, double v, double dt) {
  pending_.push_back(notice);
  NoticeMessage active;
  if (pending_.size() > static_cast<std::size_t>(std::max(policy_.reaction_latency_ticks, 0))) {
    active = std::move(pending_.front());
    pending_.pop_front();
  }

  const std::optional<double> line = next_ahead(map_.stop_lines, x);
  if (line != tracked_line_) {
    tracked_line_ = line;
    light_commit_ = false;
  }
  // Light instructions are acted on as they arrive; no notice means no constraint.
  const LightState light =
      templates_->match_light(active.light_part).value_or(LightState::no_detection);

  const SignClass sign = templates_->match_sign(active.sign_part).value_or(SignClass::off);
  const std::optional<double> post = next_ahead(map_.sign_posts, x);
  if (sign != SignClass::off && post) {
    if (sign == SignClass::stop) {
      if (served_sign_ != post) stop_sign_at_ = post;
    } else if (auto kmh = speed_limit_kmh(sign)) {
      const double value = *kmh / 3.6;
      // Slow down ahead of a lower limit; a higher one only applies once the post is passed.
      if (!limit_ || value < *limit_) limit_ = value;
      pending_limit_ = PendingLimit{value, *post};
    }
  }
  if (pending_limit_ && x >= pending_limit_->post) {
    limit_ = pending_limit_->value;
    pending_limit_.reset();
  }

  double target_speed = policy_.cruise_speed;
  if (limit_) target_speed = std::min(target_speed, *limit_ * policy_.speed_limit_factor);
  double a = std::clamp((target_speed - v) / dt, -policy_.comfort_decel, policy_.acceleration);

  if (line && (light == LightState::red || light == LightState::yellow)) {
    const double stop_point = *line - policy_.stop_margin;
    const double room = x < stop_point ? stop_point - x : std::max(*line - x - 0.5, 0.01);
    const double required = v * v / (2.0 * room);
    const double bound =
        light == LightState::red ? policy_.max_decel : policy_.comfort_decel;
    if (light_commit_ || required <= bound) {
      light_commit_ = true;
      a = std::min(a, stop_control(std::max(stop_point, x), x, v, dt));
    }
  } else {
    light_commit_ = false;
  }

  if (stop_sign_at_) {
    if (x >= *stop_sign_at_) {
      stop_sign_at_.reset();
      hold_time_ = 0.0;
    } else {
      a = std::min(a, stop_control(*stop_sign_at_ - policy_.stop_margin, x, v, dt));
      if (v < 0.05 && *stop_sign_at_ - x <= policy_.stop_margin + 1.0) {
        hold_time_ += dt;
        if (hold_time_ >= policy_.stop_hold - 1e-9) {
          served_sign_ = stop_sign_at_;
          stop_sign_at_.reset();
          hold_time_ = 0.0;
        }
      }
    }
  }
  return a;
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::timeout: return "timeout";
    case Termination::route_deviation: return "route_deviation";
  }
  return "completed";
}

void PenaltyCoefficients::validate() const {
  check_coeff(red_light, "penalties.red_light");
  check_coeff(stop_sign, "penalties.stop_sign");
  check_coeff(speeding, "penalties.speeding");
  check_coeff(route_deviation, "penalties.route_deviation");
  check_coeff(timeout, "penalties.timeout");
}

Score score(const InfractionLedger& ledger, double rc, const PenaltyCoefficients& coeffs) {
  double is = 1.0;
  is *= repeat_factor(coeffs.red_light, ledger.red_light);
  is *= repeat_factor(coeffs.stop_sign, ledger.stop_sign);
  if (coeffs.count_speeding) is *= repeat_factor(coeffs.speeding, ledger.speeding);
  is *= repeat_factor(coeffs.route_deviation, ledger.route_deviation);
  is *= repeat_factor(coeffs.timeout, ledger.timeout);
  return Score{rc, is, rc * is};
}

RouteReport run_route(const Scenario& s, const PipelineConfig& pipeline_config,
                      const HarnessSetup& setup, std::uint64_t noise_seed, EgoTrace* trace) {
  const SimulationConfig& sim = setup.sim;
  const double dt = sim.tick;
  TlsPipeline pipeline(pipeline_config);
  ScriptedAgent agent(setup.agent, RouteMap::from(s), pipeline_config.templates);
  SensorModel sensor = setup.sensor;
  sensor.multi_view = !pipeline_config.layout.is_single_view();

  RouteReport report;
  std::vector<bool> halted(s.events.size(), false);
  std::optional<double> gt_limit;
  double over_time = 0.0;
  bool speeding_flagged = false;
  double x = 0.0;
  double v = setup.initial_speed;
  const double budget = sim.time_budget(s.route_length);
  if (trace) {
    trace->tick = dt;
    trace->position.clear();
    trace->speed.clear();
  }

  for (std::size_t i = 0;; ++i) {
    if (trace) {
      trace->position.push_back(x);
      trace->speed.push_back(v);
    }
    const double t = static_cast<double>(i) * dt;
    if (t >= budget) {
      report.termination = Termination::timeout;
      report.ledger.timeout = 1;
      break;
    }
    const auto frame_index = static_cast<std::int64_t>(i);
    const GroundTruthFrame gt = ground_truth_frame(s, sensor, x, round_to(t, 6), frame_index);
    const FrameRecord rec = corrupt(gt, setup.noise, sensor, noise_seed);
    const FrameResult result = pipeline.process(rec.frame);
    const double a = agent.step(result.notice, x, v, dt);

    double x1;
    double v1 = v + a * dt;
    if (v1 < 0.0) {
      x1 = x + (a < 0.0 ? v * v / (-2.0 * a) : 0.0);
      v1 = 0.0;
    } else {
      x1 = x + 0.5 * (v + v1) * dt;
    }
    report.ticks = i + 1;

    for (std::size_t e = 0; e < s.events.size(); ++e) {
      const ScenarioEvent& ev = s.events[e];
      if (!(x < ev.position && ev.position <= x1)) continue;
      if (ev.kind == EventKind::intersection) {
        const double when = t + dt * (ev.position - x) / (x1 - x);
        if (ev.schedule.at(when) == LightClass::red) ++report.ledger.red_light;
      } else if (ev.sign == SignClass::stop) {
        if (!halted[e]) ++report.ledger.stop_sign;
      } else if (auto kmh = speed_limit_kmh(ev.sign)) {
        gt_limit = *kmh / 3.6;
      }
    }
    x = x1;
    v = v1;

    if (v <= sim.halt_speed) {
      for (std::size_t e = 0; e < s.events.size(); ++e) {
        const ScenarioEvent& ev = s.events[e];
        if (ev.kind == EventKind::sign && ev.sign == SignClass::stop && ev.position >= x &&
            ev.position - x <= sim.stop_zone) {
          halted[e] = true;
        }
      }
    }
    if (gt_limit && v > *gt_limit * (1.0 + sim.speed_tolerance)) {
      over_time += dt;
      if (over_time > sim.speed_grace + 1e-9 && !speeding_flagged) {
        ++report.ledger.speeding;
        speeding_flagged = true;
      }
    } else {
      over_time = 0.0;
      speeding_flagged = false;
    }

    if (s.deviation_at && x >= *s.deviation_at) {
      x = *s.deviation_at;
      report.termination = Termination::route_deviation;
      report.ledger.route_deviation = 1;
      break;
    }
    if (x >= s.route_length) {
      report.termination = Termination::completed;
      break;
    }
  }
  if (trace) {
    trace->position.push_back(x);
    trace->speed.push_back(v);
  }

  const double rc = report.termination == Termination::completed
                        ? 100.0
                        : 100.0 * std::clamp(x / s.route_length, 0.0, 1.0);
  const Score sc = score(report.ledger, rc, setup.penalties);
  report.rc = sc.rc;
  report.is = sc.is;
  report.ds = sc.ds;
  return report;
}

std::vector<ConfigVariant> ablation_matrix(const PipelineConfig& base) {
  std::vector<ConfigVariant> out;
  for (auto [label, rp, sv] : {std::tuple{"D+RP+SV", true, true}, std::tuple{"D+RP", true, false},
                               std::tuple{"D+SV", false, true}, std::tuple{"D", false, false}}) {
    ConfigVariant v{label, base};
    v.pipeline.enable_tlr = true;
    v.pipeline.tlr.enable_rp = rp;
    v.pipeline.tlr.enable_sv = sv;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<ConfigVariant> module_matrix(const PipelineConfig& base) {
  std::vector<ConfigVariant> out;
  for (auto [label, tlr, tsr] :
       {std::tuple{"baseline", false, false}, std::tuple{"+TLR-only", true, false},
        std::tuple{"+TSR-only", false, true}, std::tuple{"+TLS-Assist", true, true}}) {
    ConfigVariant v{label, base};
    v.pipeline.enable_tlr = tlr;
    v.pipeline.enable_tsr = tsr;
    out.push_back(std::move(v));
  }
  return out;
}

std::uint64_t scenario_seed(std::uint64_t master, Track track, std::size_t route) noexcept {
  return derive_seed({master, 0x5CE0, index_of(track), route});
}

std::uint64_t noise_seed(std::uint64_t master, Track track, std::size_t route,
                         std::size_t repetition) noexcept {
  return derive_seed({master, 0x4015E, index_of(track), route, repetition});
}

MetricMeans aggregate(std::span<const RouteRun> runs) {
  std::vector<const RouteRun*> order;
  order.reserve(runs.size());
  for (const auto& r : runs) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const RouteRun* a, const RouteRun* b) {
    return std::tuple{index_of(a->track), a->route, a->repetition} <
           std::tuple{index_of(b->track), b->route, b->repetition};
  });
  MetricMeans m;
  m.routes = order.size();
  if (order.empty()) return m;
  for (const RouteRun* r : order) {
    m.ds += r->report.ds;
    m.rc += r->report.rc;
    m.is += r->report.is;
    m.red_light += r->report.ledger.red_light;
    m.stop_sign += r->report.ledger.stop_sign;
    m.speeding += r->report.ledger.speeding;
    m.route_deviation += r->report.ledger.route_deviation;
    m.timeout += r->report.ledger.timeout;
  }
  const auto n = static_cast<double>(order.size());
  for (double* f : {&m.ds, &m.rc, &m.is, &m.red_light, &m.stop_sign, &m.speeding,
                    &m.route_deviation, &m.timeout}) {
    *f /= n;
  }
  return m;
}

BenchmarkReport run_benchmark(const BenchmarkPlan& plan, std::span<const ConfigVariant> variants,
                              const HarnessSetup& setup) {
  setup.noise.validate();
  setup.penalties.validate();
  if (plan.repetitions == 0) throw ConfigError("bench.repetitions", "must be at least 1");

  std::vector<Track> tracks = plan.tracks;
  std::sort(tracks.begin(), tracks.end(),
            [](Track a, Track b) { return index_of(a) < index_of(b); });
  tracks.erase(std::unique(tracks.begin(), tracks.end()), tracks.end());

  struct ScenarioSlot {
    Track track;
    std::size_t route;
    Scenario scenario;
  };
  std::vector<ScenarioSlot> scenarios;
  for (Track t : tracks) {
    for (std::size_t r = 0; r < plan.routes_per_track; ++r) {
      scenarios.push_back({t, r, generate_scenario(t, scenario_seed(plan.master_seed, t, r),
                                                   setup.scenario)});
    }
  }

  struct Task {
    std::size_t variant;
    std::size_t scenario;
    std::size_t repetition;
  };
  std::vector<Task> tasks;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      for (std::size_t k = 0; k < plan.repetitions; ++k) tasks.push_back({v, s, k});
    }
  }

  std::vector<RouteRun> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        const Task& task = tasks[i];
        const ScenarioSlot& slot = scenarios[task.scenario];
        RouteRun& out = results[i];
        out.track = slot.track;
        out.route = slot.route;
        out.repetition = task.repetition;
        out.route_length = slot.scenario.route_length;
        out.report = run_route(
            slot.scenario, variants[task.variant].pipeline, setup,
            noise_seed(plan.master_seed, slot.track, slot.route, task.repetition));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(plan.jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  BenchmarkReport report;
  report.plan = plan;
  report.plan.tracks = tracks;
  const std::size_t per_variant = scenarios.size() * plan.repetitions;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    VariantReport row;
    row.label = variants[v].label;
    row.enable_tlr = variants[v].pipeline.enable_tlr;
    row.enable_tsr = variants[v].pipeline.enable_tsr;
    row.enable_rp = variants[v].pipeline.tlr.enable_rp;
    row.enable_sv = variants[v].pipeline.tlr.enable_sv;
    row.runs.assign(results.begin() + static_cast<std::ptrdiff_t>(v * per_variant),
                    results.begin() + static_cast<std::ptrdiff_t>((v + 1) * per_variant));
    for (Track t : tracks) {
      std::vector<RouteRun> subset;
      for (const auto& r : row.runs) {
        if (r.track == t) subset.push_back(r);
      }
      row.per_track.emplace_back(t, aggregate(subset));
    }
    row.overall = aggregate(row.runs);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::optional<int> percent_change(double before, double after) noexcept {
  if (before == 0.0) return std::nullopt;
  return static_cast<int>(std::round((after - before) / before * 100.0));
}

std::string format_percent_change(double before, double after) {
  const auto p = percent_change(before, after);
  if (!p) return "(n/a)";
  return std::string("(") + (*p < 0 ? "-" : "+") + std::to_string(std::abs(*p)) + "%)";
}

namespace {

std::vector<MetricDelta> metric_deltas(const MetricMeans& a, const MetricMeans& b) {
  std::vector<MetricDelta> out;
  auto add = [&](const char* name, double before, double after) {
    MetricDelta d{name, before, after, after - before, std::nullopt};
    if (before != 0.0) d.percent = (after - before) / before * 100.0;
    out.push_back(std::move(d));
  };
  add("ds", a.ds, b.ds);
  add("rc", a.rc, b.rc);
  add("is", a.is, b.is);
  add("red_light", a.red_light, b.red_light);
  add("stop_sign", a.stop_sign, b.stop_sign);
  add("speeding", a.speeding, b.speeding);
  add("route_deviation", a.route_deviation, b.route_deviation);
  add("timeout", a.timeout, b.timeout);
  return out;
}

}  // namespace

std::vector<RowDelta> compare(const BenchmarkReport& a, const BenchmarkReport& b) {
  if (a.rows.size() != b.rows.size()) throw ShapeError("reports have different row counts");
  std::vector<RowDelta> out;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const VariantReport& ra = a.rows[i];
    const VariantReport& rb = b.rows[i];
    if (ra.label != rb.label) {
      throw ShapeError("row " + std::to_string(i) + " label mismatch: '" + ra.label + "' vs '" +
                       rb.label + "'");
    }
    if (ra.per_track.size() != rb.per_track.size()) {
      throw ShapeError("row '" + ra.label + "' covers different tracks");
    }
    for (std::size_t t = 0; t < ra.per_track.size(); ++t) {
      if (ra.per_track[t].first != rb.per_track[t].first) {
        throw ShapeError("row '" + ra.label + "' covers different tracks");
      }
      out.push_back({ra.label, ra.per_track[t].first,
                     metric_deltas(ra.per_track[t].second, rb.per_track[t].second)});
    }
    out.push_back({ra.label, std::nullopt, metric_deltas(ra.overall, rb.overall)});
  }
  return out;
}

}  // namespace tls_assist
