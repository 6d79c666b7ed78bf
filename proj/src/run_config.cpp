#include "tls_assist/run_config.hpp"

#include <fstream>
#include <sstream>

namespace tls_assist {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string_view to_string(RelevanceBypass b) noexcept {
  return b == RelevanceBypass::highest_priority ? "highest_priority" : "highest_confidence";
}

std::string_view type_name(const ordered_json& j) {
  if (j.is_number_integer()) return "integer";
  if (j.is_number()) return "number";
  return j.type_name();
}

// Overlay `user` onto `base`, which holds the full default document. Types must match the
// defaults; integer fields reject fractional values. Arrays replace wholesale.
void overlay(ordered_json& base, const ordered_json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = join(path, it.key());
    auto slot = base.find(it.key());
    if (slot == base.end()) throw ConfigError(key, "unknown key");
    const ordered_json& value = it.value();
    if (slot->is_object()) {
      overlay(*slot, value, key);
      continue;
    }
    if (key == "pipeline.crop") {
      if (!(value.is_null() ||
            (value.is_array() && value.size() == 2 && value[0].is_number() &&
             value[1].is_number()))) {
        throw ConfigError(key, "expected null or [x, y]");
      }
    } else if (slot->is_number_integer()) {
      if (!value.is_number_integer() ||
          (slot->is_number_unsigned() && !value.is_number_unsigned())) {
        throw ConfigError(key, "expected a non-negative integer, got " + std::string(type_name(value)));
      }
    } else if (slot->is_number()) {
      if (!value.is_number()) throw ConfigError(key, "expected a number");
    } else if (slot->type() != value.type()) {
      throw ConfigError(key, "expected " + std::string(slot->type_name()) + ", got " +
                                 std::string(type_name(value)));
    }
    *slot = value;
  }
}

template <class T>
T get(const ordered_json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(join(path, key), e.what());
  }
}

void require(bool ok, const std::string& key, const char* what) {
  if (!ok) throw ConfigError(key, what);
}

template <std::size_t N>
std::array<std::array<double, N>, N> matrix_from(const ordered_json& j, const std::string& key) {
  std::array<std::array<double, N>, N> m{};
  if (!j.is_array() || j.size() != N) {
    throw ConfigError(key, "expected a " + std::to_string(N) + "x" + std::to_string(N) + " matrix");
  }
  for (std::size_t r = 0; r < N; ++r) {
    if (!j[r].is_array() || j[r].size() != N) {
      throw ConfigError(key, "expected a " + std::to_string(N) + "x" + std::to_string(N) + " matrix");
    }
    for (std::size_t c = 0; c < N; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(key, "matrix entries must be numbers");
      m[r][c] = j[r][c].get<double>();
    }
  }
  return m;
}

template <std::size_t N>
ordered_json matrix_to(const std::array<std::array<double, N>, N>& m) {
  ordered_json out = ordered_json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

}  // namespace

std::string_view to_string(BenchMatrix m) noexcept {
  switch (m) {
    case BenchMatrix::ablation: return "ablation";
    case BenchMatrix::module: return "module";
    case BenchMatrix::both: return "both";
  }
  return "ablation";
}

void RunConfig::finalize() {
  require(view_width > 0.0 && view_height > 0.0, "views", "view dimensions must be positive");
  pipeline.layout = single_view ? ViewLayout::single_view(view_width, view_height)
                                : ViewLayout::multi_view(view_width, view_height);
  harness.sensor.multi_view = !single_view;
  harness.sensor.view_width = view_width;
  harness.sensor.view_height = view_height;
  try {
    pipeline.resolved_crop().check_inside(pipeline.layout);
  } catch (const Error& e) {
    throw ConfigError("pipeline.crop", e.what());
  }

  const auto& a = pipeline.assembly;
  require(a.min_retained_fraction > 0.0 && a.min_retained_fraction <= 1.0,
          "pipeline.min_retained_fraction", "must lie in (0, 1]");
  const auto& tlr = pipeline.tlr;
  require(tlr.confidence_threshold >= 0.0 && tlr.confidence_threshold <= 1.0,
          "pipeline.tlr.confidence_threshold", "must lie in [0, 1]");
  require(tlr.buffer_size >= 1 && tlr.buffer_size <= 64, "pipeline.tlr.buffer_size",
          "must lie in [1, 64]");
  const auto& tsr = pipeline.tsr;
  require(tsr.iou_threshold > 0.0 && tsr.iou_threshold <= 1.0, "pipeline.tsr.iou_threshold",
          "must lie in (0, 1]");
  require(tsr.min_height >= 0.0, "pipeline.tsr.min_height", "must be non-negative");

  harness.noise.validate();
  harness.penalties.validate();
  const auto& ag = harness.agent;
  require(ag.cruise_speed > 0.0, "agent.cruise_speed", "must be positive");
  require(ag.acceleration > 0.0, "agent.acceleration", "must be positive");
  require(ag.comfort_decel > 0.0, "agent.comfort_decel", "must be positive");
  require(ag.max_decel >= ag.comfort_decel, "agent.max_decel", "must be >= comfort_decel");
  require(ag.stop_margin >= 0.0, "agent.stop_margin", "must be non-negative");
  require(ag.reaction_latency_ticks >= 0, "agent.reaction_latency_ticks", "must be non-negative");
  require(ag.stop_hold >= 0.0, "agent.stop_hold", "must be non-negative");
  require(ag.speed_limit_factor > 0.0, "agent.speed_limit_factor", "must be positive");
  const auto& sim = harness.sim;
  require(sim.tick > 0.0, "simulation.tick", "must be positive");
  require(sim.time_budget_base >= 0.0, "simulation.time_budget_base", "must be non-negative");
  require(sim.min_average_speed > 0.0, "simulation.min_average_speed", "must be positive");
  require(sim.speed_tolerance >= 0.0, "simulation.speed_tolerance", "must be non-negative");
  require(sim.speed_grace >= 0.0, "simulation.speed_grace", "must be non-negative");
  require(harness.initial_speed >= 0.0, "simulation.initial_speed", "must be non-negative");
  const auto& sc = harness.scenario;
  require(sc.intersection_spacing > 0.0, "scenario.intersection_spacing", "must be positive");
  require(sc.sign_spacing > 0.0, "scenario.sign_spacing", "must be positive");
  require(sc.visibility_range > 0.0, "scenario.visibility_range", "must be positive");
  require(sc.red_min > 0.0 && sc.red_min <= sc.red_max, "scenario.red_min",
          "must be positive and <= red_max");
  require(sc.green_min > 0.0 && sc.green_min <= sc.green_max, "scenario.green_min",
          "must be positive and <= green_max");
  require(sc.yellow > 0.0, "scenario.yellow", "must be positive");
  require(sc.deviation_prob >= 0.0 && sc.deviation_prob <= 1.0, "scenario.deviation_prob",
          "must lie in [0, 1]");
  require(bench.repetitions >= 1, "bench.repetitions", "must be at least 1");
  require(!bench.tracks.empty(), "bench.tracks", "must name at least one track");
  require(session.max_error_rate >= 0.0 && session.max_error_rate <= 1.0,
          "session.max_error_rate", "must lie in [0, 1]");
  bench.master_seed = seed;
}

RunConfig default_run_config() {
  RunConfig c;
  c.finalize();
  return c;
}

ordered_json to_json(const RunConfig& c) {
  const PipelineConfig& p = c.pipeline;
  ordered_json lights;
  for (LightState s : kAllLightStates) {
    lights[std::string(to_string(s))] = p.templates.raw_lights()[index_of(s)];
  }
  ordered_json signs;
  for (SignClass s : kAllSignClasses) {
    signs[std::string(to_string(s))] = p.templates.raw_signs()[index_of(s)];
  }
  ordered_json tracks = ordered_json::array();
  for (Track t : c.bench.tracks) tracks.push_back(to_string(t));
  const HarnessSetup& h = c.harness;

  ordered_json j;
  j["seed"] = c.seed;
  j["views"] = {{"layout", c.single_view ? "single_view" : "multi_view"},
                {"width", c.view_width},
                {"height", c.view_height}};
  j["pipeline"] = {
      {"crop", p.crop ? ordered_json::array({p.crop->x, p.crop->y}) : ordered_json(nullptr)},
      {"min_retained_fraction", p.assembly.min_retained_fraction},
      {"enable_tlr", p.enable_tlr},
      {"enable_tsr", p.enable_tsr},
      {"tlr",
       {{"confidence_threshold", p.tlr.confidence_threshold},
        {"buffer_size", p.tlr.buffer_size},
        {"enable_rp", p.tlr.enable_rp},
        {"enable_sv", p.tlr.enable_sv},
        {"rp_bypass", to_string(p.tlr.rp_bypass)}}},
      {"tsr",
       {{"iou_threshold", p.tsr.iou_threshold},
        {"min_height", p.tsr.min_height},
        {"enable_dedup", p.tsr.enable_dedup},
        {"enable_size_filter", p.tsr.enable_size_filter}}},
      {"templates", {{"lights", lights}, {"signs", signs}}}};
  j["noise"] = {{"dropout_prob", h.noise.dropout_prob},
                {"misclass_prob", h.noise.misclass_prob},
                {"confidence_jitter_sd", h.noise.confidence_jitter_sd},
                {"duplicate_prob", h.noise.duplicate_prob},
                {"base_confidence", h.noise.base_confidence},
                {"stitch_failure_prob", h.noise.stitch_failure_prob},
                {"light_confusion", matrix_to(h.noise.light_confusion)},
                {"sign_confusion", matrix_to(h.noise.sign_confusion)}};
  j["sensor"] = {{"view_fov_deg", h.sensor.view_fov_deg},
                 {"view_yaw_deg", h.sensor.view_yaw_deg},
                 {"box_scale_k", h.sensor.box_scale_k},
                 {"heads_per_light", h.sensor.heads_per_light},
                 {"head_spacing", h.sensor.head_spacing},
                 {"light_setback", h.sensor.light_setback},
                 {"light_elevation", h.sensor.light_elevation},
                 {"sign_lateral", h.sensor.sign_lateral},
                 {"sign_elevation", h.sensor.sign_elevation}};
  j["scenario"] = {{"intersection_spacing", h.scenario.intersection_spacing},
                   {"sign_spacing", h.scenario.sign_spacing},
                   {"visibility_range", h.scenario.visibility_range},
                   {"red_min", h.scenario.red_min},
                   {"red_max", h.scenario.red_max},
                   {"green_min", h.scenario.green_min},
                   {"green_max", h.scenario.green_max},
                   {"yellow", h.scenario.yellow},
                   {"deviation_prob", h.scenario.deviation_prob}};
  j["agent"] = {{"cruise_speed", h.agent.cruise_speed},
                {"acceleration", h.agent.acceleration},
                {"comfort_decel", h.agent.comfort_decel},
                {"max_decel", h.agent.max_decel},
                {"stop_margin", h.agent.stop_margin},
                {"reaction_latency_ticks", h.agent.reaction_latency_ticks},
                {"stop_hold", h.agent.stop_hold},
                {"speed_limit_factor", h.agent.speed_limit_factor}};
  j["penalties"] = {{"red_light", h.penalties.red_light},
                    {"stop_sign", h.penalties.stop_sign},
                    {"speeding", h.penalties.speeding},
                    {"route_deviation", h.penalties.route_deviation},
                    {"timeout", h.penalties.timeout},
                    {"count_speeding", h.penalties.count_speeding}};
  j["simulation"] = {{"tick", h.sim.tick},
                     {"time_budget_base", h.sim.time_budget_base},
                     {"min_average_speed", h.sim.min_average_speed},
                     {"speed_tolerance", h.sim.speed_tolerance},
                     {"speed_grace", h.sim.speed_grace},
                     {"halt_speed", h.sim.halt_speed},
                     {"stop_zone", h.sim.stop_zone},
                     {"initial_speed", h.initial_speed}};
  j["bench"] = {{"tracks", tracks},
                {"routes_per_track", c.bench.routes_per_track},
                {"repetitions", c.bench.repetitions},
                {"matrix", to_string(c.matrix)}};
  j["session"] = {{"max_error_rate", c.session.max_error_rate},
                  {"min_frames_before_abort", c.session.min_frames_before_abort},
                  {"max_reported_errors", c.session.max_reported_errors}};
  return j;
}

RunConfig parse_run_config(std::string_view text) {
  const ordered_json user = ordered_json::parse(text.begin(), text.end(), nullptr, false);
  if (user.is_discarded()) throw ConfigError("", "config is not valid JSON");
  ordered_json j = to_json(RunConfig{});
  overlay(j, user, "");

  RunConfig c;
  c.seed = get<std::uint64_t>(j, "seed", "");
  const auto& views = j["views"];
  const auto layout = get<std::string>(views, "layout", "views");
  require(layout == "multi_view" || layout == "single_view", "views.layout",
          "expected 'multi_view' or 'single_view'");
  c.single_view = layout == "single_view";
  c.view_width = get<double>(views, "width", "views");
  c.view_height = get<double>(views, "height", "views");

  const auto& p = j["pipeline"];
  PipelineConfig& pc = c.pipeline;
  if (!p["crop"].is_null()) pc.crop = FovCrop{p["crop"][0].get<double>(), p["crop"][1].get<double>()};
  pc.assembly.min_retained_fraction = get<double>(p, "min_retained_fraction", "pipeline");
  pc.enable_tlr = get<bool>(p, "enable_tlr", "pipeline");
  pc.enable_tsr = get<bool>(p, "enable_tsr", "pipeline");
  const auto& tlr = p["tlr"];
  pc.tlr.confidence_threshold = get<double>(tlr, "confidence_threshold", "pipeline.tlr");
  pc.tlr.buffer_size = get<std::size_t>(tlr, "buffer_size", "pipeline.tlr");
  pc.tlr.enable_rp = get<bool>(tlr, "enable_rp", "pipeline.tlr");
  pc.tlr.enable_sv = get<bool>(tlr, "enable_sv", "pipeline.tlr");
  const auto bypass = get<std::string>(tlr, "rp_bypass", "pipeline.tlr");
  require(bypass == "highest_priority" || bypass == "highest_confidence", "pipeline.tlr.rp_bypass",
          "expected 'highest_priority' or 'highest_confidence'");
  pc.tlr.rp_bypass = bypass == "highest_priority" ? RelevanceBypass::highest_priority
                                                  : RelevanceBypass::highest_confidence;
  const auto& tsr = p["tsr"];
  pc.tsr.iou_threshold = get<double>(tsr, "iou_threshold", "pipeline.tsr");
  pc.tsr.min_height = get<double>(tsr, "min_height", "pipeline.tsr");
  pc.tsr.enable_dedup = get<bool>(tsr, "enable_dedup", "pipeline.tsr");
  pc.tsr.enable_size_filter = get<bool>(tsr, "enable_size_filter", "pipeline.tsr");
  MessageTemplates::LightTable lights;
  for (LightState s : kAllLightStates) {
    lights[index_of(s)] =
        get<std::string>(p["templates"]["lights"], to_string(s).data(), "pipeline.templates.lights");
  }
  MessageTemplates::SignTable signs;
  for (SignClass s : kAllSignClasses) {
    signs[index_of(s)] =
        get<std::string>(p["templates"]["signs"], to_string(s).data(), "pipeline.templates.signs");
  }
  try {
    pc.templates = MessageTemplates::make(lights, signs);
  } catch (const ConfigError& e) {
    throw ConfigError("pipeline." + e.key(), e.detail());
  }

  HarnessSetup& h = c.harness;
  const auto& n = j["noise"];
  h.noise.dropout_prob = get<double>(n, "dropout_prob", "noise");
  h.noise.misclass_prob = get<double>(n, "misclass_prob", "noise");
  h.noise.confidence_jitter_sd = get<double>(n, "confidence_jitter_sd", "noise");
  h.noise.duplicate_prob = get<double>(n, "duplicate_prob", "noise");
  h.noise.base_confidence = get<double>(n, "base_confidence", "noise");
  h.noise.stitch_failure_prob = get<double>(n, "stitch_failure_prob", "noise");
  h.noise.light_confusion = matrix_from<4>(n["light_confusion"], "noise.light_confusion");
  h.noise.sign_confusion = matrix_from<6>(n["sign_confusion"], "noise.sign_confusion");

  const auto& s = j["sensor"];
  h.sensor.view_fov_deg = get<double>(s, "view_fov_deg", "sensor");
  h.sensor.view_yaw_deg = get<double>(s, "view_yaw_deg", "sensor");
  h.sensor.box_scale_k = get<double>(s, "box_scale_k", "sensor");
  h.sensor.heads_per_light = get<int>(s, "heads_per_light", "sensor");
  h.sensor.head_spacing = get<double>(s, "head_spacing", "sensor");
  h.sensor.light_setback = get<double>(s, "light_setback", "sensor");
  h.sensor.light_elevation = get<double>(s, "light_elevation", "sensor");
  h.sensor.sign_lateral = get<double>(s, "sign_lateral", "sensor");
  h.sensor.sign_elevation = get<double>(s, "sign_elevation", "sensor");
  require(h.sensor.view_fov_deg > 0.0 && h.sensor.view_fov_deg < 180.0, "sensor.view_fov_deg",
          "must lie in (0, 180)");
  require(h.sensor.box_scale_k > 0.0, "sensor.box_scale_k", "must be positive");
  require(h.sensor.heads_per_light >= 1, "sensor.heads_per_light", "must be at least 1");

  const auto& sc = j["scenario"];
  h.scenario.intersection_spacing = get<double>(sc, "intersection_spacing", "scenario");
  h.scenario.sign_spacing = get<double>(sc, "sign_spacing", "scenario");
  h.scenario.visibility_range = get<double>(sc, "visibility_range", "scenario");
  h.scenario.red_min = get<double>(sc, "red_min", "scenario");
  h.scenario.red_max = get<double>(sc, "red_max", "scenario");
  h.scenario.green_min = get<double>(sc, "green_min", "scenario");
  h.scenario.green_max = get<double>(sc, "green_max", "scenario");
  h.scenario.yellow = get<double>(sc, "yellow", "scenario");
  h.scenario.deviation_prob = get<double>(sc, "deviation_prob", "scenario");

  const auto& ag = j["agent"];
  h.agent.cruise_speed = get<double>(ag, "cruise_speed", "agent");
  h.agent.acceleration = get<double>(ag, "acceleration", "agent");
  h.agent.comfort_decel = get<double>(ag, "comfort_decel", "agent");
  h.agent.max_decel = get<double>(ag, "max_decel", "agent");
  h.agent.stop_margin = get<double>(ag, "stop_margin", "agent");
  h.agent.reaction_latency_ticks = get<int>(ag, "reaction_latency_ticks", "agent");
  h.agent.stop_hold = get<double>(ag, "stop_hold", "agent");
  h.agent.speed_limit_factor = get<double>(ag, "speed_limit_factor", "agent");

  const auto& pen = j["penalties"];
  h.penalties.red_light = get<double>(pen, "red_light", "penalties");
  h.penalties.stop_sign = get<double>(pen, "stop_sign", "penalties");
  h.penalties.speeding = get<double>(pen, "speeding", "penalties");
  h.penalties.route_deviation = get<double>(pen, "route_deviation", "penalties");
  h.penalties.timeout = get<double>(pen, "timeout", "penalties");
  h.penalties.count_speeding = get<bool>(pen, "count_speeding", "penalties");

  const auto& sim = j["simulation"];
  h.sim.tick = get<double>(sim, "tick", "simulation");
  h.sim.time_budget_base = get<double>(sim, "time_budget_base", "simulation");
  h.sim.min_average_speed = get<double>(sim, "min_average_speed", "simulation");
  h.sim.speed_tolerance = get<double>(sim, "speed_tolerance", "simulation");
  h.sim.speed_grace = get<double>(sim, "speed_grace", "simulation");
  h.sim.halt_speed = get<double>(sim, "halt_speed", "simulation");
  h.sim.stop_zone = get<double>(sim, "stop_zone", "simulation");
  h.initial_speed = get<double>(sim, "initial_speed", "simulation");

  const auto& b = j["bench"];
  c.bench.tracks.clear();
  for (std::size_t i = 0; i < b["tracks"].size(); ++i) {
    const auto& t = b["tracks"][i];
    auto track = t.is_string() ? parse_track(t.get<std::string>()) : std::nullopt;
    if (!track) {
      throw ConfigError("bench.tracks[" + std::to_string(i) + "]",
                        "expected 'tiny', 'short' or 'long'");
    }
    c.bench.tracks.push_back(*track);
  }
  c.bench.routes_per_track = get<std::size_t>(b, "routes_per_track", "bench");
  c.bench.repetitions = get<std::size_t>(b, "repetitions", "bench");
  const auto matrix = get<std::string>(b, "matrix", "bench");
  if (matrix == "ablation") {
    c.matrix = BenchMatrix::ablation;
  } else if (matrix == "module") {
    c.matrix = BenchMatrix::module;
  } else if (matrix == "both") {
    c.matrix = BenchMatrix::both;
  } else {
    throw ConfigError("bench.matrix", "expected 'ablation', 'module' or 'both'");
  }

  const auto& ses = j["session"];
  c.session.max_error_rate = get<double>(ses, "max_error_rate", "session");
  c.session.min_frames_before_abort = get<std::size_t>(ses, "min_frames_before_abort", "session");
  c.session.max_reported_errors = get<std::size_t>(ses, "max_reported_errors", "session");

  c.finalize();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::vector<ConfigVariant> bench_variants(const RunConfig& c) {
  std::vector<ConfigVariant> out;
  if (c.matrix != BenchMatrix::module) out = ablation_matrix(c.pipeline);
  if (c.matrix != BenchMatrix::ablation) {
    auto m = module_matrix(c.pipeline);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

}  // namespace tls_assist
