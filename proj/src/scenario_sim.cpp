#include "tls_assist/scenario_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "tls_assist/rng.hpp"

namespace tls_assist {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kScenarioSalt = 0x5C3A'0001;
constexpr std::uint64_t kStitchSalt = 0x5C3A'0002;

double deg2rad(double d) noexcept { return d * std::numbers::pi / 180.0; }

struct TrackRange {
  double lo;
  double hi;
};

TrackRange range_of(Track t) noexcept {
  switch (t) {
    case Track::tiny: return {60.0, 149.0};
    case Track::short_route: return {150.0, 500.0};
    case Track::long_route: return {520.0, 1000.0};
  }
  return {60.0, 149.0};
}

double yaw_of(ViewId v, const SensorModel& s) noexcept {
  switch (v) {
    case ViewId::front_left: return -deg2rad(s.view_yaw_deg);
    case ViewId::front_center: return 0.0;
    case ViewId::front_right: return deg2rad(s.view_yaw_deg);
  }
  return 0.0;
}

// Project a point (metres: forward, right, up relative to the camera) into the first view
// that sees it. Box height follows k / forward distance.
std::optional<std::pair<ViewId, BoundingBox>> project(const SensorModel& s, double forward,
                                                      double right, double up, double aspect) {
  const double tan_half = std::tan(deg2rad(s.view_fov_deg) / 2.0);
  const double focal = (s.view_width / 2.0) / tan_half;
  const double h = projected_height(s.box_scale_k, forward);
  const double w = aspect * h;
  for (ViewId v : kAllViews) {
    if (!s.multi_view && v != ViewId::front_center) continue;
    const double psi = yaw_of(v, s);
    const double fc = forward * std::cos(psi) + right * std::sin(psi);
    const double rc = -forward * std::sin(psi) + right * std::cos(psi);
    if (fc <= 0.0 || std::abs(rc / fc) > tan_half) continue;
    const double u = s.view_width / 2.0 + focal * rc / fc;
    const double vp = s.view_height / 2.0 - focal * up / fc;
    const BoundingBox full{u - w / 2.0, vp - h / 2.0, u + w / 2.0, vp + h / 2.0, FrameTag::view};
    const BoundingBox frame{0.0, 0.0, s.view_width, s.view_height, FrameTag::view};
    const double inside = intersection_area(full, frame);
    if (inside < 0.5 * full.area()) return std::nullopt;
    BoundingBox b{round_to(std::max(full.x_min, 0.0), 2), round_to(std::max(full.y_min, 0.0), 2),
                  round_to(std::min(full.x_max, s.view_width), 2),
                  round_to(std::min(full.y_max, s.view_height), 2), FrameTag::view};
    if (!b.is_valid()) return std::nullopt;
    return std::pair{v, b};
  }
  return std::nullopt;
}

template <std::size_t N>
std::size_t sample_row(const std::array<double, N>& row, double u) noexcept {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (row[i] <= 0.0) continue;
    acc += row[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

template <std::size_t N>
void check_matrix(const std::array<std::array<double, N>, N>& m, const char* key) {
  for (std::size_t r = 0; r < N; ++r) {
    double sum = 0.0;
    for (double p : m[r]) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(key, "entries must lie in [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError(key, "row " + std::to_string(r) + " does not sum to 1");
    }
  }
}

void check_prob(double p, const char* key) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
}

}  // namespace

std::string_view to_string(Track t) noexcept {
  switch (t) {
    case Track::tiny: return "tiny";
    case Track::short_route: return "short";
    case Track::long_route: return "long";
  }
  return "tiny";
}

std::optional<Track> parse_track(std::string_view s) noexcept {
  for (Track t : kAllTracks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

LightClass PhaseSchedule::at(double t) const noexcept {
  const double c = cycle();
  double phase = std::fmod(t + offset, c);
  if (phase < 0.0) phase += c;
  if (phase < red) return LightClass::red;
  if (phase < red + green) return LightClass::green;
  return LightClass::yellow;
}

void Scenario::validate() const {
  if (!(route_length > 0.0)) throw ValidationError("route length must be positive");
  if (!(visibility_range > 0.0)) throw ValidationError("visibility range must be positive");
  double last = -1.0;
  for (const auto& e : events) {
    if (!(e.position >= 0.0 && e.position <= route_length)) {
      throw ValidationError("event position outside the route");
    }
    if (!(e.position > last)) throw ValidationError("event positions must strictly increase");
    last = e.position;
    if (e.kind == EventKind::intersection) {
      const auto& p = e.schedule;
      if (!(p.red > 0.0 && p.green > 0.0 && p.yellow > 0.0)) {
        throw ValidationError("phase durations must be positive");
      }
    } else if (e.sign == SignClass::off) {
      throw ValidationError("sign events need a concrete sign class");
    }
  }
  if (deviation_at && !(*deviation_at >= 0.0 && *deviation_at <= route_length)) {
    throw ValidationError("deviation position outside the route");
  }
}

Scenario generate_scenario(Track track, std::uint64_t seed, const ScenarioParams& params) {
  Rng rng(derive_seed({seed, kScenarioSalt, index_of(track)}));
  Scenario s;
  s.track = track;
  s.seed = seed;
  s.visibility_range = params.visibility_range;
  const TrackRange range = range_of(track);
  s.route_length = round_to(rng.uniform(range.lo, range.hi), 2);

  // Intersections far enough apart that only one is in view at a time.
  const double min_gap = std::max(0.8 * params.intersection_spacing, 50.0);
  const double max_gap = std::max(1.2 * params.intersection_spacing, min_gap);
  std::vector<ScenarioEvent> lights;
  for (double pos = rng.uniform(40.0, 70.0); pos <= s.route_length - 15.0;
       pos += rng.uniform(min_gap, max_gap)) {
    ScenarioEvent e;
    e.position = round_to(pos, 2);
    e.kind = EventKind::intersection;
    e.schedule.red = round_to(rng.uniform(params.red_min, params.red_max), 2);
    e.schedule.green = round_to(rng.uniform(params.green_min, params.green_max), 2);
    e.schedule.yellow = params.yellow;
    e.schedule.offset = round_to(rng.uniform(0.0, e.schedule.cycle()), 2);
    lights.push_back(e);
  }

  // Signs at least 40 m apart (so each is seen alone) and 20 m from any stop line.
  constexpr std::array<SignClass, 5> kinds = {SignClass::stop, SignClass::yield,
                                              SignClass::speed_limit_30, SignClass::speed_limit_60,
                                              SignClass::speed_limit_90};
  const double sign_min = std::max(0.7 * params.sign_spacing, 40.0);
  const double sign_max = std::max(1.3 * params.sign_spacing, sign_min);
  std::vector<ScenarioEvent> signs;
  double pos = rng.uniform(30.0, 60.0);
  while (true) {
    for (const auto& l : lights) {
      if (std::abs(pos - l.position) < 20.0) pos = l.position + 20.0;
    }
    if (pos > s.route_length - 10.0) break;
    ScenarioEvent e;
    e.position = round_to(pos, 2);
    e.kind = EventKind::sign;
    e.sign = kinds[static_cast<std::size_t>(rng.uniform() * kinds.size()) % kinds.size()];
    signs.push_back(e);
    pos += rng.uniform(sign_min, sign_max);
  }

  std::merge(lights.begin(), lights.end(), signs.begin(), signs.end(),
             std::back_inserter(s.events),
             [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.position < b.position; });
  if (rng.bernoulli(params.deviation_prob)) {
    s.deviation_at = round_to(rng.uniform(0.2, 0.9) * s.route_length, 2);
  }
  s.validate();
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  ordered_json j;
  j["track"] = to_string(s.track);
  j["route_length"] = s.route_length;
  j["visibility_range"] = s.visibility_range;
  j["seed"] = s.seed;
  j["deviation_at"] = s.deviation_at ? ordered_json(*s.deviation_at) : ordered_json(nullptr);
  ordered_json events = ordered_json::array();
  for (const auto& e : s.events) {
    ordered_json ev;
    ev["position"] = e.position;
    if (e.kind == EventKind::intersection) {
      ev["kind"] = "intersection";
      ev["schedule"] = {{"red", e.schedule.red},
                        {"green", e.schedule.green},
                        {"yellow", e.schedule.yellow},
                        {"offset", e.schedule.offset}};
    } else {
      ev["kind"] = "sign";
      ev["sign"] = to_string(e.sign);
    }
    events.push_back(std::move(ev));
  }
  j["events"] = std::move(events);
  return j.dump(2);
}

Scenario parse_scenario(std::string_view text) {
  const json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("", "scenario is not a JSON object");
  auto num = [](const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) throw ConfigError(path + key, "expected a number");
    return it->get<double>();
  };
  Scenario s;
  try {
    auto track = parse_track(j.at("track").get<std::string>());
    if (!track) throw ConfigError("track", "unknown track");
    s.track = *track;
    s.route_length = num(j, "route_length", "");
    s.visibility_range = num(j, "visibility_range", "");
    s.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("deviation_at").is_null()) s.deviation_at = num(j, "deviation_at", "");
    const json& events = j.at("events");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const json& ev = events.at(i);
      const std::string path = "events[" + std::to_string(i) + "].";
      ScenarioEvent e;
      e.position = num(ev, "position", path);
      const std::string kind = ev.at("kind").get<std::string>();
      if (kind == "intersection") {
        e.kind = EventKind::intersection;
        const json& sch = ev.at("schedule");
        e.schedule = PhaseSchedule{num(sch, "red", path + "schedule."),
                                   num(sch, "green", path + "schedule."),
                                   num(sch, "yellow", path + "schedule."),
                                   num(sch, "offset", path + "schedule.")};
      } else if (kind == "sign") {
        e.kind = EventKind::sign;
        auto sign = parse_sign_class(ev.at("sign").get<std::string>());
        if (!sign) throw ConfigError(path + "sign", "unknown sign class");
        e.sign = *sign;
      } else {
        throw ConfigError(path + "kind", "expected 'intersection' or 'sign'");
      }
      s.events.push_back(e);
    }
    s.validate();
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("malformed scenario: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError("", e.what());
  }
  return s;
}

GroundTruthFrame ground_truth_frame(const Scenario& s, const SensorModel& sensor,
                                    double ego_position, double time, std::int64_t frame_index) {
  GroundTruthFrame gt;
  gt.frame_index = frame_index;
  gt.timestamp = time;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const ScenarioEvent& e = s.events[i];
    if (e.position <= ego_position) continue;
    if (e.kind == EventKind::intersection) {
      const double d = e.position + sensor.light_setback - ego_position;
      if (d > s.visibility_range) continue;
      const LightClass state = e.schedule.at(time);
      for (int h = 0; h < sensor.heads_per_light; ++h) {
        const double lateral = (h - (sensor.heads_per_light - 1) / 2.0) * sensor.head_spacing;
        auto p = project(sensor, d, lateral, sensor.light_elevation, sensor.light_aspect);
        if (!p) continue;
        GroundTruthObject o;
        o.event = i;
        o.head = h;
        o.view = p->first;
        o.box = p->second;
        o.kind = EventKind::intersection;
        o.light = state;
        o.distance = d;
        gt.objects.push_back(o);
      }
    } else {
      const double d = e.position - ego_position;
      if (d > s.visibility_range) continue;
      auto p = project(sensor, d, sensor.sign_lateral, sensor.sign_elevation, sensor.sign_aspect);
      if (!p) continue;
      GroundTruthObject o;
      o.event = i;
      o.view = p->first;
      o.box = p->second;
      o.kind = EventKind::sign;
      o.sign = e.sign;
      o.distance = d;
      gt.objects.push_back(o);
    }
  }
  return gt;
}

NoiseModel NoiseModel::noiseless() {
  NoiseModel n;
  n.dropout_prob = 0.0;
  n.misclass_prob = 0.0;
  n.confidence_jitter_sd = 0.0;
  n.duplicate_prob = 0.0;
  n.stitch_failure_prob = 0.0;
  return n;
}

std::array<std::array<double, 4>, 4> NoiseModel::default_light_confusion() {
  constexpr double third = 1.0 / 3.0;
  // columns: red, yellow, green, off
  return {{{0.0, 0.6, 0.2, 0.2},
           {0.6, 0.0, 0.2, 0.2},
           {third, third, 0.0, third},
           {third, third, third, 0.0}}};
}

std::array<std::array<double, 6>, 6> NoiseModel::default_sign_confusion() {
  std::array<std::array<double, 6>, 6> m{};
  for (std::size_t r = 0; r < 6; ++r) {
    const bool off_row = r == index_of(SignClass::off);
    const double p = off_row ? 1.0 / 5.0 : 1.0 / 4.0;
    for (std::size_t c = 0; c < 5; ++c) {
      if (c != r) m[r][c] = p;
    }
  }
  return m;
}

void NoiseModel::validate() const {
  check_prob(dropout_prob, "noise.dropout_prob");
  check_prob(misclass_prob, "noise.misclass_prob");
  check_prob(duplicate_prob, "noise.duplicate_prob");
  check_prob(base_confidence, "noise.base_confidence");
  check_prob(stitch_failure_prob, "noise.stitch_failure_prob");
  if (!(confidence_jitter_sd >= 0.0)) {
    throw ConfigError("noise.confidence_jitter_sd", "must be non-negative");
  }
  check_matrix(light_confusion, "noise.light_confusion");
  check_matrix(sign_confusion, "noise.sign_confusion");
}

FrameRecord corrupt(const GroundTruthFrame& gt, const NoiseModel& noise, const SensorModel& sensor,
                    std::uint64_t seed) {
  FrameRecord rec;
  rec.frame.frame_index = gt.frame_index;
  rec.frame.timestamp = gt.timestamp;
  const auto frame_key = static_cast<std::uint64_t>(gt.frame_index);
  rec.frame.stitch_ok =
      !Rng(derive_seed({seed, frame_key, kStitchSalt})).bernoulli(noise.stitch_failure_prob);
  const ImageSize size{sensor.view_width, sensor.view_height};
  for (ViewId v : kAllViews) {
    if (!sensor.multi_view && v != ViewId::front_center) continue;
    rec.frame.view(v).size = size;
  }

  auto confidence = [&](double z) {
    return round_to(std::clamp(noise.base_confidence - std::abs(noise.confidence_jitter_sd * z),
                               0.0, 1.0),
                    4);
  };

  for (const auto& obj : gt.objects) {
    Rng rng(derive_seed({seed, frame_key, obj.event, static_cast<std::uint64_t>(obj.head)}));
    // Fixed draw order so each decision is independent of the probabilities in use.
    const double u_drop = rng.uniform();
    const double u_mis = rng.uniform();
    const double u_class = rng.uniform();
    const double z_conf = rng.normal();
    const double u_dup = rng.uniform();
    const double z_dup = rng.normal();
    const double u_shift = rng.uniform();
    if (u_drop < noise.dropout_prob) continue;

    ViewFrame& vf = rec.frame.view(obj.view);
    BoundingBox dup_box = obj.box;
    const double shift = round_to((u_shift - 0.5) * 0.2 * obj.box.width(), 2);
    dup_box.x_min = round_to(std::clamp(obj.box.x_min + shift, 0.0, sensor.view_width), 2);
    dup_box.x_max = round_to(std::clamp(obj.box.x_max + shift, 0.0, sensor.view_width), 2);
    const bool duplicate = u_dup < noise.duplicate_prob && dup_box.is_valid();

    if (obj.kind == EventKind::intersection) {
      LightClass c = obj.light;
      if (u_mis < noise.misclass_prob) {
        c = kAllLightClasses[sample_row(noise.light_confusion[index_of(c)], u_class)];
      }
      vf.lights.push_back(LightDetection{obj.box, c, confidence(z_conf), obj.view});
      if (duplicate) vf.lights.push_back(LightDetection{dup_box, c, confidence(z_dup), obj.view});
    } else {
      SignClass c = obj.sign;
      if (u_mis < noise.misclass_prob) {
        c = kAllSignClasses[sample_row(noise.sign_confusion[index_of(c)], u_class)];
      }
      vf.signs.push_back(SignDetection{obj.box, c, confidence(z_conf), obj.view});
      if (duplicate) vf.signs.push_back(SignDetection{dup_box, c, confidence(z_dup), obj.view});
    }
  }
  return rec;
}

EgoTrace constant_speed_trace(const Scenario& s, double speed, double tick) {
  if (!(speed > 0.0 && tick > 0.0)) throw ValidationError("speed and tick must be positive");
  EgoTrace trace;
  trace.tick = tick;
  for (std::size_t i = 0;; ++i) {
    const double x = static_cast<double>(i) * speed * tick;
    if (x > s.route_length) break;
    trace.position.push_back(x);
    trace.speed.push_back(speed);
  }
  return trace;
}

std::vector<FrameRecord> simulate_stream(const Scenario& s, const EgoTrace& trace,
                                         const SensorModel& sensor, const NoiseModel& noise,
                                         std::uint64_t seed) {
  std::vector<FrameRecord> out;
  out.reserve(trace.position.size());
  for (std::size_t i = 0; i < trace.position.size(); ++i) {
    const auto index = static_cast<std::int64_t>(i);
    const double t = round_to(static_cast<double>(i) * trace.tick, 6);
    out.push_back(
        corrupt(ground_truth_frame(s, sensor, trace.position[i], t, index), noise, sensor, seed));
  }
  return out;
}

}  // namespace tls_assist
