#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tls_assist/core_types.hpp"
#include "tls_assist/detector_io.hpp"

namespace tls_assist {

// Route-length classes: tiny < 150 m, short 150-500 m, long > 500 m.
enum class Track : std::uint8_t { tiny, short_route, long_route };
inline constexpr std::array<Track, 3> kAllTracks = {Track::tiny, Track::short_route,
                                                    Track::long_route};

std::string_view to_string(Track t) noexcept;  // "tiny", "short", "long"
std::optional<Track> parse_track(std::string_view s) noexcept;
constexpr std::size_t index_of(Track t) noexcept { return static_cast<std::size_t>(t); }

// Periodic red -> green -> yellow cycle. `offset` shifts the cycle start (seconds).
struct PhaseSchedule {
  double red = 10.0;
  double green = 10.0;
  double yellow = 3.0;
  double offset = 0.0;

  [[nodiscard]] double cycle() const noexcept { return red + green + yellow; }
  [[nodiscard]] LightClass at(double t) const noexcept;
  bool operator==(const PhaseSchedule&) const = default;
};

enum class EventKind : std::uint8_t { intersection, sign };

struct ScenarioEvent {
  double position = 0.0;  // metres along the route; stop line for intersections
  EventKind kind = EventKind::intersection;
  PhaseSchedule schedule;            // intersections
  SignClass sign = SignClass::stop;  // signs

  bool operator==(const ScenarioEvent&) const = default;
};

struct Scenario {
  Track track = Track::tiny;
  double route_length = 100.0;
  std::vector<ScenarioEvent> events;  // strictly increasing positions
  double visibility_range = 60.0;
  std::uint64_t seed = 0;
  std::optional<double> deviation_at;  // simulated lateral fault position

  void validate() const;  // throws ValidationError
  bool operator==(const Scenario&) const = default;
};

struct ScenarioParams {
  double intersection_spacing = 80.0;  // mean metres between intersections
  double sign_spacing = 60.0;          // mean metres between signs
  double visibility_range = 60.0;
  double red_min = 8.0, red_max = 14.0;
  double green_min = 8.0, green_max = 14.0;
  double yellow = 3.0;
  double deviation_prob = 0.0;
};

// Deterministic under (track, seed, params). Positions are rounded to centimetres.
Scenario generate_scenario(Track track, std::uint64_t seed, const ScenarioParams& params = {});

std::string serialize_scenario(const Scenario& s);  // pretty-printed JSON document
Scenario parse_scenario(std::string_view text);     // throws ConfigError

// Camera rig and 1-D longitudinal projection model.
struct SensorModel {
  bool multi_view = true;
  double view_width = 1280.0;
  double view_height = 720.0;
  double view_fov_deg = 60.0;   // horizontal, per view
  double view_yaw_deg = 60.0;   // side views are yawed by +-this
  double box_scale_k = 480.0;   // box height = k / distance (px * m)
  int heads_per_light = 2;
  double head_spacing = 3.0;     // lateral metres between light heads
  double light_setback = 12.0;   // heads sit this far past the stop line
  double light_elevation = 2.5;  // metres above the camera
  double light_aspect = 0.4;     // width / height
  double sign_lateral = 4.0;     // metres to the right of the camera
  double sign_elevation = 0.5;
  double sign_aspect = 1.0;
};

struct GroundTruthObject {
  std::size_t event = 0;  // index into Scenario::events
  int head = 0;
  ViewId view = ViewId::front_center;
  BoundingBox box;  // view coordinates, rounded to 2 decimals
  EventKind kind = EventKind::intersection;
  LightClass light = LightClass::off;
  SignClass sign = SignClass::off;
  double distance = 0.0;  // longitudinal metres to the object
};

struct GroundTruthFrame {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  std::vector<GroundTruthObject> objects;
};

/// Box height for an object at `distance` metres.
constexpr double projected_height(double box_scale_k, double distance) noexcept {
  return box_scale_k / distance;
}

// Objects of events still ahead of the ego (stop line / sign post beyond `ego_position`)
// whose distance is within the visibility range and that project into a camera view.
GroundTruthFrame ground_truth_frame(const Scenario& s, const SensorModel& sensor,
                                    double ego_position, double time, std::int64_t frame_index);

struct NoiseModel {
  double dropout_prob = 0.3;
  double misclass_prob = 0.1;
  double confidence_jitter_sd = 0.15;
  double duplicate_prob = 0.05;
  double base_confidence = 0.9;
  double stitch_failure_prob = 0.0;
  // Row = true class, column = reported class, used when a detection is misclassified.
  std::array<std::array<double, 4>, 4> light_confusion = default_light_confusion();
  std::array<std::array<double, 6>, 6> sign_confusion = default_sign_confusion();

  static NoiseModel noiseless();
  // red<->yellow take 60% of the misclassification mass, the rest is spread uniformly.
  static std::array<std::array<double, 4>, 4> default_light_confusion();
  static std::array<std::array<double, 6>, 6> default_sign_confusion();
  void validate() const;  // throws ConfigError
};

// Per-object noise: dropout, confusion-row resampling, confidence drop, duplication. The
// randomness of each object is keyed by (seed, frame, event, head), so the same object in the
// same frame is corrupted identically no matter which other objects are visible.
FrameRecord corrupt(const GroundTruthFrame& gt, const NoiseModel& noise, const SensorModel& sensor,
                    std::uint64_t seed);

struct EgoTrace {
  double tick = 0.1;  // seconds
  std::vector<double> position;
  std::vector<double> speed;
};

EgoTrace constant_speed_trace(const Scenario& s, double speed, double tick);

std::vector<FrameRecord> simulate_stream(const Scenario& s, const EgoTrace& trace,
                                         const SensorModel& sensor, const NoiseModel& noise,
                                         std::uint64_t seed);

}  // namespace tls_assist
