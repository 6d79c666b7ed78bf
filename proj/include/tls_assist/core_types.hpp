#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tls_assist {

// -----------------------------
// Errors
// -----------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Construction-time invariant violated (bad box, out-of-range confidence, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad configuration value or document. `key()` is the dotted path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)), detail_(what) {}
  [[nodiscard]] const std::string& key() const noexcept { return key_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

// Frame indices must be strictly increasing within one stream.
class OrderError : public Error {
 public:
  using Error::Error;
};

// -----------------------------
// Class vocabularies
// -----------------------------

enum class LightClass : std::uint8_t { red, yellow, green, off };
enum class SignClass : std::uint8_t {
  stop,
  yield,
  speed_limit_30,
  speed_limit_60,
  speed_limit_90,
  off
};
// Candidate set of temporal state validation. Detected "off" lights map to no_detection.
enum class LightState : std::uint8_t { red, yellow, green, no_detection };
enum class ViewId : std::uint8_t { front_left, front_center, front_right };
enum class FrameTag : std::uint8_t { view, panorama, crop };

inline constexpr std::array<LightClass, 4> kAllLightClasses = {
    LightClass::red, LightClass::yellow, LightClass::green, LightClass::off};
inline constexpr std::array<SignClass, 6> kAllSignClasses = {
    SignClass::stop,           SignClass::yield,          SignClass::speed_limit_30,
    SignClass::speed_limit_60, SignClass::speed_limit_90, SignClass::off};
inline constexpr std::array<LightState, 4> kAllLightStates = {
    LightState::red, LightState::yellow, LightState::green, LightState::no_detection};
// Left-to-right panorama order.
inline constexpr std::array<ViewId, 3> kAllViews = {ViewId::front_left, ViewId::front_center,
                                                    ViewId::front_right};

constexpr std::size_t index_of(LightClass c) noexcept { return static_cast<std::size_t>(c); }
constexpr std::size_t index_of(SignClass s) noexcept { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(LightState s) noexcept { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(ViewId v) noexcept { return static_cast<std::size_t>(v); }

/// Safety priority among detected light classes, lower rank = higher priority
/// (red > yellow > green > off).
constexpr int light_priority_rank(LightClass c) noexcept {
  switch (c) {
    case LightClass::red: return 0;
    case LightClass::yellow: return 1;
    case LightClass::green: return 2;
    case LightClass::off: return 3;
  }
  return 3;
}

/// stop > yield > 30 > 60 > 90 > off.
constexpr int sign_priority_rank(SignClass s) noexcept {
  switch (s) {
    case SignClass::stop: return 0;
    case SignClass::yield: return 1;
    case SignClass::speed_limit_30: return 2;
    case SignClass::speed_limit_60: return 3;
    case SignClass::speed_limit_90: return 4;
    case SignClass::off: return 5;
  }
  return 5;
}

/// State criticality S(c) used by temporal validation. Note yellow < green here,
/// which differs from light_priority_rank.
constexpr int criticality(LightState c) noexcept {
  switch (c) {
    case LightState::red: return 3;
    case LightState::green: return 2;
    case LightState::yellow: return 1;
    case LightState::no_detection: return 0;
  }
  return 0;
}

/// km/h for speed-limit classes, nullopt otherwise.
constexpr std::optional<int> speed_limit_kmh(SignClass s) noexcept {
  switch (s) {
    case SignClass::speed_limit_30: return 30;
    case SignClass::speed_limit_60: return 60;
    case SignClass::speed_limit_90: return 90;
    default: return std::nullopt;
  }
}

std::string_view to_string(LightClass c) noexcept;
std::string_view to_string(SignClass s) noexcept;
std::string_view to_string(LightState s) noexcept;
std::string_view to_string(ViewId v) noexcept;
std::string_view to_string(FrameTag t) noexcept;

std::optional<LightClass> parse_light_class(std::string_view s) noexcept;
std::optional<SignClass> parse_sign_class(std::string_view s) noexcept;
std::optional<LightState> parse_light_state(std::string_view s) noexcept;
std::optional<ViewId> parse_view_id(std::string_view s) noexcept;

// -----------------------------
// Geometry
// -----------------------------

// Continuous pixel coordinates; min corner inclusive.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  FrameTag frame = FrameTag::view;

  // Throws ValidationError unless 0 <= min < max on both axes.
  static BoundingBox make(double x_min, double y_min, double x_max, double y_max,
                          FrameTag frame = FrameTag::view);

  [[nodiscard]] bool is_valid() const noexcept;
  [[nodiscard]] double width() const noexcept { return x_max - x_min; }
  [[nodiscard]] double height() const noexcept { return y_max - y_min; }
  [[nodiscard]] double area() const noexcept { return width() * height(); }

  [[nodiscard]] BoundingBox translated(double dx, double dy, FrameTag to) const noexcept {
    return BoundingBox{x_min + dx, y_min + dy, x_max + dx, y_max + dy, to};
  }

  bool operator==(const BoundingBox&) const = default;
};

/// Area of the overlap of two boxes (0 when disjoint). Frame tags are ignored.
double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;
double intersection_over_union(const BoundingBox& a, const BoundingBox& b) noexcept;

// -----------------------------
// Detections and frames
// -----------------------------

template <class Label>
struct Detection {
  BoundingBox box;
  Label label{};
  double confidence = 0.0;
  ViewId view = ViewId::front_center;

  static Detection make(const BoundingBox& box, Label label, double confidence,
                        ViewId view = ViewId::front_center) {
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
      throw ValidationError("detection confidence outside [0,1]: " + std::to_string(confidence));
    }
    if (!box.is_valid()) throw ValidationError("detection box is not valid");
    return Detection{box, label, confidence, view};
  }

  bool operator==(const Detection&) const = default;
};

using LightDetection = Detection<LightClass>;
using SignDetection = Detection<SignClass>;

struct ImageSize {
  double width = 0.0;
  double height = 0.0;
  bool operator==(const ImageSize&) const = default;
};

// Everything one camera contributed to a frame. The image size is optional on input;
// when absent the view is assumed to conform to the configured layout.
struct ViewFrame {
  ViewId view = ViewId::front_center;
  std::optional<ImageSize> size;
  std::vector<LightDetection> lights;
  std::vector<SignDetection> signs;

  bool operator==(const ViewFrame&) const = default;
};

struct FrameBundle {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;  // seconds
  bool stitch_ok = true;
  std::vector<ViewFrame> views;  // at most one entry per ViewId, kept in panorama order

  [[nodiscard]] const ViewFrame* find(ViewId v) const noexcept;
  [[nodiscard]] ViewFrame& view(ViewId v);  // inserts in panorama order if missing
  [[nodiscard]] std::size_t detection_count() const noexcept;

  bool operator==(const FrameBundle&) const = default;
};

}  // namespace tls_assist
