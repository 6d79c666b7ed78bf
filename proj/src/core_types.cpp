#include "tls_assist/core_types.hpp"

#include <algorithm>

namespace tls_assist {

namespace {

template <class Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view s, const std::array<Enum, N>& values) noexcept {
  for (Enum v : values) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(LightClass c) noexcept {
  switch (c) {
    case LightClass::red: return "red";
    case LightClass::yellow: return "yellow";
    case LightClass::green: return "green";
    case LightClass::off: return "off";
  }
  return "off";
}

std::string_view to_string(SignClass s) noexcept {
  switch (s) {
    case SignClass::stop: return "stop";
    case SignClass::yield: return "yield";
    case SignClass::speed_limit_30: return "speed_limit_30";
    case SignClass::speed_limit_60: return "speed_limit_60";
    case SignClass::speed_limit_90: return "speed_limit_90";
    case SignClass::off: return "off";
  }
  return "off";
}

std::string_view to_string(LightState s) noexcept {
  switch (s) {
    case LightState::red: return "red";
    case LightState::yellow: return "yellow";
    case LightState::green: return "green";
    case LightState::no_detection: return "no_detection";
  }
  return "no_detection";
}

std::string_view to_string(ViewId v) noexcept {
  switch (v) {
    case ViewId::front_left: return "front_left";
    case ViewId::front_center: return "front_center";
    case ViewId::front_right: return "front_right";
  }
  return "front_center";
}

std::string_view to_string(FrameTag t) noexcept {
  switch (t) {
    case FrameTag::view: return "view";
    case FrameTag::panorama: return "panorama";
    case FrameTag::crop: return "crop";
  }
  return "view";
}

std::optional<LightClass> parse_light_class(std::string_view s) noexcept {
  return lookup(s, kAllLightClasses);
}
std::optional<SignClass> parse_sign_class(std::string_view s) noexcept {
  return lookup(s, kAllSignClasses);
}
std::optional<LightState> parse_light_state(std::string_view s) noexcept {
  return lookup(s, kAllLightStates);
}
std::optional<ViewId> parse_view_id(std::string_view s) noexcept { return lookup(s, kAllViews); }

BoundingBox BoundingBox::make(double x_min, double y_min, double x_max, double y_max,
                              FrameTag frame) {
  BoundingBox b{x_min, y_min, x_max, y_max, frame};
  if (!b.is_valid()) {
    throw ValidationError("invalid bounding box [" + std::to_string(x_min) + ", " +
                          std::to_string(y_min) + ", " + std::to_string(x_max) + ", " +
                          std::to_string(y_max) + "]");
  }
  return b;
}

bool BoundingBox::is_valid() const noexcept {
  // Negated comparisons also reject NaN.
  return x_min >= 0.0 && y_min >= 0.0 && x_min < x_max && y_min < y_max;
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double intersection_over_union(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

const ViewFrame* FrameBundle::find(ViewId v) const noexcept {
  for (const auto& vf : views) {
    if (vf.view == v) return &vf;
  }
  return nullptr;
}

ViewFrame& FrameBundle::view(ViewId v) {
  auto it = std::find_if(views.begin(), views.end(),
                         [v](const ViewFrame& vf) { return index_of(vf.view) >= index_of(v); });
  if (it != views.end() && it->view == v) return *it;
  ViewFrame vf;
  vf.view = v;
  return *views.insert(it, std::move(vf));
}

std::size_t FrameBundle::detection_count() const noexcept {
  std::size_t n = 0;
  for (const auto& vf : views) n += vf.lights.size() + vf.signs.size();
  return n;
}

}  // namespace tls_assist
