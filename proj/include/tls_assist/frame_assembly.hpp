#pragma once

#include <span>
#include <vector>

#include "tls_assist/core_types.hpp"

namespace tls_assist {

class AssemblyError : public Error {
 public:
  using Error::Error;
};

struct ViewSpec {
  ViewId id = ViewId::front_center;
  ImageSize size;
  double offset = 0.0;  // left edge in panorama coordinates
};

// Non-overlapping left-to-right concatenation of camera frames.
class ViewLayout {
 public:
  ViewLayout() = default;

  // Views must be listed in panorama order (front_left, front_center, front_right),
  // each at most once, and must include front_center. Offsets are derived.
  static ViewLayout concatenate(std::span<const std::pair<ViewId, ImageSize>> views);
  static ViewLayout multi_view(double view_width = 1280.0, double view_height = 720.0);
  static ViewLayout single_view(double view_width = 1280.0, double view_height = 720.0);

  [[nodiscard]] const ViewSpec* find(ViewId v) const noexcept;
  [[nodiscard]] std::span<const ViewSpec> views() const noexcept { return views_; }
  [[nodiscard]] double panorama_width() const noexcept;
  [[nodiscard]] double panorama_height() const noexcept;
  [[nodiscard]] bool is_single_view() const noexcept { return views_.size() == 1; }

 private:
  std::vector<ViewSpec> views_;
};

// Fixed 1280x720 processing window, anchored by its top-left corner in panorama coordinates.
struct FovCrop {
  static constexpr double kWidth = 1280.0;
  static constexpr double kHeight = 720.0;

  double x = 0.0;
  double y = 0.0;

  // Centered on the front-center view, clamped into the panorama.
  static FovCrop centered_on_front(const ViewLayout& layout);

  [[nodiscard]] BoundingBox rect() const noexcept {
    return BoundingBox{x, y, x + kWidth, y + kHeight, FrameTag::panorama};
  }
  // Throws AssemblyError when the window leaves the panorama.
  void check_inside(const ViewLayout& layout) const;
};

struct AssemblyConfig {
  // A detection survives the crop when (area inside crop) / (own area) >= this.
  double min_retained_fraction = 0.5;
};

struct AssembledFrame {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  std::vector<LightDetection> lights;  // crop coordinates
  std::vector<SignDetection> signs;    // crop coordinates
  bool degraded = false;               // front-center fallback taken
  std::size_t rejected = 0;            // boxes outside their own view bounds
};

enum class ViewCheck { ok, stitch_failure };

/// Decide whether the bundle can be stitched under `layout`. Views whose declared size differs
/// from the layout, views the layout does not know, missing layout views, or an upstream
/// stitch_ok=false all yield stitch_failure. A bundle without a front-center view cannot fall
/// back and throws AssemblyError.
ViewCheck validate_views(const FrameBundle& bundle, const ViewLayout& layout);

// Translates a view-frame detection into panorama coordinates.
// Throws AssemblyError when the view is not in the layout or the box exceeds the view.
template <class Label>
Detection<Label> remap_to_panorama(const Detection<Label>& d, const ViewLayout& layout);

AssembledFrame assemble(const FrameBundle& bundle, const ViewLayout& layout, const FovCrop& crop,
                        const AssemblyConfig& config = {});

}  // namespace tls_assist
