#include "tls_assist/frame_assembly.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace tls_assist {

namespace {

bool fits(const BoundingBox& b, const ImageSize& size) noexcept {
  return b.is_valid() && b.x_max <= size.width && b.y_max <= size.height;
}

// Clip `box` (panorama or view frame) to `window`, re-express it relative to the window
// origin, and apply the retention threshold. Returns false when the detection is dropped.
bool crop_box(const BoundingBox& box, const BoundingBox& window, double min_fraction,
              BoundingBox& out) noexcept {
  const double inter = intersection_area(box, window);
  if (inter <= 0.0 || inter < min_fraction * box.area()) return false;
  out = BoundingBox{std::max(box.x_min, window.x_min) - window.x_min,
                    std::max(box.y_min, window.y_min) - window.y_min,
                    std::min(box.x_max, window.x_max) - window.x_min,
                    std::min(box.y_max, window.y_max) - window.y_min, FrameTag::crop};
  return out.is_valid();
}

template <class Label>
void crop_into(std::span<const Detection<Label>> in, double dx, double dy,
               const BoundingBox& window, double min_fraction, const ImageSize& view_size,
               std::vector<Detection<Label>>& out, std::size_t& rejected) {
  for (const auto& d : in) {
    if (!fits(d.box, view_size)) {
      ++rejected;
      continue;
    }
    Detection<Label> c = d;
    if (crop_box(d.box.translated(dx, dy, FrameTag::panorama), window, min_fraction, c.box)) {
      out.push_back(c);
    }
  }
}

}  // namespace

ViewLayout ViewLayout::concatenate(std::span<const std::pair<ViewId, ImageSize>> views) {
  ViewLayout layout;
  double offset = 0.0;
  int last = -1;
  bool has_center = false;
  for (const auto& [id, size] : views) {
    const int idx = static_cast<int>(index_of(id));
    if (idx <= last) throw AssemblyError("layout views must be unique and in panorama order");
    if (!(size.width > 0.0 && size.height > 0.0)) {
      throw AssemblyError("layout view " + std::string(to_string(id)) + " has empty size");
    }
    last = idx;
    has_center = has_center || id == ViewId::front_center;
    layout.views_.push_back(ViewSpec{id, size, offset});
    offset += size.width;
  }
  if (!has_center) throw AssemblyError("layout must contain front_center");
  return layout;
}

ViewLayout ViewLayout::multi_view(double view_width, double view_height) {
  const ImageSize s{view_width, view_height};
  const std::array<std::pair<ViewId, ImageSize>, 3> views = {
      std::pair{ViewId::front_left, s}, std::pair{ViewId::front_center, s},
      std::pair{ViewId::front_right, s}};
  return concatenate(views);
}

ViewLayout ViewLayout::single_view(double view_width, double view_height) {
  const std::array<std::pair<ViewId, ImageSize>, 1> views = {
      std::pair{ViewId::front_center, ImageSize{view_width, view_height}}};
  return concatenate(views);
}

const ViewSpec* ViewLayout::find(ViewId v) const noexcept {
  for (const auto& s : views_) {
    if (s.id == v) return &s;
  }
  return nullptr;
}

double ViewLayout::panorama_width() const noexcept {
  if (views_.empty()) return 0.0;
  return views_.back().offset + views_.back().size.width;
}

double ViewLayout::panorama_height() const noexcept {
  double h = 0.0;
  for (const auto& s : views_) h = std::max(h, s.size.height);
  return h;
}

FovCrop FovCrop::centered_on_front(const ViewLayout& layout) {
  const ViewSpec* fc = layout.find(ViewId::front_center);
  if (fc == nullptr) throw AssemblyError("layout has no front_center view");
  const double max_x = std::max(0.0, layout.panorama_width() - kWidth);
  const double max_y = std::max(0.0, layout.panorama_height() - kHeight);
  FovCrop crop;
  crop.x = std::clamp(fc->offset + (fc->size.width - kWidth) / 2.0, 0.0, max_x);
  crop.y = std::clamp((fc->size.height - kHeight) / 2.0, 0.0, max_y);
  return crop;
}

void FovCrop::check_inside(const ViewLayout& layout) const {
  if (!(x >= 0.0 && y >= 0.0 && x + kWidth <= layout.panorama_width() &&
        y + kHeight <= layout.panorama_height())) {
    throw AssemblyError("crop window at (" + std::to_string(x) + ", " + std::to_string(y) +
                        ") does not fit inside the panorama");
  }
}

ViewCheck validate_views(const FrameBundle& bundle, const ViewLayout& layout) {
  if (bundle.find(ViewId::front_center) == nullptr) {
    throw AssemblyError("frame " + std::to_string(bundle.frame_index) +
                        " has no front_center view; fallback impossible");
  }
  if (!bundle.stitch_ok) return ViewCheck::stitch_failure;
  std::size_t matched = 0;
  for (const auto& vf : bundle.views) {
    const ViewSpec* spec = layout.find(vf.view);
    if (spec == nullptr) return ViewCheck::stitch_failure;
    if (vf.size && *vf.size != spec->size) return ViewCheck::stitch_failure;
    ++matched;
  }
  return matched == layout.views().size() ? ViewCheck::ok : ViewCheck::stitch_failure;
}

template <class Label>
Detection<Label> remap_to_panorama(const Detection<Label>& d, const ViewLayout& layout) {
  const ViewSpec* spec = layout.find(d.view);
  if (spec == nullptr) {
    throw AssemblyError("view " + std::string(to_string(d.view)) + " is not in the layout");
  }
  if (!fits(d.box, spec->size)) {
    throw AssemblyError("box [" + std::to_string(d.box.x_min) + ", " + std::to_string(d.box.y_min) +
                        ", " + std::to_string(d.box.x_max) + ", " + std::to_string(d.box.y_max) +
                        "] exceeds " + std::string(to_string(d.view)) + " bounds");
  }
  Detection<Label> out = d;
  out.box = d.box.translated(spec->offset, 0.0, FrameTag::panorama);
  return out;
}

template LightDetection remap_to_panorama(const LightDetection&, const ViewLayout&);
template SignDetection remap_to_panorama(const SignDetection&, const ViewLayout&);

AssembledFrame assemble(const FrameBundle& bundle, const ViewLayout& layout, const FovCrop& crop,
                        const AssemblyConfig& config) {
  AssembledFrame out;
  out.frame_index = bundle.frame_index;
  out.timestamp = bundle.timestamp;
  const double keep = config.min_retained_fraction;

  if (validate_views(bundle, layout) == ViewCheck::ok) {
    const BoundingBox window = crop.rect();
    for (const auto& vf : bundle.views) {
      const ViewSpec* spec = layout.find(vf.view);
      crop_into<LightClass>(vf.lights, spec->offset, 0.0, window, keep, spec->size, out.lights,
                            out.rejected);
      crop_into<SignClass>(vf.signs, spec->offset, 0.0, window, keep, spec->size, out.signs,
                           out.rejected);
    }
    return out;
  }

  // Fallback: the front-center image alone, processed in its own frame.
  out.degraded = true;
  const ViewFrame& fc = *bundle.find(ViewId::front_center);
  ImageSize fc_size{FovCrop::kWidth, FovCrop::kHeight};
  if (fc.size) {
    fc_size = *fc.size;
  } else if (const ViewSpec* spec = layout.find(ViewId::front_center)) {
    fc_size = spec->size;
  }
  const BoundingBox window{0.0, 0.0, FovCrop::kWidth, FovCrop::kHeight, FrameTag::view};
  crop_into<LightClass>(fc.lights, 0.0, 0.0, window, keep, fc_size, out.lights, out.rejected);
  crop_into<SignClass>(fc.signs, 0.0, 0.0, window, keep, fc_size, out.signs, out.rejected);
  return out;
}

}  // namespace tls_assist
