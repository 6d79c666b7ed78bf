#include "tls_assist/tsr_pipeline.hpp"

#include <algorithm>
#include <numeric>

namespace tls_assist {

std::vector<SignDetection> deduplicate(std::span<const SignDetection> dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });

  std::vector<SignDetection> kept;
  kept.reserve(dets.size());
  for (std::size_t i : order) {
    const SignDetection& d = dets[i];
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const SignDetection& k) {
      return k.label == d.label && intersection_over_union(k.box, d.box) >= iou_threshold;
    });
    if (!duplicate) kept.push_back(d);
  }
  return kept;
}

std::vector<SignDetection> filter_small(std::span<const SignDetection> dets, double min_height) {
  std::vector<SignDetection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    if (d.box.height() >= min_height) out.push_back(d);
  }
  return out;
}

PrioritizedSign prioritize(std::span<const SignDetection> dets) noexcept {
  const SignDetection* best = nullptr;
  for (const auto& d : dets) {
    if (d.label == SignClass::off) continue;
    if (best == nullptr) {
      best = &d;
      continue;
    }
    const int rd = sign_priority_rank(d.label);
    const int rb = sign_priority_rank(best->label);
    if (rd != rb) {
      if (rd < rb) best = &d;
    } else if (d.box.area() != best->box.area()) {
      if (d.box.area() > best->box.area()) best = &d;
    } else if (d.confidence > best->confidence) {
      best = &d;
    }
  }
  if (best == nullptr) return PrioritizedSign::none();
  return PrioritizedSign{best->label, best->box, sign_priority_rank(best->label)};
}

PrioritizedSign process_signs(std::span<const SignDetection> dets, const TsrConfig& config) {
  std::vector<SignDetection> work(dets.begin(), dets.end());
  if (config.enable_dedup) work = deduplicate(work, config.iou_threshold);
  if (config.enable_size_filter) work = filter_small(work, config.min_height);
  return prioritize(work);
}

}  // namespace tls_assist
