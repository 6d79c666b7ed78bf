#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tls_assist/core_types.hpp"
#include "tls_assist/frame_assembly.hpp"

namespace tls_assist {

struct PrioritizedSign {
  SignClass sign = SignClass::off;
  std::optional<BoundingBox> source_box;  // absent iff sign == off
  int rank = sign_priority_rank(SignClass::off);

  static PrioritizedSign none() noexcept { return PrioritizedSign{}; }
  bool operator==(const PrioritizedSign&) const = default;
};

struct TsrConfig {
  double iou_threshold = 0.5;
  double min_height = 12.0;  // px, crop coordinates
  bool enable_dedup = true;
  bool enable_size_filter = true;
};

/// Class-scoped greedy suppression. Detections are visited by descending confidence (stable
/// for equal confidences); one is dropped when a kept detection of the same class overlaps it
/// with IoU >= iou_threshold. The result is in descending confidence order.
std::vector<SignDetection> deduplicate(std::span<const SignDetection> dets, double iou_threshold);

std::vector<SignDetection> filter_small(std::span<const SignDetection> dets, double min_height);

/// The most relevant sign: minimal priority rank, then largest box, then highest confidence.
/// Detections labelled off carry no instruction and are ignored.
PrioritizedSign prioritize(std::span<const SignDetection> dets) noexcept;

PrioritizedSign process_signs(std::span<const SignDetection> dets, const TsrConfig& config);

inline PrioritizedSign process_frame(const AssembledFrame& frame, const TsrConfig& config) {
  return process_signs(frame.signs, config);
}

}  // namespace tls_assist
