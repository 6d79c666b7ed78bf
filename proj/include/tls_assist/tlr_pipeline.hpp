#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tls_assist/core_types.hpp"
#include "tls_assist/frame_assembly.hpp"

namespace tls_assist {

// Sliding window of the newest N per-frame light states, oldest first.
class StateBuffer {
 public:
  explicit StateBuffer(std::size_t capacity = 3);

  void push(LightState s) noexcept;
  void clear() noexcept { size_ = 0; }

  [[nodiscard]] std::size_t capacity() const noexcept { return slots_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] bool empty() const noexcept { return size_ == 0; }

  // k = 0 is the newest entry; requires k < size().
  [[nodiscard]] LightState from_newest(std::size_t k) const noexcept;
  [[nodiscard]] std::vector<LightState> entries() const;  // oldest -> newest

 private:
  std::vector<LightState> slots_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
};

using LightWeights = std::array<int, 4>;  // indexed by index_of(LightState)

struct ValidatedLightState {
  LightState state = LightState::no_detection;
  // Per-candidate W(c). Absent when temporal validation is bypassed.
  std::optional<LightWeights> weights;
  bool tie_broken = false;

  bool operator==(const ValidatedLightState&) const = default;
};

// How the per-frame state is chosen when relevance prediction is switched off.
enum class RelevanceBypass {
  highest_priority,    // most safety-critical class present
  highest_confidence,  // the single most confident detection (plain detector output)
};

struct TlrConfig {
  double confidence_threshold = 0.5;
  std::size_t buffer_size = 3;
  bool enable_rp = true;
  bool enable_sv = true;
  RelevanceBypass rp_bypass = RelevanceBypass::highest_confidence;
};

std::vector<LightDetection> filter_confidence(std::span<const LightDetection> dets,
                                              double threshold);

/// Majority class among the detections; ties at the maximal count resolve by the
/// red > yellow > green > off priority order. Empty input yields nullopt.
std::optional<LightClass> predict_relevance(std::span<const LightDetection> dets) noexcept;

std::optional<LightClass> highest_priority_class(std::span<const LightDetection> dets) noexcept;
std::optional<LightClass> highest_confidence_class(std::span<const LightDetection> dets) noexcept;

constexpr LightState to_validation_state(std::optional<LightClass> c) noexcept {
  if (!c) return LightState::no_detection;
  switch (*c) {
    case LightClass::red: return LightState::red;
    case LightClass::yellow: return LightState::yellow;
    case LightClass::green: return LightState::green;
    case LightClass::off: return LightState::no_detection;
  }
  return LightState::no_detection;
}

/// W(c) = sum_{k=0}^{N-1} (N-k) * S(c) * [f_{n-k} == c], k = 0 newest.
/// Slots not yet filled count as no_detection.
int weight(const StateBuffer& buf, LightState c) noexcept;

/// argmax_c W(c). When the maximum is shared by several detected states the higher
/// criticality wins and tie_broken is set; an all-zero buffer yields no_detection.
ValidatedLightState validate(const StateBuffer& buf) noexcept;

// Per-stream traffic-light chain. One instance per ordered stream; not thread-safe.
class TlrPipeline {
 public:
  explicit TlrPipeline(const TlrConfig& config = {});

  // Throws OrderError unless frame indices strictly increase.
  ValidatedLightState process_frame(const AssembledFrame& frame);
  // Same chain without the ordering check (used for frames that failed to parse).
  ValidatedLightState process_detections(std::span<const LightDetection> lights);

  [[nodiscard]] LightState per_frame_state(std::span<const LightDetection> filtered) const noexcept;
  [[nodiscard]] const StateBuffer& buffer() const noexcept { return buffer_; }
  [[nodiscard]] const TlrConfig& config() const noexcept { return config_; }

 private:
  TlrConfig config_;
  StateBuffer buffer_;
  std::optional<std::int64_t> last_index_;
  std::vector<LightDetection> scratch_;
};

}  // namespace tls_assist
