#include "tls_assist/tlr_pipeline.hpp"

#include <string>

namespace tls_assist {

StateBuffer::StateBuffer(std::size_t capacity) : slots_(capacity, LightState::no_detection) {
  if (capacity == 0) throw ValidationError("state buffer capacity must be >= 1");
}

void StateBuffer::push(LightState s) noexcept {
  slots_[head_] = s;
  head_ = (head_ + 1) % slots_.size();
  if (size_ < slots_.size()) ++size_;
}

LightState StateBuffer::from_newest(std::size_t k) const noexcept {
  const std::size_t n = slots_.size();
  return slots_[(head_ + n - 1 - k) % n];
}

std::vector<LightState> StateBuffer::entries() const {
  std::vector<LightState> out;
  out.reserve(size_);
  for (std::size_t k = size_; k-- > 0;) out.push_back(from_newest(k));
  return out;
}

std::vector<LightDetection> filter_confidence(std::span<const LightDetection> dets,
                                              double threshold) {
  std::vector<LightDetection> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    if (d.confidence >= threshold) out.push_back(d);
  }
  return out;
}

std::optional<LightClass> predict_relevance(std::span<const LightDetection> dets) noexcept {
  if (dets.empty()) return std::nullopt;
  std::array<std::size_t, 4> counts{};
  for (const auto& d : dets) ++counts[index_of(d.label)];
  // kAllLightClasses is in priority order, so the first class reaching the max count wins.
  std::optional<LightClass> best;
  std::size_t best_count = 0;
  for (LightClass c : kAllLightClasses) {
    if (counts[index_of(c)] > best_count) {
      best = c;
      best_count = counts[index_of(c)];
    }
  }
  return best;
}

std::optional<LightClass> highest_priority_class(std::span<const LightDetection> dets) noexcept {
  std::optional<LightClass> best;
  for (const auto& d : dets) {
    if (!best || light_priority_rank(d.label) < light_priority_rank(*best)) best = d.label;
  }
  return best;
}

std::optional<LightClass> highest_confidence_class(std::span<const LightDetection> dets) noexcept {
  const LightDetection* best = nullptr;
  for (const auto& d : dets) {
    if (best == nullptr || d.confidence > best->confidence ||
        (d.confidence == best->confidence &&
         light_priority_rank(d.label) < light_priority_rank(best->label))) {
      best = &d;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->label;
}

int weight(const StateBuffer& buf, LightState c) noexcept {
  const int s = criticality(c);
  if (s == 0) return 0;
  const int n = static_cast<int>(buf.capacity());
  int w = 0;
  for (std::size_t k = 0; k < buf.size(); ++k) {
    if (buf.from_newest(k) == c) w += (n - static_cast<int>(k)) * s;
  }
  return w;
}

ValidatedLightState validate(const StateBuffer& buf) noexcept {
  ValidatedLightState out;
  LightWeights w{};
  for (LightState c : kAllLightStates) w[index_of(c)] = weight(buf, c);
  out.weights = w;

  // Scan in descending criticality so the first maximum found is the tie-break winner.
  constexpr std::array<LightState, 3> by_criticality = {LightState::red, LightState::green,
                                                        LightState::yellow};
  int best = 0;
  int holders = 0;
  for (LightState c : by_criticality) {
    const int wc = w[index_of(c)];
    if (wc > best) {
      best = wc;
      holders = 1;
      out.state = c;
    } else if (wc == best && wc > 0) {
      ++holders;
    }
  }
  out.tie_broken = holders > 1;
  return out;
}

TlrPipeline::TlrPipeline(const TlrConfig& config)
    : config_(config), buffer_(config.buffer_size) {
  if (!(config.confidence_threshold >= 0.0 && config.confidence_threshold <= 1.0)) {
    throw ValidationError("confidence threshold outside [0,1]");
  }
}

LightState TlrPipeline::per_frame_state(std::span<const LightDetection> filtered) const noexcept {
  if (config_.enable_rp) return to_validation_state(predict_relevance(filtered));
  switch (config_.rp_bypass) {
    case RelevanceBypass::highest_priority:
      return to_validation_state(highest_priority_class(filtered));
    case RelevanceBypass::highest_confidence:
      return to_validation_state(highest_confidence_class(filtered));
  }
  return LightState::no_detection;
}

ValidatedLightState TlrPipeline::process_frame(const AssembledFrame& frame) {
  if (last_index_ && frame.frame_index <= *last_index_) {
    throw OrderError("frame index " + std::to_string(frame.frame_index) +
                     " does not follow " + std::to_string(*last_index_));
  }
  last_index_ = frame.frame_index;
  return process_detections(frame.lights);
}

ValidatedLightState TlrPipeline::process_detections(std::span<const LightDetection> lights) {
  scratch_.clear();
  for (const auto& d : lights) {
    if (d.confidence >= config_.confidence_threshold) scratch_.push_back(d);
  }
  const LightState current = per_frame_state(scratch_);
  if (!config_.enable_sv) return ValidatedLightState{current, std::nullopt, false};
  buffer_.push(current);
  return validate(buffer_);
}

}  // namespace tls_assist
