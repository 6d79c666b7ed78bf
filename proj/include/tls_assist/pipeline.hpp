#pragma once

#include <optional>

#include "tls_assist/frame_assembly.hpp"
#include "tls_assist/message_gen.hpp"
#include "tls_assist/tlr_pipeline.hpp"
#include "tls_assist/tsr_pipeline.hpp"

namespace tls_assist {

struct PipelineConfig {
  ViewLayout layout = ViewLayout::multi_view();
  std::optional<FovCrop> crop;  // centered on front_center when unset
  AssemblyConfig assembly;
  TlrConfig tlr;
  TsrConfig tsr;
  bool enable_tlr = true;
  bool enable_tsr = true;
  MessageTemplates templates = MessageTemplates::defaults();

  [[nodiscard]] FovCrop resolved_crop() const {
    return crop ? *crop : FovCrop::centered_on_front(layout);
  }
};

struct FrameResult {
  AssembledFrame frame;
  ValidatedLightState light;
  PrioritizedSign sign;
  NoticeMessage notice;
};

// assembly -> TLR -> TSR -> message generation for one ordered stream.
class TlsPipeline {
 public:
  explicit TlsPipeline(PipelineConfig config);

  // Throws OrderError on non-increasing frame index, AssemblyError when the frame has no
  // front-center view.
  FrameResult process(const FrameBundle& bundle);
  // A frame whose content is unusable: treated as containing no detections.
  FrameResult process_empty(std::int64_t frame_index, double timestamp = 0.0);

  [[nodiscard]] const PipelineConfig& config() const noexcept { return config_; }

 private:
  FrameResult finish(AssembledFrame frame);

  PipelineConfig config_;
  FovCrop crop_;
  TlrPipeline tlr_;
};

}  // namespace tls_assist
