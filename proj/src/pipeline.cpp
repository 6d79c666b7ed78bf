#include "tls_assist/pipeline.hpp"

#include <string>

namespace tls_assist {

TlsPipeline::TlsPipeline(PipelineConfig config)
    : config_(std::move(config)), crop_(config_.resolved_crop()), tlr_(config_.tlr) {
  crop_.check_inside(config_.layout);
}

FrameResult TlsPipeline::process(const FrameBundle& bundle) {
  AssembledFrame frame = assemble(bundle, config_.layout, crop_, config_.assembly);
  FrameResult r;
  if (config_.enable_tlr) {
    r.light = tlr_.process_frame(frame);
  }
  if (config_.enable_tsr) r.sign = process_signs(frame.signs, config_.tsr);
  r.notice = compose(r.light, r.sign, config_.templates, frame.frame_index);
  r.frame = std::move(frame);
  return r;
}

FrameResult TlsPipeline::process_empty(std::int64_t frame_index, double timestamp) {
  FrameResult r;
  r.frame.frame_index = frame_index;
  r.frame.timestamp = timestamp;
  if (config_.enable_tlr) r.light = tlr_.process_detections({});
  r.notice = compose(r.light, r.sign, config_.templates, frame_index);
  return r;
}

}  // namespace tls_assist
