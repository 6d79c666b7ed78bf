#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tls_assist/core_types.hpp"
#include "tls_assist/pipeline.hpp"

namespace tls_assist {

inline constexpr int kFrameSchemaVersion = 1;

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what);
  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// One line of a detection stream. Wire layout (one JSON object per line):
//   {"schema_version":1,"frame_index":7,"timestamp":0.7,"stitch_ok":true,
//    "views":{"front_center":{"size":[1280,720],
//             "detections":[{"kind":"light","class":"red","confidence":0.9,
//                            "box":[100,50,120,90]}]}}}
// "size" is optional; boxes are view pixel coordinates rounded to 2 decimals.
struct FrameRecord {
  int schema_version = kFrameSchemaVersion;
  FrameBundle frame;

  bool operator==(const FrameRecord&) const = default;
};

// Throws ParseError naming the offending field path, e.g.
// "views.front_center.detections[0].confidence".
FrameRecord parse_frame(std::string_view line, std::size_t line_number = 0);
// Canonical single-line form without trailing newline.
std::string serialize_frame(const FrameRecord& record);
// Values exactly as they read back after serialize_frame (boxes rounded to 2 decimals).
FrameRecord canonicalize(FrameRecord record);

double round_to(double value, int decimals) noexcept;

struct NoticeRecord {
  std::size_t line = 0;  // 1-based input line of the frame
  std::int64_t frame_index = -1;  // -1 when the input line could not be parsed
  LightState light_state = LightState::no_detection;
  SignClass sign = SignClass::off;
  std::string message;
  bool suppressed = true;  // message is empty; nothing is injected downstream
  std::optional<LightWeights> weights;
  bool tie_broken = false;
  bool degraded = false;
  bool parse_error = false;
  std::string error;  // parse diagnostic, empty unless parse_error

  bool operator==(const NoticeRecord&) const = default;
};

NoticeRecord make_notice(const FrameResult& result, std::size_t line);
std::string emit_notice(const NoticeRecord& record);
NoticeRecord parse_notice(std::string_view line, std::size_t line_number = 0);

struct SessionOptions {
  double max_error_rate = 0.10;  // abort when errors / frames exceeds this
  // The running rate is only enforced once this many frames were read; the final rate is
  // always enforced.
  std::size_t min_frames_before_abort = 100;
  std::size_t max_reported_errors = 16;
};

struct SessionError {
  std::size_t line = 0;
  std::string field;
  std::string message;
};

struct SessionSummary {
  std::size_t frames = 0;
  std::size_t errors = 0;
  std::size_t emitted = 0;     // notices with non-empty text
  std::size_t suppressed = 0;  // notices with empty text
  std::size_t degraded = 0;
  bool aborted = false;
  std::vector<SessionError> first_errors;
};

// Reads FrameRecords line by line, runs the full pipeline, and writes one NoticeRecord line
// per input frame, in input order. Malformed frames are processed as empty frames and
// counted. Throws IoError when the source cannot be read.
SessionSummary stream_session(std::istream& in, std::ostream& out, const PipelineConfig& config,
                              const SessionOptions& options = {});

}  // namespace tls_assist
