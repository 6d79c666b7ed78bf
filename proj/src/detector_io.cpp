#include "tls_assist/detector_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace tls_assist {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& field, const std::string& what) {
  throw ParseError(line, field, what);
}

const json& require(const json& obj, const char* key, const std::string& path, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(line, path + key, "missing field");
  return *it;
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& path, std::size_t line) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) fail(line, path + it.key(), "unknown field");
  }
}

double number(const json& v, const std::string& path, std::size_t line) {
  if (!v.is_number()) fail(line, path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(line, path, "expected a finite number");
  return d;
}

bool boolean(const json& v, const std::string& path, std::size_t line) {
  if (!v.is_boolean()) fail(line, path, "expected true or false");
  return v.get<bool>();
}

const std::string& string(const json& v, const std::string& path, std::size_t line) {
  if (!v.is_string()) fail(line, path, "expected a string");
  return v.get_ref<const std::string&>();
}

std::int64_t integer(const json& v, const std::string& path, std::size_t line) {
  if (!v.is_number_integer()) fail(line, path, "expected an integer");
  return v.get<std::int64_t>();
}

BoundingBox parse_box(const json& v, const std::string& path, std::size_t line) {
  if (!v.is_array() || v.size() != 4) fail(line, path, "expected [x_min, y_min, x_max, y_max]");
  BoundingBox b;
  b.x_min = number(v[0], path + "[0]", line);
  b.y_min = number(v[1], path + "[1]", line);
  b.x_max = number(v[2], path + "[2]", line);
  b.y_max = number(v[3], path + "[3]", line);
  b.frame = FrameTag::view;
  if (!b.is_valid()) fail(line, path, "box must satisfy 0 <= min < max on both axes");
  return b;
}

void parse_view(const json& v, ViewFrame& vf, const std::string& path, std::size_t line) {
  if (!v.is_object()) fail(line, path, "expected an object");
  reject_unknown(v, {"size", "detections"}, path + ".", line);
  if (auto it = v.find("size"); it != v.end()) {
    const std::string sp = path + ".size";
    if (!it->is_array() || it->size() != 2) fail(line, sp, "expected [width, height]");
    ImageSize s{number((*it)[0], sp + "[0]", line), number((*it)[1], sp + "[1]", line)};
    if (!(s.width > 0.0 && s.height > 0.0)) fail(line, sp, "size must be positive");
    vf.size = s;
  }
  const json& dets = require(v, "detections", path + ".", line);
  if (!dets.is_array()) fail(line, path + ".detections", "expected an array");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const std::string dp = path + ".detections[" + std::to_string(i) + "]";
    const json& d = dets[i];
    if (!d.is_object()) fail(line, dp, "expected an object");
    reject_unknown(d, {"kind", "class", "confidence", "box"}, dp + ".", line);
    const std::string& kind = string(require(d, "kind", dp + ".", line), dp + ".kind", line);
    const std::string& cls = string(require(d, "class", dp + ".", line), dp + ".class", line);
    const double conf = number(require(d, "confidence", dp + ".", line), dp + ".confidence", line);
    if (!(conf >= 0.0 && conf <= 1.0)) fail(line, dp + ".confidence", "must lie in [0, 1]");
    const BoundingBox box = parse_box(require(d, "box", dp + ".", line), dp + ".box", line);
    if (vf.size && (box.x_max > vf.size->width || box.y_max > vf.size->height)) {
      fail(line, dp + ".box", "box exceeds the view size");
    }
    if (kind == "light") {
      auto c = parse_light_class(cls);
      if (!c) fail(line, dp + ".class", "unknown light class '" + cls + "'");
      vf.lights.push_back(LightDetection{box, *c, conf, vf.view});
    } else if (kind == "sign") {
      auto c = parse_sign_class(cls);
      if (!c) fail(line, dp + ".class", "unknown sign class '" + cls + "'");
      vf.signs.push_back(SignDetection{box, *c, conf, vf.view});
    } else {
      fail(line, dp + ".kind", "expected 'light' or 'sign'");
    }
  }
}

template <class Label>
ordered_json detection_json(const char* kind, const Detection<Label>& d) {
  ordered_json j;
  j["kind"] = kind;
  j["class"] = to_string(d.label);
  j["confidence"] = d.confidence;
  j["box"] = {round_to(d.box.x_min, 2), round_to(d.box.y_min, 2), round_to(d.box.x_max, 2),
              round_to(d.box.y_max, 2)};
  return j;
}

json parse_object(std::string_view line, std::size_t line_number) {
  json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) fail(line_number, "", "malformed JSON");
  if (!j.is_object()) fail(line_number, "", "expected a JSON object");
  return j;
}

}  // namespace

ParseError::ParseError(std::size_t line, std::string field, const std::string& what)
    : Error("line " + std::to_string(line) + (field.empty() ? "" : ", field " + field) + ": " +
            what),
      line_(line),
      field_(std::move(field)) {}

double round_to(double value, int decimals) noexcept {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

FrameRecord parse_frame(std::string_view line, std::size_t line_number) {
  const json j = parse_object(line, line_number);
  reject_unknown(j, {"schema_version", "frame_index", "timestamp", "stitch_ok", "views"}, "",
                 line_number);
  FrameRecord r;
  const std::int64_t version =
      integer(require(j, "schema_version", "", line_number), "schema_version", line_number);
  if (version != kFrameSchemaVersion) {
    fail(line_number, "schema_version", "unsupported version " + std::to_string(version));
  }
  r.schema_version = static_cast<int>(version);
  r.frame.frame_index =
      integer(require(j, "frame_index", "", line_number), "frame_index", line_number);
  r.frame.timestamp = number(require(j, "timestamp", "", line_number), "timestamp", line_number);
  r.frame.stitch_ok = boolean(require(j, "stitch_ok", "", line_number), "stitch_ok", line_number);
  const json& views = require(j, "views", "", line_number);
  if (!views.is_object()) fail(line_number, "views", "expected an object keyed by view name");
  for (auto it = views.begin(); it != views.end(); ++it) {
    auto id = parse_view_id(it.key());
    if (!id) fail(line_number, "views." + it.key(), "unknown view");
    parse_view(it.value(), r.frame.view(*id), "views." + it.key(), line_number);
  }
  return r;
}

std::string serialize_frame(const FrameRecord& record) {
  ordered_json j;
  j["schema_version"] = record.schema_version;
  j["frame_index"] = record.frame.frame_index;
  j["timestamp"] = record.frame.timestamp;
  j["stitch_ok"] = record.frame.stitch_ok;
  ordered_json views = ordered_json::object();
  for (ViewId id : kAllViews) {
    const ViewFrame* vf = record.frame.find(id);
    if (vf == nullptr) continue;
    ordered_json v;
    if (vf->size) v["size"] = {vf->size->width, vf->size->height};
    ordered_json dets = ordered_json::array();
    for (const auto& d : vf->lights) dets.push_back(detection_json("light", d));
    for (const auto& d : vf->signs) dets.push_back(detection_json("sign", d));
    v["detections"] = std::move(dets);
    views[std::string(to_string(id))] = std::move(v);
  }
  j["views"] = std::move(views);
  return j.dump();
}

FrameRecord canonicalize(FrameRecord record) {
  for (auto& vf : record.frame.views) {
    auto fix = [&](auto& dets) {
      for (auto& d : dets) {
        d.box = BoundingBox{round_to(d.box.x_min, 2), round_to(d.box.y_min, 2),
                            round_to(d.box.x_max, 2), round_to(d.box.y_max, 2), FrameTag::view};
        d.view = vf.view;
      }
    };
    fix(vf.lights);
    fix(vf.signs);
  }
  return record;
}

NoticeRecord make_notice(const FrameResult& result, std::size_t line) {
  NoticeRecord n;
  n.line = line;
  n.frame_index = result.frame.frame_index;
  n.light_state = result.light.state;
  n.sign = result.sign.sign;
  n.message = result.notice.text;
  n.suppressed = result.notice.empty();
  n.weights = result.light.weights;
  n.tie_broken = result.light.tie_broken;
  n.degraded = result.frame.degraded;
  return n;
}

std::string emit_notice(const NoticeRecord& r) {
  ordered_json j;
  j["line"] = r.line;
  j["frame_index"] = r.frame_index;
  j["light_state"] = to_string(r.light_state);
  j["sign"] = to_string(r.sign);
  j["message"] = r.message;
  j["suppressed"] = r.suppressed;
  ordered_json diag;
  if (r.weights) {
    ordered_json w;
    // Fixed key order: red, yellow, green, no_detection.
    for (LightState s : kAllLightStates) w[std::string(to_string(s))] = (*r.weights)[index_of(s)];
    diag["weights"] = std::move(w);
  } else {
    diag["weights"] = nullptr;
  }
  diag["tie_broken"] = r.tie_broken;
  diag["degraded"] = r.degraded;
  diag["parse_error"] = r.parse_error;
  if (r.parse_error) diag["error"] = r.error;
  j["diagnostics"] = std::move(diag);
  return j.dump();
}

NoticeRecord parse_notice(std::string_view line, std::size_t n) {
  const json j = parse_object(line, n);
  reject_unknown(j, {"line", "frame_index", "light_state", "sign", "message", "suppressed",
                     "diagnostics"},
                 "", n);
  NoticeRecord r;
  const std::int64_t src_line = integer(require(j, "line", "", n), "line", n);
  if (src_line < 0) fail(n, "line", "must be non-negative");
  r.line = static_cast<std::size_t>(src_line);
  r.frame_index = integer(require(j, "frame_index", "", n), "frame_index", n);
  const std::string& ls = string(require(j, "light_state", "", n), "light_state", n);
  auto state = parse_light_state(ls);
  if (!state) fail(n, "light_state", "unknown light state '" + ls + "'");
  r.light_state = *state;
  const std::string& ss = string(require(j, "sign", "", n), "sign", n);
  auto sign = parse_sign_class(ss);
  if (!sign) fail(n, "sign", "unknown sign class '" + ss + "'");
  r.sign = *sign;
  r.message = string(require(j, "message", "", n), "message", n);
  r.suppressed = boolean(require(j, "suppressed", "", n), "suppressed", n);
  if (r.suppressed != r.message.empty()) fail(n, "suppressed", "must equal (message is empty)");

  const json& diag = require(j, "diagnostics", "", n);
  if (!diag.is_object()) fail(n, "diagnostics", "expected an object");
  reject_unknown(diag, {"weights", "tie_broken", "degraded", "parse_error", "error"},
                 "diagnostics.", n);
  const json& w = require(diag, "weights", "diagnostics.", n);
  if (!w.is_null()) {
    if (!w.is_object()) fail(n, "diagnostics.weights", "expected an object or null");
    reject_unknown(w, {"red", "yellow", "green", "no_detection"}, "diagnostics.weights.", n);
    LightWeights weights{};
    for (LightState s : kAllLightStates) {
      const std::string key(to_string(s));
      const std::int64_t v = integer(require(w, key.c_str(), "diagnostics.weights.", n),
                                     "diagnostics.weights." + key, n);
      weights[index_of(s)] = static_cast<int>(v);
    }
    r.weights = weights;
  }
  r.tie_broken = boolean(require(diag, "tie_broken", "diagnostics.", n), "diagnostics.tie_broken", n);
  r.degraded = boolean(require(diag, "degraded", "diagnostics.", n), "diagnostics.degraded", n);
  r.parse_error =
      boolean(require(diag, "parse_error", "diagnostics.", n), "diagnostics.parse_error", n);
  if (auto it = diag.find("error"); it != diag.end()) {
    if (!r.parse_error) fail(n, "diagnostics.error", "only allowed when parse_error is true");
    r.error = string(*it, "diagnostics.error", n);
  } else if (r.parse_error) {
    fail(n, "diagnostics.error", "missing field");
  }
  return r;
}

SessionSummary stream_session(std::istream& in, std::ostream& out, const PipelineConfig& config,
                              const SessionOptions& options) {
  if (!in) throw IoError("detection stream is not readable");
  TlsPipeline pipeline(config);
  SessionSummary summary;
  std::optional<std::int64_t> last_index;
  std::string line;
  std::size_t line_number = 0;

  auto record_error = [&](std::size_t ln, std::string field, std::string what) {
    ++summary.errors;
    if (summary.first_errors.size() < options.max_reported_errors) {
      summary.first_errors.push_back(SessionError{ln, std::move(field), std::move(what)});
    }
  };
  auto over_limit = [&] {
    return static_cast<double>(summary.errors) >
           options.max_error_rate * static_cast<double>(summary.frames);
  };

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++summary.frames;

    NoticeRecord notice;
    std::optional<FrameRecord> record;
    std::string error_field;
    std::string error_text;
    try {
      record = parse_frame(line, line_number);
      if (last_index && record->frame.frame_index <= *last_index) {
        throw ParseError(line_number, "frame_index",
                         "frame index " + std::to_string(record->frame.frame_index) +
                             " does not follow " + std::to_string(*last_index));
      }
      last_index = record->frame.frame_index;
      notice = make_notice(pipeline.process(record->frame), line_number);
    } catch (const ParseError& e) {
      error_field = e.field();
      error_text = e.what();
    } catch (const AssemblyError& e) {
      error_field = "views";
      error_text = e.what();
    }

    if (!error_text.empty()) {
      record_error(line_number, error_field, error_text);
      const std::int64_t index = record ? record->frame.frame_index : -1;
      notice = make_notice(pipeline.process_empty(index), line_number);
      notice.parse_error = true;
      notice.error = error_text;
    }
    if (notice.suppressed) {
      ++summary.suppressed;
    } else {
      ++summary.emitted;
    }
    if (notice.degraded) ++summary.degraded;
    out << emit_notice(notice) << '\n';

    if (summary.frames >= options.min_frames_before_abort && over_limit()) {
      summary.aborted = true;
      break;
    }
  }
  if (in.bad()) throw IoError("read error on detection stream");
  if (!summary.aborted && summary.frames > 0 && over_limit()) summary.aborted = true;
  out.flush();
  return summary;
}

}  // namespace tls_assist
