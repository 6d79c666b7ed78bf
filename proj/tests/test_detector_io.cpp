#include <sstream>
#include <string>

#include "doctest.h"
#include "tls_assist/detector_io.hpp"
#include "tls_assist/rng.hpp"

using namespace tls_assist;

namespace {

FrameRecord random_record(Rng& rng, std::int64_t index) {
  FrameRecord r;
  r.frame.frame_index = index;
  r.frame.timestamp = round_to(index * 0.1, 3);
  r.frame.stitch_ok = rng.bernoulli(0.9);
  for (ViewId v : kAllViews) {
    if (v != ViewId::front_center && rng.bernoulli(0.3)) continue;
    ViewFrame& vf = r.frame.view(v);
    if (rng.bernoulli(0.5)) vf.size = ImageSize{1280, 720};
    const int n = static_cast<int>(rng.uniform() * 4);
    for (int k = 0; k < n; ++k) {
      const double x0 = rng.uniform(0, 1200);
      const double y0 = rng.uniform(0, 650);
      const auto box = BoundingBox::make(x0, y0, x0 + rng.uniform(1, 70), y0 + rng.uniform(1, 60));
      const double conf = rng.uniform();
      if (rng.bernoulli(0.5)) {
        vf.lights.push_back(
            LightDetection::make(box, kAllLightClasses[static_cast<std::size_t>(k) % 4], conf, v));
      } else {
        vf.signs.push_back(
            SignDetection::make(box, kAllSignClasses[static_cast<std::size_t>(k) % 6], conf, v));
      }
    }
  }
  return r;
}

std::string good_line(std::int64_t index) {
  FrameRecord r;
  r.frame.frame_index = index;
  r.frame.timestamp = index * 0.1;
  for (ViewId v : kAllViews) r.frame.view(v).size = ImageSize{1280, 720};
  r.frame.view(ViewId::front_center)
      .lights.push_back(LightDetection::make(BoundingBox::make(600, 100, 620, 150), LightClass::red,
                                             0.9, ViewId::front_center));
  return serialize_frame(r);
}

std::string session_input(std::size_t frames, std::size_t malformed_every) {
  std::string s;
  for (std::size_t i = 0; i < frames; ++i) {
    if (malformed_every != 0 && i % malformed_every == malformed_every - 1) {
      s += "{\"schema_version\":1,\"frame_index\":\"oops\"}\n";
    } else {
      s += good_line(static_cast<std::int64_t>(i)) + "\n";
    }
  }
  return s;
}

}  // namespace

TEST_CASE("parse a minimal frame") {
  const auto r = parse_frame(
      R"({"schema_version":1,"frame_index":7,"timestamp":0.7,"stitch_ok":true,)"
      R"("views":{"front_center":{"size":[1280,720],"detections":[)"
      R"({"kind":"light","class":"red","confidence":0.9,"box":[100,50,120,90]}]}}})");
  CHECK(r.frame.frame_index == 7);
  const ViewFrame* fc = r.frame.find(ViewId::front_center);
  REQUIRE(fc != nullptr);
  REQUIRE(fc->lights.size() == 1);
  CHECK(fc->lights[0].label == LightClass::red);
  CHECK(fc->lights[0].box == BoundingBox{100, 50, 120, 90, FrameTag::view});
}

TEST_CASE("parse errors name the field") {
  auto field_of = [](std::string_view line) {
    try {
      (void)parse_frame(line, 3);
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of("not json") == "");
  CHECK(field_of(R"({"schema_version":2,"frame_index":0,"timestamp":0,"stitch_ok":true,"views":{}})") == "schema_version");
  CHECK(field_of(R"({"schema_version":1,"frame_index":"x","views":{}})") == "frame_index");
  CHECK(field_of(R"({"schema_version":1,"frame_index":0,"timestamp":0,"stitch_ok":true,"views":{"front_center":{"detections":[)"
                 R"({"kind":"light","class":"red","confidence":1.5,"box":[0,0,1,1]}]}}})") ==
        "views.front_center.detections[0].confidence");
  CHECK(field_of(R"({"schema_version":1,"frame_index":0,"timestamp":0,"stitch_ok":true,"views":{"front_center":{"detections":[)"
                 R"({"kind":"sign","class":"speed_limit_50","confidence":0.5,"box":[0,0,1,1]}]}}})") ==
        "views.front_center.detections[0].class");
  CHECK(field_of(R"({"schema_version":1,"frame_index":0,"timestamp":0,"stitch_ok":true,"views":{"rear":{}}})") == "views.rear");
}

TEST_CASE("frame round trip on random records") {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    const FrameRecord r = canonicalize(random_record(rng, i));
    const std::string line = serialize_frame(r);
    const FrameRecord back = parse_frame(line);
    CHECK(back == r);
    CHECK(serialize_frame(back) == line);
  }
}

TEST_CASE("notice round trip") {
  NoticeRecord n;
  n.line = 4;
  n.frame_index = 3;
  n.light_state = LightState::red;
  n.sign = SignClass::yield;
  n.message = "Red light ahead, stop the vehicle! Yield sign ahead, give way to other traffic.";
  n.suppressed = false;
  n.weights = LightWeights{9, 0, 4, 0};
  n.tie_broken = false;
  const std::string line = emit_notice(n);
  CHECK(parse_notice(line) == n);

  NoticeRecord bad;
  bad.line = 9;
  bad.parse_error = true;
  bad.error = "frame_index: expected integer";
  CHECK(parse_notice(emit_notice(bad)) == bad);
}

TEST_CASE("session processes every line in order") {
  std::istringstream in(session_input(20, 0));
  std::ostringstream out;
  const auto s = stream_session(in, out, PipelineConfig{});
  CHECK(s.frames == 20);
  CHECK(s.errors == 0);
  CHECK(s.emitted == 20);
  CHECK_FALSE(s.aborted);
  std::istringstream lines(out.str());
  std::string line;
  std::int64_t expect = 0;
  while (std::getline(lines, line)) {
    const auto n = parse_notice(line);
    CHECK(n.frame_index == expect++);
    CHECK(n.message == "Red light ahead, stop the vehicle!");
  }
  CHECK(expect == 20);
}

TEST_CASE("5 malformed of 100 lines: processed as empty frames, no abort") {
  std::istringstream in(session_input(100, 20));
  std::ostringstream out;
  const auto s = stream_session(in, out, PipelineConfig{});
  CHECK(s.frames == 100);
  CHECK(s.errors == 5);
  CHECK_FALSE(s.aborted);
  std::istringstream lines(out.str());
  std::string line;
  std::size_t count = 0;
  std::size_t errors = 0;
  while (std::getline(lines, line)) {
    const auto n = parse_notice(line);
    ++count;
    if (n.parse_error) {
      ++errors;
      CHECK(n.frame_index == -1);
      CHECK_FALSE(n.error.empty());
    }
  }
  CHECK(count == 100);
  CHECK(errors == 5);
}

TEST_CASE("20 malformed of 100 lines aborts") {
  std::istringstream in(session_input(100, 5));
  std::ostringstream out;
  const auto s = stream_session(in, out, PipelineConfig{});
  CHECK(s.errors == 20);
  CHECK(s.aborted);
}

TEST_CASE("blank lines are skipped") {
  std::istringstream in(good_line(0) + "\n\n" + good_line(1) + "\n");
  std::ostringstream out;
  const auto s = stream_session(in, out, PipelineConfig{});
  CHECK(s.frames == 2);
  CHECK(s.errors == 0);
}

TEST_CASE("out-of-order frames are reported, not fatal") {
  std::istringstream in(good_line(1) + "\n" + good_line(1) + "\n" + good_line(2) + "\n");
  std::ostringstream out;
  const auto s = stream_session(in, out, PipelineConfig{});
  CHECK(s.frames == 3);
  CHECK(s.errors == 1);
}
