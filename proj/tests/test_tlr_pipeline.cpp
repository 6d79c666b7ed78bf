#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "tls_assist/rng.hpp"
#include "tls_assist/tlr_pipeline.hpp"

using namespace tls_assist;

namespace {

StateBuffer buffer_of(std::initializer_list<LightState> oldest_first, std::size_t n = 3) {
  StateBuffer b(n);
  for (LightState s : oldest_first) b.push(s);
  return b;
}

LightDetection det(LightClass c, double conf = 0.9) {
  return LightDetection::make(BoundingBox::make(0, 0, 10, 30), c, conf);
}

AssembledFrame frame_with(std::int64_t index, std::vector<LightDetection> lights) {
  AssembledFrame f;
  f.frame_index = index;
  f.lights = std::move(lights);
  return f;
}

constexpr LightState R = LightState::red;
constexpr LightState Y = LightState::yellow;
constexpr LightState G = LightState::green;
constexpr LightState X = LightState::no_detection;

}  // namespace

TEST_CASE("state buffer keeps the newest N entries") {
  StateBuffer b(3);
  CHECK(b.empty());
  b.push(R);
  b.push(G);
  CHECK(b.size() == 2);
  CHECK(b.from_newest(0) == G);
  b.push(Y);
  b.push(X);
  CHECK(b.size() == 3);
  CHECK(b.entries() == std::vector<LightState>{G, Y, X});
  CHECK(b.from_newest(2) == G);
  CHECK_THROWS_AS(StateBuffer(0), ValidationError);
}

TEST_CASE("confidence filter is inclusive") {
  const std::vector<LightDetection> in = {det(LightClass::red, 0.49), det(LightClass::red, 0.5),
                                          det(LightClass::green, 0.7)};
  const auto out = filter_confidence(in, 0.5);
  CHECK(out.size() == 2);
  CHECK(filter_confidence(in, 0.0).size() == 3);
}

TEST_CASE("relevance prediction examples") {
  const std::vector<LightDetection> two_red_one_green = {det(LightClass::red), det(LightClass::red),
                                                         det(LightClass::green)};
  CHECK(predict_relevance(two_red_one_green) == LightClass::red);
  const std::vector<LightDetection> tie = {det(LightClass::green), det(LightClass::yellow)};
  CHECK(predict_relevance(tie) == LightClass::yellow);
  const std::vector<LightDetection> offs = {det(LightClass::off), det(LightClass::off),
                                            det(LightClass::red)};
  CHECK(predict_relevance(offs) == LightClass::off);
  CHECK_FALSE(predict_relevance(std::vector<LightDetection>{}).has_value());
}

TEST_CASE("bypass selectors") {
  const std::vector<LightDetection> d = {det(LightClass::green, 0.95), det(LightClass::red, 0.6),
                                         det(LightClass::green, 0.9)};
  CHECK(highest_priority_class(d) == LightClass::red);
  CHECK(highest_confidence_class(d) == LightClass::green);
}

TEST_CASE("off maps to no_detection") {
  CHECK(to_validation_state(LightClass::off) == X);
  CHECK(to_validation_state(std::nullopt) == X);
  CHECK(to_validation_state(LightClass::red) == R);
}

TEST_CASE("validation examples") {
  {
    const auto v = validate(buffer_of({G, R, R}));
    CHECK(v.state == R);
    REQUIRE(v.weights);
    CHECK((*v.weights)[index_of(R)] == 15);
    CHECK((*v.weights)[index_of(G)] == 2);
  }
  {
    // W(red) = 3*1 = 3, W(green) = 2*(3+2) = 10
    const auto v = validate(buffer_of({R, G, G}));
    CHECK(v.state == G);
    CHECK_FALSE(v.tie_broken);
  }
  {
    const auto v = validate(buffer_of({X, X, X}));
    CHECK(v.state == X);
    CHECK_FALSE(v.tie_broken);
  }
  {
    // W(red) = 3*1 = 3, W(yellow) = 1*3 = 3: tie resolved towards red
    const auto v = validate(buffer_of({R, X, Y}));
    CHECK(v.state == R);
    CHECK(v.tie_broken);
  }
  {
    const auto v = validate(buffer_of({R}));
    CHECK(v.state == R);
    CHECK((*v.weights)[index_of(R)] == 9);
  }
}

TEST_CASE("validated state is one of the candidates with maximal weight") {
  Rng rng(77);
  for (int i = 0; i < 5000; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 7);
    StateBuffer b(n);
    const std::size_t len = static_cast<std::size_t>(rng.uniform() * (n + 3));
    for (std::size_t k = 0; k < len; ++k) {
      b.push(kAllLightStates[static_cast<std::size_t>(rng.uniform() * 4) % 4]);
    }
    const auto v = validate(b);
    int best = 0;
    for (LightState c : kAllLightStates) best = std::max(best, weight(b, c));
    if (best == 0) {
      CHECK(v.state == X);
    } else {
      CHECK(weight(b, v.state) == best);
      for (LightState c : kAllLightStates) {
        if (weight(b, c) == best) CHECK(criticality(v.state) >= criticality(c));
      }
    }
  }
}

TEST_CASE("library validation agrees with the reference on partial buffers") {
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 5);
    const std::size_t len = static_cast<std::size_t>(rng.uniform() * (n + 1));
    StateBuffer b(n);
    std::vector<LightState> hist;
    for (std::size_t k = 0; k < len; ++k) {
      const LightState s = kAllLightStates[static_cast<std::size_t>(rng.uniform() * 4) % 4];
      b.push(s);
      hist.push_back(s);
    }
    const auto want = oracle::validate(hist, n);
    const auto got = validate(b);
    CHECK(got.state == want.state);
    CHECK(got.tie_broken == want.tie);
    for (std::size_t c = 0; c < 4; ++c) CHECK((*got.weights)[c] == want.weights[c]);
  }
}

TEST_CASE("pipeline chain with relevance and validation") {
  TlrPipeline p;
  CHECK(p.process_frame(frame_with(0, {det(LightClass::red), det(LightClass::green, 0.3)})).state ==
        R);
  // green now dominates the frame, but one green frame does not outweigh the red history
  CHECK(p.process_frame(frame_with(1, {det(LightClass::green), det(LightClass::green)})).state == R);
  CHECK(p.process_frame(frame_with(2, {det(LightClass::green)})).state == G);
  CHECK(p.buffer().entries() == std::vector<LightState>{R, G, G});
}

TEST_CASE("frame order is enforced") {
  TlrPipeline p;
  (void)p.process_frame(frame_with(5, {}));
  CHECK_THROWS_AS(p.process_frame(frame_with(5, {})), OrderError);
  CHECK_THROWS_AS(p.process_frame(frame_with(4, {})), OrderError);
  CHECK_NOTHROW(p.process_frame(frame_with(6, {})));
}

TEST_CASE("disabling validation passes the per-frame state through without weights") {
  TlrConfig c;
  c.enable_sv = false;
  TlrPipeline p(c);
  CHECK(p.process_frame(frame_with(0, {det(LightClass::red)})).state == R);
  const auto v = p.process_frame(frame_with(1, {det(LightClass::green)}));
  CHECK(v.state == G);
  CHECK_FALSE(v.weights.has_value());
}

TEST_CASE("relevance bypass modes") {
  const std::vector<LightDetection> d = {det(LightClass::green, 0.95), det(LightClass::green, 0.9),
                                         det(LightClass::red, 0.7)};
  TlrConfig c;
  c.enable_rp = false;
  c.rp_bypass = RelevanceBypass::highest_priority;
  CHECK(TlrPipeline(c).per_frame_state(d) == R);
  c.rp_bypass = RelevanceBypass::highest_confidence;
  CHECK(TlrPipeline(c).per_frame_state(d) == G);
  c.enable_rp = true;
  CHECK(TlrPipeline(c).per_frame_state(d) == G);
}
