#include "doctest.h"
#include "tls_assist/frame_assembly.hpp"
#include "tls_assist/rng.hpp"

using namespace tls_assist;

namespace {

FrameBundle three_views(double left_height = 720.0) {
  FrameBundle b;
  b.view(ViewId::front_left).size = ImageSize{1280, left_height};
  b.view(ViewId::front_center).size = ImageSize{1280, 720};
  b.view(ViewId::front_right).size = ImageSize{1280, 720};
  return b;
}

LightDetection light_at(ViewId v, double x0, double y0, double x1, double y1,
                        LightClass c = LightClass::red, double conf = 0.9) {
  return LightDetection::make(BoundingBox::make(x0, y0, x1, y1), c, conf, v);
}

}  // namespace

TEST_CASE("view validation") {
  const auto layout = ViewLayout::multi_view();
  CHECK(validate_views(three_views(), layout) == ViewCheck::ok);
  CHECK(validate_views(three_views(600), layout) == ViewCheck::stitch_failure);

  FrameBundle b = three_views();
  b.stitch_ok = false;
  CHECK(validate_views(b, layout) == ViewCheck::stitch_failure);

  FrameBundle missing;
  missing.view(ViewId::front_left).size = ImageSize{1280, 720};
  CHECK_THROWS_AS(validate_views(missing, layout), AssemblyError);
}

TEST_CASE("layout offsets come from cumulative widths") {
  const auto layout = ViewLayout::multi_view();
  CHECK(layout.find(ViewId::front_left)->offset == 0);
  CHECK(layout.find(ViewId::front_center)->offset == 1280);
  CHECK(layout.find(ViewId::front_right)->offset == 2560);
  CHECK(layout.panorama_width() == 3840);
  CHECK(layout.panorama_height() == 720);
}

TEST_CASE("remap to panorama") {
  const auto layout = ViewLayout::multi_view();
  auto fl = remap_to_panorama(light_at(ViewId::front_left, 10, 10, 50, 50), layout);
  CHECK(fl.box == BoundingBox{10, 10, 50, 50, FrameTag::panorama});
  auto fr = remap_to_panorama(light_at(ViewId::front_right, 10, 10, 50, 50), layout);
  CHECK(fr.box == BoundingBox{2560 + 10.0, 10, 2560 + 50.0, 50, FrameTag::panorama});
  auto fc = remap_to_panorama(light_at(ViewId::front_center, 0, 0, 1280, 720), layout);
  CHECK(fc.box == BoundingBox{1280, 0, 2560, 720, FrameTag::panorama});
  CHECK_THROWS_AS(remap_to_panorama(light_at(ViewId::front_center, 1200, 0, 1300, 20), layout),
                  AssemblyError);
}

TEST_CASE("remap preserves size, label and confidence") {
  const auto layout = ViewLayout::multi_view();
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const ViewId v = kAllViews[static_cast<std::size_t>(rng.uniform() * 3) % 3];
    const double x0 = rng.uniform(0, 1200);
    const double y0 = rng.uniform(0, 700);
    const auto d = LightDetection::make(
        BoundingBox::make(x0, y0, x0 + rng.uniform(1, 80), y0 + rng.uniform(1, 20)),
        kAllLightClasses[i % 4], rng.uniform(), v);
    const auto r = remap_to_panorama(d, layout);
    CHECK(r.box.width() == doctest::Approx(d.box.width()).epsilon(1e-12));
    CHECK(r.box.height() == d.box.height());
    CHECK(r.label == d.label);
    CHECK(r.confidence == d.confidence);
  }
}

TEST_CASE("default crop is centered on front_center") {
  const auto crop = FovCrop::centered_on_front(ViewLayout::multi_view());
  CHECK(crop.x == 1280);
  CHECK(crop.y == 0);
}

TEST_CASE("crop translation") {
  const auto layout = ViewLayout::multi_view();
  FrameBundle b = three_views();
  // (1300,100,1400,200) in panorama is (20,100,120,200) in front_center
  b.view(ViewId::front_center).lights.push_back(light_at(ViewId::front_center, 20, 100, 120, 200));
  const auto out = assemble(b, layout, FovCrop{1280, 0});
  REQUIRE(out.lights.size() == 1);
  CHECK(out.lights[0].box == BoundingBox{20, 100, 120, 200, FrameTag::crop});
  CHECK_FALSE(out.degraded);
}

TEST_CASE("side-view detections are cropped away, straddling ones follow the retention rule") {
  const auto layout = ViewLayout::multi_view();
  FrameBundle b = three_views();
  b.view(ViewId::front_left).lights.push_back(light_at(ViewId::front_left, 100, 100, 140, 140));
  // crop starts at panorama x=1250: 30 of 40 px inside, kept and clipped
  b.view(ViewId::front_left).lights.push_back(light_at(ViewId::front_left, 1240, 0, 1280, 10));
  // 10 of 50 px inside: dropped
  b.view(ViewId::front_left).lights.push_back(light_at(ViewId::front_left, 1210, 20, 1260, 30));
  const auto out = assemble(b, layout, FovCrop{1250, 0});
  REQUIRE(out.lights.size() == 1);
  CHECK(out.lights[0].box == BoundingBox{0, 0, 30, 10, FrameTag::crop});
}

TEST_CASE("stitch failure degrades to front_center") {
  const auto layout = ViewLayout::multi_view();
  FrameBundle b = three_views();
  b.stitch_ok = false;
  b.view(ViewId::front_left).lights.push_back(light_at(ViewId::front_left, 1000, 0, 1100, 50));
  b.view(ViewId::front_center).lights.push_back(light_at(ViewId::front_center, 5, 5, 25, 45));
  b.view(ViewId::front_right).signs.push_back(
      SignDetection::make(BoundingBox::make(0, 0, 30, 30), SignClass::stop, 0.9,
                          ViewId::front_right));
  const auto out = assemble(b, layout, FovCrop{1280, 0});
  CHECK(out.degraded);
  REQUIRE(out.lights.size() == 1);
  CHECK(out.lights[0].box == BoundingBox{5, 5, 25, 45, FrameTag::crop});
  CHECK(out.signs.empty());
}

TEST_CASE("boxes outside their view are rejected and counted") {
  const auto layout = ViewLayout::multi_view();
  FrameBundle b = three_views();
  b.view(ViewId::front_center).lights.push_back(
      light_at(ViewId::front_center, 1270, 0, 1290, 10));
  b.view(ViewId::front_center).lights.push_back(light_at(ViewId::front_center, 10, 10, 20, 20));
  const auto out = assemble(b, layout, FovCrop{1280, 0});
  CHECK(out.rejected == 1);
  CHECK(out.lights.size() == 1);
}

TEST_CASE("single view with identity crop passes detections through") {
  const auto layout = ViewLayout::single_view();
  FrameBundle b;
  b.view(ViewId::front_center).size = ImageSize{1280, 720};
  b.view(ViewId::front_center).lights.push_back(light_at(ViewId::front_center, 10, 20, 30, 60));
  b.view(ViewId::front_center).signs.push_back(SignDetection::make(
      BoundingBox::make(100, 100, 140, 140), SignClass::yield, 0.7, ViewId::front_center));
  const auto once = assemble(b, layout, FovCrop{0, 0});
  REQUIRE(once.lights.size() == 1);
  CHECK(once.lights[0].box == BoundingBox{10, 20, 30, 60, FrameTag::crop});
  CHECK(once.signs[0].box == BoundingBox{100, 100, 140, 140, FrameTag::crop});

  // Feeding the output back in gives the same result.
  FrameBundle again;
  again.view(ViewId::front_center).size = ImageSize{1280, 720};
  for (auto d : once.lights) {
    d.box.frame = FrameTag::view;
    again.view(ViewId::front_center).lights.push_back(d);
  }
  for (auto d : once.signs) {
    d.box.frame = FrameTag::view;
    again.view(ViewId::front_center).signs.push_back(d);
  }
  const auto twice = assemble(again, layout, FovCrop{0, 0});
  CHECK(twice.lights == once.lights);
  CHECK(twice.signs == once.signs);
}

TEST_CASE("random frames: output boxes stay inside the crop and counts never grow") {
  const auto layout = ViewLayout::multi_view();
  const auto crop = FovCrop::centered_on_front(layout);
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    FrameBundle b = three_views();
    b.stitch_ok = rng.bernoulli(0.9);
    const int n = static_cast<int>(rng.uniform() * 8);
    for (int k = 0; k < n; ++k) {
      const ViewId v = kAllViews[static_cast<std::size_t>(rng.uniform() * 3) % 3];
      const double x0 = rng.uniform(0, 1279);
      const double y0 = rng.uniform(0, 719);
      const double x1 = std::min(1280.0, x0 + rng.uniform(0.5, 200));
      const double y1 = std::min(720.0, y0 + rng.uniform(0.5, 200));
      b.view(v).lights.push_back(light_at(v, x0, y0, x1, y1));
    }
    const auto out = assemble(b, layout, crop);
    CHECK(out.lights.size() <= static_cast<std::size_t>(n));
    for (const auto& d : out.lights) {
      CHECK(d.box.x_min >= 0);
      CHECK(d.box.x_min < d.box.x_max);
      CHECK(d.box.x_max <= 1280);
      CHECK(d.box.y_min >= 0);
      CHECK(d.box.y_min < d.box.y_max);
      CHECK(d.box.y_max <= 720);
    }
  }
}
