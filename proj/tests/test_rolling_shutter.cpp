#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "vlpdr/error.hpp"
#include "vlpdr/occ_codec.hpp"
#include "vlpdr/rolling_shutter.hpp"

using namespace vlpdr;

namespace {

LedFixture fixture_at(double x, double y) {
  LedFixture f;
  f.id = LedId(Bits(20, 0));
  f.world_xy = {x, y};
  return f;
}

Bits random_stream(std::mt19937_64& rng) {
  Bits id(20);
  for (auto& b : id) b = rng() & 1u;
  return encode_id(LedId(id), PacketSchema{});
}

}  // namespace

TEST_CASE("camera timing") {
  const CameraModel cam;
  CHECK(rows_per_bit(cam, LedFixture{}) == doctest::Approx(10.0 / 3.0));
  CameraModel slow = cam;
  slow.row_readout_time = 1e-3;
  CHECK_THROWS_AS(slow.validate(), ContractViolation);
}

TEST_CASE("pinhole projection") {
  CameraModel cam;
  const auto under = project_roi(cam, fixture_at(2, 3), {2, 3});
  CHECK(under.valid);
  CHECK_FALSE(under.clipped);
  CHECK(under.center_px.x() == doctest::Approx(320));
  CHECK(under.center_px.y() == doctest::Approx(240));
  CHECK(under.radius_px == doctest::Approx(500 * 0.25 / 2.0));

  cam.focal_scale = 1000;
  LedFixture small = fixture_at(0, 0);
  small.radius = 0.09;
  CHECK(project_roi(cam, small, {0, 0}).radius_px == doctest::Approx(45));
  // LED 0.2 m east of the phone appears 100 px to the right.
  const auto east = project_roi(cam, small, {-0.2, 0});
  CHECK(east.center_px.x() - 320 == doctest::Approx(100));
  // LED north of the phone appears above the center.
  const auto north = project_roi(cam, small, {0, -0.2});
  CHECK(north.center_px.y() - 240 == doctest::Approx(-100));

  const auto far = project_roi(cam, small, {5, 5});
  CHECK_FALSE(far.valid);
  const auto edge = project_roi(CameraModel{}, fixture_at(0, 0), {1.2, 0});
  CHECK(edge.valid);
  CHECK(edge.clipped);
}

TEST_CASE("rendered rows follow the stream") {
  std::mt19937_64 rng(4);
  const CameraModel cam;
  const LedFixture fx = fixture_at(0, 0);
  const double rpb = rows_per_bit(cam, fx);
  const Bits stream = random_stream(rng);
  const auto roi = project_roi(cam, fx, {0, 0});
  const double phase = 17.4;
  const auto img = render_frame(cam, fx, stream, phase, roi);
  for (int y = 200; y < 280; ++y) {
    const long idx = static_cast<long>(std::floor(phase + y / rpb));
    const int expected = stream[static_cast<std::size_t>(idx % 36)] ? 230 : 64;
    CHECK(static_cast<int>(img.pixels(y, 320)) == expected);
  }
  CHECK(img.pixels(0, 0) == 13);  // background
  CHECK(img.last_bit - img.first_bit + 1 >= 37);
}

TEST_CASE("all-ones stream renders a uniform disc") {
  const CameraModel cam;
  const LedFixture fx = fixture_at(0, 0);
  const auto img = render_frame(cam, fx, Bits(36, 1), 0.0, project_roi(cam, fx, {0, 0}));
  for (int y = 190; y < 290; ++y) CHECK(img.pixels(y, 320) == 230);
}

TEST_CASE("render preconditions") {
  CameraModel cam;
  const LedFixture fx = fixture_at(0, 0);
  const auto roi = project_roi(cam, fx, {0, 0});
  CHECK_THROWS_AS(render_frame(cam, fx, Bits(36, 1), 0.0, RoiObservation{}), ContractViolation);
  cam.row_readout_time = 40e-6;  // 1.67 rows per bit
  CHECK_THROWS_AS(render_frame(cam, fx, Bits(36, 1), 0.0, roi), UnsupportedDensity);
}

TEST_CASE("ROI extraction") {
  std::mt19937_64 rng(8);
  const CameraModel cam;
  const LedFixture fx = fixture_at(0, 0);
  std::uniform_real_distribution<double> offset(-0.5, 0.5);

  SUBCASE("noiseless") {
    for (int t = 0; t < 30; ++t) {
      const auto roi = project_roi(cam, fx, {offset(rng), 0.6 * offset(rng)});
      REQUIRE_FALSE(roi.clipped);
      const auto img = render_frame(cam, fx, random_stream(rng), static_cast<double>(rng() % 36), roi);
      const auto found = extract_roi(img);
      REQUIRE(found.valid);
      CHECK((found.center_px - roi.center_px).norm() < 1.0);
      CHECK(std::abs(found.radius_px - roi.radius_px) < 0.05 * roi.radius_px);
    }
  }
  SUBCASE("pixel noise") {
    int within = 0;
    for (int t = 0; t < 100; ++t) {
      const auto roi = project_roi(cam, fx, {offset(rng), 0.6 * offset(rng)});
      RenderNoise noise{8.0 / 255.0, 0, rng()};
      const auto img = render_frame(cam, fx, random_stream(rng), static_cast<double>(rng() % 36), roi, noise);
      const auto found = extract_roi(img);
      within += found.valid && (found.center_px - roi.center_px).norm() < 3.0;
    }
    CHECK(within == 100);
  }
  SUBCASE("background only") {
    const GrayImage blank = GrayImage::Constant(cam.rows, cam.cols, 13);
    CHECK_FALSE(extract_roi(blank, 10.0 / 3.0).valid);
  }
}

TEST_CASE("column profile and demodulation recover the visible window") {
  std::mt19937_64 rng(21);
  const CameraModel cam;
  const LedFixture fx = fixture_at(0, 0);
  for (int t = 0; t < 100; ++t) {
    const Bits stream = random_stream(rng);
    const auto roi = project_roi(cam, fx, {0, 0});
    const auto img = render_frame(cam, fx, stream, static_cast<double>(rng() % 36) + 0.3, roi);
    const auto found = extract_roi(img);
    const Bits got = demodulate_frame(roi_profile(img.pixels, found), img.rows_per_bit);
    std::string truth;
    for (long b = img.first_bit; b <= img.last_bit; ++b) truth += static_cast<char>('0' + stream[b % 36]);
    // The profile stays a margin inside the disc, so it reads a sub-window.
    CHECK(truth.find(bits_to_string(got)) != std::string::npos);
    CHECK(got.size() >= 35);
  }
}

TEST_CASE("otsu and pgm") {
  GrayImage img(4, 4);
  img << 10, 10, 10, 10, 10, 10, 10, 10, 200, 200, 200, 200, 200, 200, 200, 200;
  const int t = otsu_threshold(img);
  CHECK(t >= 10);
  CHECK(t < 200);

  const auto path = std::filesystem::temp_directory_path() / "vlpdr_test.pgm";
  write_pgm(path.string(), img);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  CHECK(magic == "P5");
  CHECK(w == 4);
  CHECK(h == 4);
  CHECK(maxv == 255);
  CHECK(std::filesystem::file_size(path) == 4 * 4 + std::string("P5\n4 4\n255\n").size());
}
