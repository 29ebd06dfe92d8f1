#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sketcher/canvas.hpp"
#include "sketcher/raster.hpp"
#include "support/fixtures.hpp"

using namespace sketcher;
using sketcher::testing::blank_image;

namespace {

Canvas canvas_with(const std::string& block) {
  ParseResult parsed = parse_script(block);
  REQUIRE(parsed.ok());
  ApplyResult applied = apply(Canvas(blank_image()), *parsed.script);
  REQUIRE(applied.ok());
  return std::move(*applied.canvas);
}

const LineGeom& line_of(const Canvas& canvas, const std::string& id) {
  const Entity* entity = canvas.find(id);
  REQUIRE(entity != nullptr);
  return std::get<LineGeom>(entity->geometry);
}

}  // namespace

TEST_CASE("translate adds the offset to every coordinate") {
  Canvas canvas = canvas_with(
      "create_line l1 0.2 0.2 0.8 0.8 blue\n"
      "translate l1 0.1 0.1\n");
  const LineGeom& line = line_of(canvas, "l1");
  CHECK(line.a.x == doctest::Approx(0.3));
  CHECK(line.a.y == doctest::Approx(0.3));
  CHECK(line.b.x == doctest::Approx(0.9));
  CHECK(line.b.y == doctest::Approx(0.9));
}

TEST_CASE("rotating 90 degrees about the center matches the hand-derived endpoints") {
  Canvas canvas = canvas_with(
      "create_line l1 0.2 0.2 0.8 0.8 blue\n"
      "rotate l1 90 0.5 0.5\n");
  const LineGeom& line = line_of(canvas, "l1");
  CHECK(line.a.x == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(line.a.y == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(line.b.x == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(line.b.y == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("a full turn is the identity within 1e-9") {
  Canvas canvas = canvas_with(
      "create_line l1 0.2 0.2 0.8 0.8 blue\n"
      "rotate l1 360 0.5 0.5\n");
  const LineGeom& line = line_of(canvas, "l1");
  CHECK(std::abs(line.a.x - 0.2) < 1e-9);
  CHECK(std::abs(line.a.y - 0.2) < 1e-9);
  CHECK(std::abs(line.b.x - 0.8) < 1e-9);
  CHECK(std::abs(line.b.y - 0.8) < 1e-9);
}

TEST_CASE("transform on a missing id fails without touching the canvas") {
  Canvas canvas = canvas_with("create_point p1 0.5 0.5 red");
  ParseResult parsed = parse_script("delete p1\ntranslate p1 0.1 0.1\n");
  REQUIRE(parsed.ok());
  ApplyResult applied = apply(canvas, *parsed.script);
  REQUIRE_FALSE(applied.ok());
  CHECK(applied.error->kind == RenderError::Kind::UnknownEntity);
  CHECK(applied.error->entity_id == "p1");
  // Atomicity: the input canvas still has the point and the old turn count.
  CHECK(canvas.find("p1") != nullptr);
  CHECK(canvas.turn() == 1);
}

TEST_CASE("delete then use in the next script is unknown-entity") {
  Canvas canvas = canvas_with("create_line l1 0.2 0.2 0.8 0.8 blue");
  ParseResult del = parse_script("delete l1");
  canvas = std::move(*apply(canvas, *del.script).canvas);
  ParseResult move_cmd = parse_script("translate l1 0.1 0.1");
  ApplyResult applied = apply(canvas, *move_cmd.script);
  REQUIRE_FALSE(applied.ok());
  CHECK(applied.error->kind == RenderError::Kind::UnknownEntity);
}

TEST_CASE("re-creating an id replaces the entity in its original slot") {
  Canvas canvas = canvas_with(
      "create_point a 0.1 0.1 red\n"
      "create_point b 0.2 0.2 blue\n"
      "create_point a 0.9 0.9 green\n");
  REQUIRE(canvas.entities().size() == 2);
  CHECK(canvas.entities()[0].id == "a");  // kept its creation slot
  CHECK(canvas.entities()[1].id == "b");
  CHECK(canvas.entities()[0].color == "green");
  CHECK(std::get<PointGeom>(canvas.entities()[0].geometry).at.x == doctest::Approx(0.9));
}

TEST_CASE("an id can be reused after deletion") {
  Canvas canvas = canvas_with(
      "create_point a 0.1 0.1 red\n"
      "delete a\n"
      "create_point a 0.4 0.4 blue\n");
  REQUIRE(canvas.entities().size() == 1);
  CHECK(canvas.entities()[0].color == "blue");
}

TEST_CASE("rectangles rotate as quadrilaterals") {
  Canvas canvas = canvas_with(
      "create_rectangle r1 0.2 0.2 0.6 0.4 red\n"
      "rotate r1 90 0.4 0.3\n");
  const auto& rect = std::get<RectGeom>(canvas.find("r1")->geometry);
  // The 0.4x0.2 box becomes a 0.2x0.4 box around the same center.
  CHECK(rect.corners[0].x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rect.corners[0].y == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rect.corners[2].x == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rect.corners[2].y == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("property: translate and rotate invert within 1e-9") {
  std::mt19937_64 rng(21);
  auto coord = [&]() { return static_cast<double>(rng() % 1000) / 999.0; };
  for (int trial = 0; trial < 1000; ++trial) {
    Canvas canvas = canvas_with("create_line l1 0.2 0.3 0.7 0.6 blue");
    const LineGeom before = line_of(canvas, "l1");

    double dx = coord() - 0.5, dy = coord() - 0.5;
    double angle = coord() * 720.0 - 360.0;
    double cx = coord(), cy = coord();
    char block[256];
    std::snprintf(block, sizeof(block),
                  "translate l1 %.6f %.6f\nrotate l1 %.6f %.6f %.6f\n"
                  "rotate l1 %.6f %.6f %.6f\ntranslate l1 %.6f %.6f",
                  dx, dy, angle, cx, cy, -angle, cx, cy, -dx, -dy);
    ParseResult parsed = parse_script(block);
    REQUIRE(parsed.ok());
    ApplyResult applied = apply(canvas, *parsed.script);
    REQUIRE(applied.ok());
    const LineGeom after = line_of(*applied.canvas, "l1");
    CHECK(std::abs(after.a.x - before.a.x) < 1e-9);
    CHECK(std::abs(after.a.y - before.a.y) < 1e-9);
    CHECK(std::abs(after.b.x - before.b.x) < 1e-9);
    CHECK(std::abs(after.b.y - before.b.y) < 1e-9);
  }
}

TEST_CASE("transform results may leave the unit square") {
  Canvas canvas = canvas_with(
      "create_point p1 0.9 0.9 red\n"
      "translate p1 0.5 0.5\n");
  const auto& point = std::get<PointGeom>(canvas.find("p1")->geometry);
  CHECK(point.at.x == doctest::Approx(1.4));
}

TEST_CASE("entity signature is sorted, rounded, and delete-aware") {
  Canvas net_zero = canvas_with("create_point p1 0.5 0.5 red\ndelete p1\n");
  CHECK(entity_signature(net_zero).empty());

  Canvas two = canvas_with(
      "create_point z 0.5 0.5 red\n"
      "create_circle a 0.123456 0.5 0.25 green\n");
  CHECK(entity_signature(two) ==
        "circle a 0.123 0.500 0.250 green\npoint z 0.500 0.500 red");
}

TEST_CASE("signature subset test drives the invalid-reflection rule") {
  Canvas parent = canvas_with("create_point p1 0.2 0.2 red");
  // A child whose script merely re-creates p1 identically adds nothing.
  ParseResult redraw = parse_script("create_point p1 0.2 0.2 red");
  Canvas child = std::move(*apply(parent, *redraw.script).canvas);
  CHECK(signature_subset(child, parent));

  ParseResult fresh = parse_script("create_line l1 0.1 0.1 0.9 0.9 blue");
  Canvas grown = std::move(*apply(parent, *fresh.script).canvas);
  CHECK_FALSE(signature_subset(grown, parent));
  CHECK(signature_subset(parent, grown));
}

TEST_CASE("rasterize with no entities reproduces the base image") {
  auto base = blank_image(64, 48);
  Canvas canvas(base);
  Image out = rasterize(canvas);
  CHECK(out.pixels == base->pixels);
}

TEST_CASE("a red point at the center of a 101x101 base lands on pixel (50,50)") {
  Canvas canvas(blank_image(101, 101));
  ParseResult parsed = parse_script("create_point p1 0.5 0.5 red");
  canvas = std::move(*apply(canvas, *parsed.script).canvas);
  Image out = rasterize(canvas);
  CHECK(out.at(50, 50) == Rgb{255, 0, 0});
  // Disk extent: default radius 5, so (50+5,50) is red and (50+7,50) is not.
  CHECK(out.at(55, 50) == Rgb{255, 0, 0});
  CHECK(out.at(57, 50) == Rgb{255, 255, 255});
  CHECK(out.at(50, 45) == Rgb{255, 0, 0});
}

TEST_CASE("rasterize is deterministic down to the encoded bytes") {
  Canvas canvas = canvas_with(
      "create_line l1 0.1 0.1 0.9 0.4 blue\n"
      "create_circle c1 0.5 0.5 0.2 green\n"
      "create_arrow a1 0.2 0.8 0.8 0.2 purple\n");
  auto first = encode_png(rasterize(canvas));
  auto second = encode_png(rasterize(canvas));
  CHECK(first == second);
}

TEST_CASE("geometry outside the unit square is clipped, not an error") {
  Canvas canvas = canvas_with(
      "create_point p1 0.9 0.9 red\n"
      "translate p1 0.6 0.6\n");
  Image out = rasterize(canvas);  // entity fully off-canvas
  CHECK(out.pixels == blank_image()->pixels);
}

TEST_CASE("permuting non-overlapping entities changes no pixels") {
  Canvas ab = canvas_with(
      "create_point a 0.2 0.2 red\n"
      "create_point b 0.8 0.8 blue\n");
  Canvas ba = canvas_with(
      "create_point b 0.8 0.8 blue\n"
      "create_point a 0.2 0.2 red\n");
  CHECK(rasterize(ab).pixels == rasterize(ba).pixels);
}

TEST_CASE("render pixel sizes below one are rejected") {
  Canvas canvas = canvas_with("create_point p1 0.5 0.5 red");
  RenderConfig config;
  config.stroke_width_px = 0;
  CHECK_THROWS_AS((void)rasterize(canvas, config), std::invalid_argument);
}

TEST_CASE("PNG bytes round-trip through the codec") {
  Image image(33, 17, {12, 200, 99});
  image.set(5, 7, {1, 2, 3});
  image.set(32, 16, {250, 0, 50});
  auto bytes = encode_png(image);
  Image back = decode_png(bytes.data(), bytes.size());
  CHECK(back.width == image.width);
  CHECK(back.height == image.height);
  CHECK(back.pixels == image.pixels);
}

TEST_CASE("decode_png rejects junk") {
  std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK_THROWS_AS(decode_png(junk.data(), junk.size()), ImageIoError);
}
