#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sketcher/dsl.hpp"
#include "sketcher/image.hpp"

namespace sketcher {

struct Vec2 {
  double x = 0;
  double y = 0;
  bool operator==(const Vec2&) const = default;
};

struct PointGeom {
  Vec2 at;
};
struct LineGeom {
  Vec2 a, b;
};
struct CircleGeom {
  Vec2 center;
  double radius = 0;
};
// Rectangles are stored as four corners so rotation keeps the quad.
struct RectGeom {
  Vec2 corners[4];
};
struct ArrowGeom {
  Vec2 tail, head;
};

using Geometry = std::variant<PointGeom, LineGeom, CircleGeom, RectGeom, ArrowGeom>;

struct Entity {
  std::string id;
  Geometry geometry;
  std::string color;
  int created_turn = 0;  // canvas.turn value when this entity was (re)created
};

// Immutable drawing state layered over a base chart image. apply() returns
// a new Canvas; entity iteration order is creation order.
class Canvas {
 public:
  Canvas() = default;
  explicit Canvas(std::shared_ptr<const Image> base) : base_(std::move(base)) {}

  const std::shared_ptr<const Image>& base_image() const { return base_; }
  const std::vector<Entity>& entities() const { return entities_; }
  int turn() const { return turn_; }

  const Entity* find(std::string_view id) const;
  Entity* find(std::string_view id);
  bool empty() const { return entities_.empty(); }

  // Mutators used by apply(); they act on a working copy.
  void upsert(Entity entity);
  bool erase(std::string_view id);
  void bump_turn() { ++turn_; }

 private:
  std::shared_ptr<const Image> base_;
  std::vector<Entity> entities_;
  int turn_ = 0;
};

struct RenderError {
  enum class Kind { UnknownEntity };
  Kind kind = Kind::UnknownEntity;
  std::string entity_id;
  std::size_t command_index = 0;  // offending command within the script
  std::string message;
};

struct ApplyResult {
  std::optional<Canvas> canvas;
  std::optional<RenderError> error;

  bool ok() const { return canvas.has_value(); }
};

// Applies one script atomically: on any failure the input canvas is the
// still-valid state and error is set. Create on an existing id replaces
// the entity in its original creation slot; transform results may leave
// the unit square (only literal command arguments are range-checked, at
// parse time).
ApplyResult apply(const Canvas& canvas, const Script& script);

// Sorted multiline canonical description of live entities (id, geometry
// rounded to three decimals, color). Line-set containment implements the
// invalid-reflection subset test.
std::string entity_signature(const Canvas& canvas);
std::vector<std::string> signature_lines(const Canvas& canvas);

// True when every signature line of child also appears in parent.
bool signature_subset(const Canvas& child, const Canvas& parent);

Vec2 rotate_point(Vec2 p, double angle_degrees, Vec2 center);

}  // namespace sketcher
