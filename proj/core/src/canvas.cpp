#include "sketcher/canvas.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace sketcher {

const Entity* Canvas::find(std::string_view id) const {
  for (const Entity& e : entities_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

Entity* Canvas::find(std::string_view id) {
  return const_cast<Entity*>(std::as_const(*this).find(id));
}

void Canvas::upsert(Entity entity) {
  for (Entity& e : entities_) {
    if (e.id == entity.id) {
      e = std::move(entity);  // replace in the original creation slot
      return;
    }
  }
  entities_.push_back(std::move(entity));
}

bool Canvas::erase(std::string_view id) {
  auto it = std::find_if(entities_.begin(), entities_.end(),
                         [&](const Entity& e) { return e.id == id; });
  if (it == entities_.end()) return false;
  entities_.erase(it);
  return true;
}

Vec2 rotate_point(Vec2 p, double angle_degrees, Vec2 center) {
  double t = angle_degrees * std::numbers::pi / 180.0;
  double c = std::cos(t);
  double s = std::sin(t);
  double dx = p.x - center.x;
  double dy = p.y - center.y;
  // y grows downward, so this matrix turns clockwise on screen.
  return {center.x + c * dx - s * dy, center.y + s * dx + c * dy};
}

namespace {

void translate_geometry(Geometry& g, double dx, double dy) {
  auto shift = [&](Vec2& v) {
    v.x += dx;
    v.y += dy;
  };
  std::visit(
      [&](auto& geom) {
        using T = std::decay_t<decltype(geom)>;
        if constexpr (std::is_same_v<T, PointGeom>) {
          shift(geom.at);
        } else if constexpr (std::is_same_v<T, LineGeom>) {
          shift(geom.a);
          shift(geom.b);
        } else if constexpr (std::is_same_v<T, CircleGeom>) {
          shift(geom.center);
        } else if constexpr (std::is_same_v<T, RectGeom>) {
          for (Vec2& c : geom.corners) shift(c);
        } else {
          shift(geom.tail);
          shift(geom.head);
        }
      },
      g);
}

void rotate_geometry(Geometry& g, double angle, Vec2 center) {
  auto rot = [&](Vec2& v) { v = rotate_point(v, angle, center); };
  std::visit(
      [&](auto& geom) {
        using T = std::decay_t<decltype(geom)>;
        if constexpr (std::is_same_v<T, PointGeom>) {
          rot(geom.at);
        } else if constexpr (std::is_same_v<T, LineGeom>) {
          rot(geom.a);
          rot(geom.b);
        } else if constexpr (std::is_same_v<T, CircleGeom>) {
          rot(geom.center);  // radius is rotation-invariant
        } else if constexpr (std::is_same_v<T, RectGeom>) {
          for (Vec2& c : geom.corners) rot(c);
        } else {
          rot(geom.tail);
          rot(geom.head);
        }
      },
      g);
}

struct CommandApplier {
  Canvas& canvas;
  std::size_t index;
  std::optional<RenderError>& error;

  void fail(const std::string& id) {
    error = RenderError{RenderError::Kind::UnknownEntity, id, index,
                        "no entity with id '" + id + "'"};
  }

  int turn() const { return canvas.turn(); }

  void operator()(const CreatePointCmd& c) {
    canvas.upsert({c.id, PointGeom{{c.x, c.y}}, c.color, turn()});
  }
  void operator()(const CreateLineCmd& c) {
    canvas.upsert({c.id, LineGeom{{c.x1, c.y1}, {c.x2, c.y2}}, c.color, turn()});
  }
  void operator()(const CreateCircleCmd& c) {
    canvas.upsert({c.id, CircleGeom{{c.cx, c.cy}, c.radius}, c.color, turn()});
  }
  void operator()(const CreateRectangleCmd& c) {
    RectGeom rect{{{c.x1, c.y1}, {c.x2, c.y1}, {c.x2, c.y2}, {c.x1, c.y2}}};
    canvas.upsert({c.id, rect, c.color, turn()});
  }
  void operator()(const CreateArrowCmd& c) {
    canvas.upsert({c.id, ArrowGeom{{c.x1, c.y1}, {c.x2, c.y2}}, c.color, turn()});
  }
  void operator()(const TranslateCmd& c) {
    Entity* e = canvas.find(c.id);
    if (!e) return fail(c.id);
    translate_geometry(e->geometry, c.dx, c.dy);
  }
  void operator()(const RotateCmd& c) {
    Entity* e = canvas.find(c.id);
    if (!e) return fail(c.id);
    rotate_geometry(e->geometry, c.angle, {c.cx, c.cy});
  }
  void operator()(const DeleteCmd& c) {
    if (!canvas.erase(c.id)) fail(c.id);
  }
};

}  // namespace

ApplyResult apply(const Canvas& canvas, const Script& script) {
  Canvas next = canvas;
  next.bump_turn();
  std::optional<RenderError> error;
  for (std::size_t i = 0; i < script.commands.size(); ++i) {
    std::visit(CommandApplier{next, i, error}, script.commands[i]);
    if (error) return {std::nullopt, std::move(error)};
  }
  return {std::move(next), std::nullopt};
}

std::vector<std::string> signature_lines(const Canvas& canvas) {
  std::vector<std::string> lines;
  lines.reserve(canvas.entities().size());
  for (const Entity& e : canvas.entities()) {
    std::string line;
    auto coord = [](double v) { return format_coord(v); };
    std::visit(
        [&](const auto& geom) {
          using T = std::decay_t<decltype(geom)>;
          if constexpr (std::is_same_v<T, PointGeom>) {
            line = "point " + e.id + " " + coord(geom.at.x) + " " + coord(geom.at.y);
          } else if constexpr (std::is_same_v<T, LineGeom>) {
            line = "line " + e.id + " " + coord(geom.a.x) + " " + coord(geom.a.y) +
                   " " + coord(geom.b.x) + " " + coord(geom.b.y);
          } else if constexpr (std::is_same_v<T, CircleGeom>) {
            line = "circle " + e.id + " " + coord(geom.center.x) + " " +
                   coord(geom.center.y) + " " + coord(geom.radius);
          } else if constexpr (std::is_same_v<T, RectGeom>) {
            line = "rectangle " + e.id;
            for (const Vec2& c : geom.corners) {
              line += " " + coord(c.x) + " " + coord(c.y);
            }
          } else {
            line = "arrow " + e.id + " " + coord(geom.tail.x) + " " +
                   coord(geom.tail.y) + " " + coord(geom.head.x) + " " +
                   coord(geom.head.y);
          }
        },
        e.geometry);
    line += " " + e.color;
    lines.push_back(std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  return lines;
}

std::string entity_signature(const Canvas& canvas) {
  std::string out;
  for (const std::string& line : signature_lines(canvas)) {
    if (!out.empty()) out += '\n';
    out += line;
  }
  return out;
}

bool signature_subset(const Canvas& child, const Canvas& parent) {
  auto child_lines = signature_lines(child);
  auto parent_lines = signature_lines(parent);
  return std::includes(parent_lines.begin(), parent_lines.end(),
                       child_lines.begin(), child_lines.end());
}

}  // namespace sketcher
