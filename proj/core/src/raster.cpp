#include "sketcher/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sketcher {
namespace {

struct PixelSpace {
  double sx, sy;  // normalized -> pixel scale per axis

  // Anchor coordinates land on whole pixels: round(x*(W-1)), round(y*(H-1)).
  double px(double x) const { return std::round(x * sx); }
  double py(double y) const { return std::round(y * sy); }
};

double dist_to_segment(double x, double y, double ax, double ay, double bx, double by) {
  double dx = bx - ax;
  double dy = by - ay;
  double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((x - ax) * dx + (y - ay) * dy) / len2, 0.0, 1.0);
  }
  double cx = ax + t * dx;
  double cy = ay + t * dy;
  return std::hypot(x - cx, y - cy);
}

struct Painter {
  Image& img;

  void fill_box(int x0, int y0, int x1, int y1, Rgb color, auto&& covers) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, img.width - 1);
    y1 = std::min(y1, img.height - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (covers(static_cast<double>(x), static_cast<double>(y))) {
          img.set(x, y, color);
        }
      }
    }
  }

  void disk(double cx, double cy, double r, Rgb color) {
    fill_box(static_cast<int>(std::floor(cx - r)), static_cast<int>(std::floor(cy - r)),
             static_cast<int>(std::ceil(cx + r)), static_cast<int>(std::ceil(cy + r)),
             color, [&](double x, double y) {
               return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
             });
  }

  void segment(double ax, double ay, double bx, double by, double half_width, Rgb color) {
    double pad = half_width + 1.0;
    fill_box(static_cast<int>(std::floor(std::min(ax, bx) - pad)),
             static_cast<int>(std::floor(std::min(ay, by) - pad)),
             static_cast<int>(std::ceil(std::max(ax, bx) + pad)),
             static_cast<int>(std::ceil(std::max(ay, by) + pad)), color,
             [&](double x, double y) {
               return dist_to_segment(x, y, ax, ay, bx, by) <= half_width;
             });
  }

  void ring(double cx, double cy, double r, double half_width, Rgb color) {
    double pad = r + half_width + 1.0;
    fill_box(static_cast<int>(std::floor(cx - pad)), static_cast<int>(std::floor(cy - pad)),
             static_cast<int>(std::ceil(cx + pad)), static_cast<int>(std::ceil(cy + pad)),
             color, [&](double x, double y) {
               double d = std::hypot(x - cx, y - cy);
               return std::abs(d - r) <= half_width;
             });
  }
};

void draw_arrowhead(Painter& p, double tail_x, double tail_y, double head_x,
                    double head_y, const RenderConfig& cfg, Rgb color) {
  double dx = head_x - tail_x;
  double dy = head_y - tail_y;
  double len = std::hypot(dx, dy);
  if (len <= 0.0) return;
  double ux = dx / len;
  double uy = dy / len;
  double angle = cfg.arrowhead_angle * std::numbers::pi / 180.0;
  double c = std::cos(angle);
  double s = std::sin(angle);
  double half = cfg.stroke_width_px / 2.0;
  // Two strokes sweeping back from the head at +/- the head angle.
  for (double sign : {1.0, -1.0}) {
    double rx = -(ux * c - sign * uy * s) * cfg.arrowhead_len_px;
    double ry = -(sign * ux * s + uy * c) * cfg.arrowhead_len_px;
    p.segment(head_x, head_y, head_x + rx, head_y + ry, half, color);
  }
}

}  // namespace

Image rasterize(const Canvas& canvas, const RenderConfig& config) {
  if (!canvas.base_image()) {
    throw ImageIoError("canvas has no base image");
  }
  if (config.stroke_width_px < 1 || config.point_radius_px < 1 ||
      config.arrowhead_len_px < 1) {
    throw std::invalid_argument("render pixel sizes must be >= 1");
  }
  Image out = *canvas.base_image();
  PixelSpace space{static_cast<double>(out.width - 1),
                   static_cast<double>(out.height - 1)};
  Painter painter{out};
  double half = config.stroke_width_px / 2.0;
  double radius_scale = static_cast<double>(std::min(out.width, out.height) - 1);

  for (const Entity& e : canvas.entities()) {
    Rgb color = color_from_name(e.color);
    std::visit(
        [&](const auto& geom) {
          using T = std::decay_t<decltype(geom)>;
          if constexpr (std::is_same_v<T, PointGeom>) {
            painter.disk(space.px(geom.at.x), space.py(geom.at.y),
                         config.point_radius_px, color);
          } else if constexpr (std::is_same_v<T, LineGeom>) {
            painter.segment(space.px(geom.a.x), space.py(geom.a.y),
                            space.px(geom.b.x), space.py(geom.b.y), half, color);
          } else if constexpr (std::is_same_v<T, CircleGeom>) {
            painter.ring(space.px(geom.center.x), space.py(geom.center.y),
                         std::round(geom.radius * radius_scale), half, color);
          } else if constexpr (std::is_same_v<T, RectGeom>) {
            for (int i = 0; i < 4; ++i) {
              const Vec2& a = geom.corners[i];
              const Vec2& b = geom.corners[(i + 1) % 4];
              painter.segment(space.px(a.x), space.py(a.y), space.px(b.x),
                              space.py(b.y), half, color);
            }
          } else {
            double tx = space.px(geom.tail.x);
            double ty = space.py(geom.tail.y);
            double hx = space.px(geom.head.x);
            double hy = space.py(geom.head.y);
            painter.segment(tx, ty, hx, hy, half, color);
            draw_arrowhead(painter, tx, ty, hx, hy, config, color);
          }
        },
        e.geometry);
  }
  return out;
}

}  // namespace sketcher
