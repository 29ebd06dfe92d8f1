#pragma once

#include "sketcher/canvas.hpp"
#include "sketcher/image.hpp"

namespace sketcher {

struct RenderConfig {
  int stroke_width_px = 3;
  int point_radius_px = 5;
  int arrowhead_len_px = 12;
  double arrowhead_angle = 28.0;  // degrees between shaft and each head stroke
  bool strict_coords = true;      // forwarded to the parser by callers
};

// Draws the canvas entities over the base image in creation order and
// returns the composited bitmap. Normalized (x,y) maps to pixel
// (round(x*(W-1)), round(y*(H-1))); geometry beyond the unit square is
// clipped. Output is deterministic: identical inputs give identical pixels.
Image rasterize(const Canvas& canvas, const RenderConfig& config = {});

}  // namespace sketcher
