#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sketcher {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width*height*3 bytes

  Image() = default;
  Image(int w, int h, Rgb fill = {255, 255, 255});

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb color);
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
};

// PNG round-trip. Decoding accepts common PNG layouts and converts to RGB;
// encoding always writes 8-bit RGB with fixed settings so identical pixel
// data produces identical bytes. Failures throw ImageIoError.
struct ImageIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(const std::uint8_t* data, std::size_t size);

Image load_png(const std::string& path);
void save_png(const Image& image, const std::string& path);

// Named color table shared by the DSL and the rasterizer.
Rgb color_from_name(const std::string& name);

}  // namespace sketcher
