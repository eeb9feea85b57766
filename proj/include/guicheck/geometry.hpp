#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace guicheck {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Builds an Rgb from untrusted integers; throws SyntaxError when a channel leaves [0,255].
Rgb make_rgb(long r, long g, long b);

std::string to_hex(Rgb c);

/// Euclidean distance in RGB space.
double color_distance(Rgb a, Rgb b);

/// sqrt(3) * 255, the largest possible color_distance.
inline constexpr double kMaxColorDistance = 441.6729559300637;

/// Threshold below which two colors are considered the same (strict).
inline constexpr double kColorMatchThreshold = 80.0;

inline bool colors_match(Rgb a, Rgb b) { return color_distance(a, b) < kColorMatchThreshold; }

struct Bounds {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  friend bool operator==(const Bounds&, const Bounds&) = default;

  bool valid() const { return x >= 0 && y >= 0 && w > 0 && h > 0; }
  bool contains(const Bounds& inner) const {
    return inner.x >= x && inner.y >= y && inner.x + inner.w <= x + w && inner.y + inner.h <= y + h;
  }
  /// Intersection with another rectangle; nullopt when empty.
  std::optional<Bounds> intersect(const Bounds& other) const;
};

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major

  RasterImage() = default;
  RasterImage(int w, int h, Rgb fill = {});

  bool empty() const { return width <= 0 || height <= 0; }
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  void fill_rect(const Bounds& rect, Rgb color);
  RasterImage crop(const Bounds& rect) const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Most frequent color after quantizing each channel into 8 buckets; the
/// winning bucket's pixels are averaged. Ties go to the lowest bucket index.
/// Throws EmptyInput for an empty image.
Rgb dominant_color(const RasterImage& img);

/// Nearest-neighbour resample to an explicit size.
RasterImage resize_nearest(const RasterImage& img, int width, int height);

/// Uniform scale by factor (result dimensions rounded, at least 1x1).
RasterImage scale_image(const RasterImage& img, double factor);

}  // namespace guicheck
