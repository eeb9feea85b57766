#include "guicheck/geometry.hpp"

#include "guicheck/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace guicheck {

Rgb make_rgb(long r, long g, long b) {
  auto in_range = [](long v) { return v >= 0 && v <= 255; };
  if (!in_range(r) || !in_range(g) || !in_range(b)) {
    fail(ErrorCode::SyntaxError, "rgb channel outside [0,255]");
  }
  return Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

std::string to_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

double color_distance(Rgb a, Rgb b) {
  const double dr = static_cast<double>(a.r) - b.r;
  const double dg = static_cast<double>(a.g) - b.g;
  const double db = static_cast<double>(a.b) - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

std::optional<Bounds> Bounds::intersect(const Bounds& other) const {
  const int x0 = std::max(x, other.x);
  const int y0 = std::max(y, other.y);
  const int x1 = std::min(x + w, other.x + other.w);
  const int y1 = std::min(y + h, other.y + other.h);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return Bounds{x0, y0, x1 - x0, y1 - y0};
}

RasterImage::RasterImage(int w, int h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill) {}

void RasterImage::fill_rect(const Bounds& rect, Rgb color) {
  auto clipped = rect.intersect(Bounds{0, 0, width, height});
  if (!clipped) return;
  for (int y = clipped->y; y < clipped->y + clipped->h; ++y) {
    std::fill_n(pixels.begin() + static_cast<std::ptrdiff_t>(y) * width + clipped->x, clipped->w, color);
  }
}

RasterImage RasterImage::crop(const Bounds& rect) const {
  auto clipped = rect.intersect(Bounds{0, 0, width, height});
  if (!clipped) return {};
  RasterImage out(clipped->w, clipped->h);
  for (int y = 0; y < clipped->h; ++y) {
    for (int x = 0; x < clipped->w; ++x) {
      out.at(x, y) = at(clipped->x + x, clipped->y + y);
    }
  }
  return out;
}

Rgb dominant_color(const RasterImage& img) {
  if (img.empty()) fail(ErrorCode::EmptyInput, "dominant_color of empty image");

  constexpr int kBuckets = 8;
  constexpr int kBucketWidth = 256 / kBuckets;
  auto bucket_of = [](Rgb c) {
    return (c.r / kBucketWidth) * kBuckets * kBuckets + (c.g / kBucketWidth) * kBuckets + c.b / kBucketWidth;
  };

  std::array<std::uint32_t, kBuckets * kBuckets * kBuckets> counts{};
  for (const Rgb& p : img.pixels) ++counts[bucket_of(p)];
  const auto winner = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());

  std::uint64_t sr = 0, sg = 0, sb = 0;
  for (const Rgb& p : img.pixels) {
    if (bucket_of(p) != winner) continue;
    sr += p.r;
    sg += p.g;
    sb += p.b;
  }
  const double n = counts[winner];
  return Rgb{static_cast<std::uint8_t>(std::lround(sr / n)), static_cast<std::uint8_t>(std::lround(sg / n)),
             static_cast<std::uint8_t>(std::lround(sb / n))};
}

RasterImage resize_nearest(const RasterImage& img, int width, int height) {
  RasterImage out(width, height);
  if (img.empty()) return out;
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y) {
    const int src_y = std::min(img.height - 1, static_cast<int>((y + 0.5) * sy));
    for (int x = 0; x < width; ++x) {
      const int src_x = std::min(img.width - 1, static_cast<int>((x + 0.5) * sx));
      out.at(x, y) = img.at(src_x, src_y);
    }
  }
  return out;
}

RasterImage scale_image(const RasterImage& img, double factor) {
  const int w = std::max(1, static_cast<int>(std::lround(img.width * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height * factor)));
  return resize_nearest(img, w, h);
}

}  // namespace guicheck
