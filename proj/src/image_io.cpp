#include "guicheck/image_io.hpp"

#include "guicheck/error.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

namespace guicheck {

namespace {

struct PngImageGuard {
  png_image image{};
  PngImageGuard() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImageGuard() { png_image_free(&image); }
};

}  // namespace

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  if (img.empty()) fail(ErrorCode::EmptyInput, "cannot encode empty image");
  static_assert(sizeof(Rgb) == 3, "Rgb must be tightly packed");

  PngImageGuard guard;
  guard.image.width = static_cast<png_uint_32>(img.width);
  guard.image.height = static_cast<png_uint_32>(img.height);
  guard.image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&guard.image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::IoError, std::string("png size query failed: ") + guard.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&guard.image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::IoError, std::string("png encode failed: ") + guard.image.message);
  }
  out.resize(size);
  return out;
}

RasterImage decode_png(const std::vector<std::uint8_t>& bytes) {
  PngImageGuard guard;
  if (!png_image_begin_read_from_memory(&guard.image, bytes.data(), bytes.size())) {
    fail(ErrorCode::IoError, std::string("png header: ") + guard.image.message);
  }
  guard.image.format = PNG_FORMAT_RGB;
  RasterImage img(static_cast<int>(guard.image.width), static_cast<int>(guard.image.height));
  if (!png_image_finish_read(&guard.image, nullptr, img.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::IoError, std::string("png decode: ") + guard.image.message);
  }
  return img;
}

void write_png(const std::filesystem::path& path, const RasterImage& img) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

RasterImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace guicheck
