#pragma once

#include "guicheck/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace guicheck {

/// PNG encode/decode through libpng. Alpha is dropped on read; output is 8-bit RGB.
std::vector<std::uint8_t> encode_png(const RasterImage& img);
RasterImage decode_png(const std::vector<std::uint8_t>& bytes);

void write_png(const std::filesystem::path& path, const RasterImage& img);
RasterImage read_png(const std::filesystem::path& path);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

/// 64-bit FNV-1a over raw bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace guicheck
