#pragma once

#include <filesystem>
#include <variant>

#include "containerforge/image.hpp"

namespace cforge {

// Lossless PNG encode. Channels 1 (gray), 3 (RGB) or 4 (RGBA). No time or text
// chunks are written so files are byte-reproducible.
void write_png(const std::filesystem::path& path, const Image8& img);
void write_png(const std::filesystem::path& path, const Image16& img);

// Decoded PNG keeps its native bit depth; palettes are expanded to RGB(A).
using DecodedPng = std::variant<Image8, Image16>;
DecodedPng read_png(const std::filesystem::path& path);
Image8 read_png8(const std::filesystem::path& path);
Image16 read_png16(const std::filesystem::path& path);

// Radiance RGBE (.hdr), both flat and new-style RLE scanlines.
ImageF read_hdr(const std::filesystem::path& path);
void write_hdr(const std::filesystem::path& path, const ImageF& rgb);

}  // namespace cforge
