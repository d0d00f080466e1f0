#include "containerforge/image_io.hpp"

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace cforge {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw Error(std::string("libpng: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

int color_type_for(int channels) {
  switch (channels) {
    case 1: return PNG_COLOR_TYPE_GRAY;
    case 2: return PNG_COLOR_TYPE_GRAY_ALPHA;
    case 3: return PNG_COLOR_TYPE_RGB;
    case 4: return PNG_COLOR_TYPE_RGBA;
  }
  throw Error("unsupported channel count");
}

template <typename T>
void write_png_impl(const std::filesystem::path& path, const Image<T>& img) {
  constexpr int bit_depth = sizeof(T) * 8;
  if (img.empty()) throw Error("refusing to write empty image " + path.string());
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  try {
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
                 bit_depth, color_type_for(img.channels()), PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if constexpr (bit_depth == 16) png_set_swap(png);
    for (int y = 0; y < img.height(); ++y) {
      auto row = img.row(y);
      png_write_row(png, reinterpret_cast<png_const_bytep>(row.data()));
    }
    png_write_end(png, nullptr);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image8& img) { write_png_impl(path, img); }
void write_png(const std::filesystem::path& path, const Image16& img) { write_png_impl(path, img); }

DecodedPng read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_swap(png);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    auto decode = [&]<typename T>(Image<T> img) -> DecodedPng {
      std::vector<png_bytep> rows(static_cast<std::size_t>(h));
      for (int y = 0; y < h; ++y) rows[y] = reinterpret_cast<png_bytep>(img.row(y).data());
      png_read_image(png, rows.data());
      png_read_end(png, nullptr);
      return img;
    };
    if (depth == 16) return decode(Image16(w, h, channels));
    return decode(Image8(w, h, channels));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

Image8 read_png8(const std::filesystem::path& path) {
  auto decoded = read_png(path);
  if (auto* img = std::get_if<Image8>(&decoded)) return std::move(*img);
  throw Error(path.string() + ": expected 8-bit PNG");
}

Image16 read_png16(const std::filesystem::path& path) {
  auto decoded = read_png(path);
  if (auto* img = std::get_if<Image16>(&decoded)) return std::move(*img);
  throw Error(path.string() + ": expected 16-bit PNG");
}

namespace {

void rgbe_to_float(const unsigned char* rgbe, float* out) {
  if (rgbe[3] == 0) {
    out[0] = out[1] = out[2] = 0.0f;
    return;
  }
  const float f = std::ldexp(1.0f, static_cast<int>(rgbe[3]) - (128 + 8));
  for (int c = 0; c < 3; ++c) out[c] = (static_cast<float>(rgbe[c]) + 0.5f) * f;
}

std::array<unsigned char, 4> float_to_rgbe(const float* rgb) {
  const float v = std::max({rgb[0], rgb[1], rgb[2]});
  if (v < 1e-32f) return {0, 0, 0, 0};
  int e;
  const float m = std::frexp(v, &e) * 256.0f / v;
  return {static_cast<unsigned char>(rgb[0] * m), static_cast<unsigned char>(rgb[1] * m),
          static_cast<unsigned char>(rgb[2] * m), static_cast<unsigned char>(e + 128)};
}

}  // namespace

ImageF read_hdr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("#?", 0) != 0) throw Error(path.string() + ": not a Radiance HDR file");
  while (std::getline(in, line) && !line.empty()) {
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe")
      throw Error(path.string() + ": unsupported HDR format " + line);
  }
  std::getline(in, line);
  std::istringstream res(line);
  std::string ya, xa;
  int h = 0, w = 0;
  res >> ya >> h >> xa >> w;
  if (ya != "-Y" || xa != "+X" || w <= 0 || h <= 0)
    throw Error(path.string() + ": unsupported HDR orientation '" + line + "'");

  ImageF img(w, h, 3);
  std::vector<unsigned char> scan(static_cast<std::size_t>(w) * 4);
  auto read_byte = [&]() -> unsigned char {
    const int c = in.get();
    if (c == EOF) throw Error(path.string() + ": truncated HDR data");
    return static_cast<unsigned char>(c);
  };
  for (int y = 0; y < h; ++y) {
    unsigned char head[4];
    for (auto& b : head) b = read_byte();
    const bool rle = w >= 8 && w < 32768 && head[0] == 2 && head[1] == 2 && (head[2] & 0x80) == 0;
    if (rle) {
      if (((head[2] << 8) | head[3]) != w) throw Error(path.string() + ": bad RLE scanline width");
      for (int c = 0; c < 4; ++c) {
        int x = 0;
        while (x < w) {
          int count = read_byte();
          if (count > 128) {
            count -= 128;
            const unsigned char v = read_byte();
            if (x + count > w) throw Error(path.string() + ": RLE overrun");
            for (int k = 0; k < count; ++k) scan[(x++) * 4 + c] = v;
          } else {
            if (count == 0 || x + count > w) throw Error(path.string() + ": RLE overrun");
            for (int k = 0; k < count; ++k) scan[(x++) * 4 + c] = read_byte();
          }
        }
      }
    } else {
      std::memcpy(scan.data(), head, 4);
      for (std::size_t i = 4; i < scan.size(); ++i) scan[i] = read_byte();
    }
    for (int x = 0; x < w; ++x) rgbe_to_float(&scan[x * 4], &img.at(x, y, 0));
  }
  return img;
}

void write_hdr(const std::filesystem::path& path, const ImageF& rgb) {
  if (rgb.channels() != 3) throw Error("write_hdr expects 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string());
  out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << rgb.height() << " +X " << rgb.width() << "\n";
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x) {
      const auto e = float_to_rgbe(&rgb.at(x, y, 0));
      out.write(reinterpret_cast<const char*>(e.data()), 4);
    }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace cforge
