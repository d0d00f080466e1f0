#include <cmath>

#include "containerforge/image_io.hpp"
#include "containerforge/texture.hpp"

namespace cforge {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kOrange{240, 130, 20};
constexpr Rgb kRed{205, 30, 35};
constexpr Rgb kGreen{20, 140, 70};
constexpr Rgb kWhite{245, 245, 245};
constexpr Rgb kYellow{250, 215, 30};
constexpr Rgb kBlue{30, 80, 190};
constexpr Rgb kBlack{15, 15, 15};
constexpr Rgb kGrey{120, 120, 120};

struct Seed {
  const char* code;
  Rgb top, bottom, ink;
};

// Placeholder art: two-tone diamond, inset border, class number and a symbol.
constexpr std::array<Seed, 26> kSeeds{{
    {"C1.1", kOrange, kOrange, kBlack}, {"C1.2", kOrange, kOrange, kBlack}, {"C1.3", kOrange, kOrange, kBlack},
    {"C1.4", kOrange, kOrange, kGrey},  {"C2.1", kRed, kRed, kBlack},       {"C2.2", kGreen, kGreen, kBlack},
    {"C2.3", kWhite, kWhite, kBlack},   {"C2.4", kYellow, kYellow, kBlack}, {"C2.5", kBlue, kBlue, kWhite},
    {"C3.1", kRed, kRed, kBlack},       {"C3.2", kRed, kRed, kWhite},       {"C4.1", kWhite, kRed, kBlack},
    {"C4.2", kWhite, kRed, kBlack},     {"C4.3", kBlue, kBlue, kWhite},     {"C4.4", kRed, kWhite, kBlack},
    {"C5.1", kYellow, kYellow, kBlack}, {"C5.2", kRed, kYellow, kBlack},    {"C5.3", kYellow, kRed, kBlack},
    {"C6.1", kWhite, kWhite, kBlack},   {"C6.2", kWhite, kWhite, kRed},     {"C7.1", kWhite, kWhite, kBlack},
    {"C7.2", kYellow, kWhite, kBlack},  {"C7.3", kYellow, kWhite, kRed},    {"C7.4", kWhite, kWhite, kRed},
    {"C8.1", kWhite, kBlack, kBlack},   {"C9.1", kWhite, kWhite, kBlack},
}};

}  // namespace

MarkerCatalog::MarkerCatalog() {
  int id = 1;
  for (const auto& s : kSeeds) entries_.push_back({s.code, id++, s.top, s.bottom, s.ink, std::nullopt});
}

std::optional<std::size_t> MarkerCatalog::find(std::string_view code) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].code == code) return i;
  return std::nullopt;
}

int MarkerCatalog::load_art(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("marker art directory not found: " + dir.string());
  int loaded = 0;
  for (auto& e : entries_) {
    const auto path = dir / (e.code + ".png");
    if (!std::filesystem::exists(path)) continue;
    Image8 img = read_png8(path);
    Image8 rgba(img.width(), img.height(), 4);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        const int c = img.channels();
        for (int k = 0; k < 3; ++k) rgba.at(x, y, k) = img.at(x, y, c >= 3 ? k : 0);
        rgba.at(x, y, 3) = (c == 2 || c == 4) ? img.at(x, y, c - 1) : 255;
      }
    e.art = std::move(rgba);
    ++loaded;
  }
  return loaded;
}

Image8 MarkerCatalog::render(std::size_t index, int w, int h) const {
  const MarkerEntry& e = entries_.at(index);
  if (w < 1 || h < 1) throw Error("marker size must be positive");
  Image8 out(w, h, 4);
  if (e.art) {
    const Image8& art = *e.art;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int sx = std::min(art.width() - 1, (2 * x + 1) * art.width() / (2 * w));
        const int sy = std::min(art.height() - 1, (2 * y + 1) * art.height() / (2 * h));
        for (int k = 0; k < 4; ++k) out.at(x, y, k) = art.at(sx, sy, k);
      }
    return out;
  }

  const double border = std::max(1.5, 0.06 * std::min(w, h));
  const int group = e.code[1] - '0';
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = std::abs(x + 0.5 - w / 2.0) / (w / 2.0);
      const double dy = std::abs(y + 0.5 - h / 2.0) / (h / 2.0);
      const double m = dx + dy;
      if (m > 1.0) continue;
      Rgb c = (y < h / 2) ? e.top : e.bottom;
      const double inset = m * std::min(w, h) / 2.0;
      const double edge = std::min(w, h) / 2.0 - inset;
      if (edge > border && edge < 2 * border) c = e.ink;
      // Symbol in the upper half, shape varies by hazard group.
      const double sx = (x + 0.5 - w / 2.0) / w, sy = (y + 0.5 - 0.32 * h) / h;
      bool symbol = false;
      switch (group % 3) {
        case 0: symbol = sx * sx + sy * sy < 0.008; break;
        case 1: symbol = sy > -0.09 && sy < 0.06 && std::abs(sx) < 0.5 * (sy + 0.09); break;
        default: symbol = std::abs(sx) < 0.03 + 0.02 * (group % 2) && std::abs(sy) < 0.09; break;
      }
      if (symbol) c = e.ink;
      for (int k = 0; k < 3; ++k) out.at(x, y, k) = c[static_cast<std::size_t>(k)];
      out.at(x, y, 3) = 255;
    }
  const Image8 label = render_text(std::string_view(e.code).substr(1), std::max(1, w / 40), false);
  const int lx = (w - label.width()) / 2, ly = static_cast<int>(0.58 * h);
  for (int y = 0; y < label.height(); ++y)
    for (int x = 0; x < label.width(); ++x)
      if (label.at(x, y) && out.contains(lx + x, ly + y) && out.at(lx + x, ly + y, 3))
        for (int k = 0; k < 3; ++k) out.at(lx + x, ly + y, k) = e.ink[static_cast<std::size_t>(k)];
  return out;
}

}  // namespace cforge
