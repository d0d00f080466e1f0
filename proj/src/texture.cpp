#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "containerforge/texture.hpp"

namespace cforge {

void TextureConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(std::string(name) + " must lie in [0, 1]");
  };
  prob(th_brand_door, "th_brand_door");
  prob(th_brand_nodoor, "th_brand_nodoor");
  prob(th_text_door, "th_text_door");
  prob(th_text_nodoor, "th_text_nodoor");
  prob(p_vertical_text, "p_vertical_text");
  if (marker_count_range.first < 0 || marker_count_range.second < marker_count_range.first)
    throw Error("marker_count_range must satisfy 0 <= min <= max");
  if (!(marker_size_m > 0)) throw Error("marker_size_m must be positive");
  if (!(text_height_m > 0)) throw Error("text_height_m must be positive");
  if (palette.empty()) throw Error("palette must not be empty");
  if (brands.empty()) throw Error("brands must not be empty");
  for (const auto& [r, name] : {std::pair{aging, "aging"}, {dirt, "dirt"}, {rust, "rust"}, {tone_noise, "tone_noise"}})
    if (!(r.lo >= 0 && r.hi >= r.lo && r.hi <= 1)) throw Error(std::string(name) + " range must satisfy 0 <= lo <= hi <= 1");
}

std::size_t UvMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.data().begin(), bits.data().end(), [](auto v) { return v != 0; }));
}

namespace {

// Hash-lattice value noise with smooth interpolation.
class ValueNoise {
 public:
  explicit ValueNoise(std::uint64_t seed) : seed_(seed) {}

  double at(double x, double y) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = smoothstep(0, 1, x - fx), ty = smoothstep(0, 1, y - fy);
    const double a = lattice(ix, iy), b = lattice(ix + 1, iy);
    const double c = lattice(ix, iy + 1), d = lattice(ix + 1, iy + 1);
    return lerp(lerp(a, b, tx), lerp(c, d, tx), ty);
  }

  double fbm(double x, double y, int octaves = 3) const {
    double sum = 0, amp = 1, norm = 0;
    for (int o = 0; o < octaves; ++o) {
      sum += amp * at(x, y);
      norm += amp;
      x *= 2.03;
      y *= 2.03;
      amp *= 0.5;
    }
    return sum / norm;
  }

 private:
  double lattice(std::int64_t x, std::int64_t y) const {
    std::uint64_t s = seed_ ^ (static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL) ^
                      (static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4fULL);
    return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed_;
};

using Rgb = std::array<std::uint8_t, 3>;

void draw_rect_rgba(Image8& dst, Rect r, Rgb c, std::uint8_t alpha) {
  for (int y = std::max(0, r.y); y < std::min(dst.height(), r.bottom()); ++y)
    for (int x = std::max(0, r.x); x < std::min(dst.width(), r.right()); ++x) {
      for (int k = 0; k < 3; ++k) dst.at(x, y, k) = c[static_cast<std::size_t>(k)];
      dst.at(x, y, 3) = alpha;
    }
}

void draw_door_hardware(Image8& detail, const Rect& r) {
  const int line = std::max(1, r.w / 120);
  const Rgb dark{25, 25, 25}, steel{170, 170, 165};
  draw_rect_rgba(detail, {r.x + r.w / 2 - line, r.y, 2 * line, r.h}, dark, 210);
  for (double f : {0.12, 0.38, 0.62, 0.88}) {
    const int cx = r.x + static_cast<int>(f * r.w);
    draw_rect_rgba(detail, {cx - line, r.y + r.h / 20, 2 * line + 1, r.h - r.h / 10}, steel, 230);
    draw_rect_rgba(detail, {cx - 3 * line, r.y + static_cast<int>(0.45 * r.h), 6 * line + 1, 4 * line + 2}, dark, 230);
  }
  for (double f : {0.1, 0.35, 0.65, 0.9}) {
    const int cy = r.y + static_cast<int>(f * r.h);
    draw_rect_rgba(detail, {r.x, cy, 4 * line + 2, 3 * line + 1}, dark, 200);
    draw_rect_rgba(detail, {r.right() - 4 * line - 2, cy, 4 * line + 2, 3 * line + 1}, dark, 200);
  }
}

void blend_over(Image8& dst, const Image8& src, int ox, int oy) {
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const int a = src.at(x, y, 3);
      if (a == 0 || !dst.contains(ox + x, oy + y)) continue;
      const int da = dst.at(ox + x, oy + y, 3);
      const int out_a = a + da * (255 - a) / 255;
      for (int k = 0; k < 3; ++k) {
        const int s = src.at(x, y, k), d = dst.at(ox + x, oy + y, k);
        dst.at(ox + x, oy + y, k) =
            static_cast<std::uint8_t>(out_a ? (s * a + d * da * (255 - a) / 255) / out_a : 0);
      }
      dst.at(ox + x, oy + y, 3) = static_cast<std::uint8_t>(out_a);
    }
}

}  // namespace

UvLayerStack compose_material(Rng& rng, const TextureConfig& cfg, const ContainerMesh& mesh) {
  cfg.validate();
  const Rgb base = rng.pick(cfg.palette);
  LayerIntensity in;
  in.aging = rng.uniform(cfg.aging.lo, cfg.aging.hi);
  in.dirt = rng.uniform(cfg.dirt.lo, cfg.dirt.hi);
  in.rust = rng.uniform(cfg.rust.lo, cfg.rust.hi);
  in.tone_noise = rng.uniform(cfg.tone_noise.lo, cfg.tone_noise.hi);
  return compose_material(rng, base, in, mesh);
}

UvLayerStack compose_material(Rng& rng, Rgb base, const LayerIntensity& intensity, const ContainerMesh& mesh) {
  const UvLayout& layout = mesh.layout;
  UvLayerStack st;
  st.width = layout.atlas_w;
  st.height = layout.atlas_h;
  st.islands = layout.islands;
  st.base_color = base;
  st.intensity = intensity;
  st.tone_noise = ImageF(st.width, st.height, 1);
  st.aging = ImageF(st.width, st.height, 1);
  st.dirt = ImageF(st.width, st.height, 1);
  st.rust = ImageF(st.width, st.height, 1);
  st.roughness = ImageF(st.width, st.height, 1, 0.5f);
  st.aged = ImageF(st.width, st.height, 1);
  st.detail = Image8(st.width, st.height, 4);
  st.decal = Image8(st.width, st.height, 4);

  const ValueNoise tone(rng.next_u64()), grime(rng.next_u64()), rust(rng.next_u64()), rough(rng.next_u64());
  for (Side side : kAllSides) {
    const Rect& r = layout.island(side);
    const double m = std::min(r.w, r.h);
    const double corner_reach = 0.22 * m;
    const double edge_reach = 0.06 * m + 2.0;
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x) {
        const double lx = x - r.x + 0.5, ly = y - r.y + 0.5;
        const double dc = std::sqrt(std::min(lx, r.w - lx) * std::min(lx, r.w - lx) +
                                    std::min(ly, r.h - ly) * std::min(ly, r.h - ly));
        const double de = std::min({lx, r.w - lx, ly, r.h - ly});
        const double g = grime.fbm(x / 20.0, y / 20.0);
        const double near_edge = 1.0 - smoothstep(0, edge_reach, de);
        st.tone_noise.at(x, y) = static_cast<float>(2.0 * tone.fbm(x / 48.0, y / 48.0) - 1.0);
        st.aging.at(x, y) = static_cast<float>((1.0 - smoothstep(0, corner_reach, dc)) * (0.7 + 0.3 * g));
        st.dirt.at(x, y) = static_cast<float>(near_edge * (0.6 + 0.4 * g));
        st.rust.at(x, y) = static_cast<float>(smoothstep(0.5, 0.72, rust.fbm(x / 30.0, y / 30.0)));
        const double n = rough.fbm(x / 12.0, y / 12.0);
        st.roughness.at(x, y) = static_cast<float>(std::clamp(0.45 + 0.45 * near_edge * n + 0.1 * (n - 0.5), 0.0, 1.0));
      }
  }
  if (mesh.spec.has_door_geometry) draw_door_hardware(st.detail, layout.island(Side::door));
  return st;
}

Image8 UvLayerStack::composite() const {
  Image8 out(width, height, 3, 40);
  const double dirt_col[3] = {0.80, 0.80, 0.77};
  const double rust_col[3] = {0.58, 0.36, 0.12};
  const double aged_col[3] = {0.30, 0.22, 0.16};
  auto finish = [&](int x, int y, double* c) {
    if (const int a = detail.at(x, y, 3))
      for (int k = 0; k < 3; ++k) c[k] = lerp(c[k], detail.at(x, y, k) / 255.0, a / 255.0);
    if (const int a = decal.at(x, y, 3))
      for (int k = 0; k < 3; ++k) c[k] = lerp(c[k], decal.at(x, y, k) / 255.0, a / 255.0);
    for (int k = 0; k < 3; ++k)
      out.at(x, y, k) = static_cast<std::uint8_t>(std::lround(std::clamp(c[k], 0.0, 1.0) * 255.0));
  };
  for (const Rect& r : islands)
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x) {
        double c[3];
        for (int k = 0; k < 3; ++k) {
          double v = base_color[static_cast<std::size_t>(k)] / 255.0;
          v *= 1.0 + intensity.tone_noise * tone_noise.at(x, y);
          v = lerp(v, dirt_col[k], intensity.dirt * dirt.at(x, y));
          v = lerp(v, rust_col[k], intensity.rust * rust.at(x, y));
          v *= 1.0 - 0.75 * intensity.aging * aging.at(x, y);
          c[k] = lerp(v, aged_col[k], 0.7 * aged.at(x, y));
        }
        finish(x, y, c);
      }
  return out;
}

void apply_aged_faces(UvLayerStack& stack, const ContainerMesh& mesh, const std::vector<std::uint32_t>& face_ids) {
  std::unordered_map<std::uint32_t, std::size_t> index;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) index.emplace(mesh.face_id[i], i);
  for (auto id : face_ids) {
    const auto it = index.find(id);
    if (it == index.end()) continue;
    double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
    for (auto v : mesh.faces[it->second]) {
      x0 = std::min(x0, mesh.uv[v].x * stack.width);
      x1 = std::max(x1, mesh.uv[v].x * stack.width);
      y0 = std::min(y0, mesh.uv[v].y * stack.height);
      y1 = std::max(y1, mesh.uv[v].y * stack.height);
    }
    for (int y = std::max(0, static_cast<int>(std::floor(y0))); y < std::min(stack.height, static_cast<int>(std::ceil(y1))); ++y)
      for (int x = std::max(0, static_cast<int>(std::floor(x0))); x < std::min(stack.width, static_cast<int>(std::ceil(x1))); ++x)
        stack.aged.at(x, y) = 1.0f;
  }
}

std::vector<std::pair<int, int>> marker_positions(double x, double y, int n,
                                                  const std::vector<std::pair<int, int>>& sizes) {
  if (n < 1) throw Error("marker_positions: N must be >= 1");
  if (static_cast<int>(sizes.size()) != n) throw Error("marker_positions: one size per marker required");
  const int i_e = n / 2 + 1;
  const int i_b = i_e - n;
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = i_b; i < i_e; ++i) {
    const auto [w, h] = sizes[static_cast<std::size_t>(i - i_b)];
    const int xi = static_cast<int>(std::ceil(x + i * w / 2.0));
    const int yi = static_cast<int>(std::abs(i) % 2 == 0 ? std::ceil(y) : std::ceil(y + h / 2.0));
    out.emplace_back(xi, yi);
  }
  return out;
}

int marker_pixels(const TextureConfig& cfg, const UvLayout& layout) {
  return std::max(4, static_cast<int>(std::lround(cfg.marker_size_m * layout.px_per_m)));
}

int marker_capacity(const UvLayout& layout, Side side, int px) {
  const Rect& r = layout.island(side);
  if (r.h < px + px / 2 + 2) return 0;
  // Span of N markers is (N-1)*px/2 + px, plus one pixel of rounding slack.
  return std::max(0, 2 * (r.w - px - 2) / px + 1);
}

namespace {

struct Anchor {
  double x_lo, x_hi, y_lo, y_hi;
};

Rect bounding(const std::vector<Rect>& rects) {
  Rect u = rects.front();
  for (const auto& r : rects) {
    const int x0 = std::min(u.x, r.x), y0 = std::min(u.y, r.y);
    const int x1 = std::max(u.right(), r.right()), y1 = std::max(u.bottom(), r.bottom());
    u = {x0, y0, x1 - x0, y1 - y0};
  }
  return u;
}

bool overlaps_any(const Rect& r, const std::vector<Rect>& occupied) {
  return std::any_of(occupied.begin(), occupied.end(), [&](const Rect& o) { return o.intersects(r); });
}

Rgb ink_for(Rgb base) {
  const double y = 0.299 * base[0] + 0.587 * base[1] + 0.114 * base[2];
  return y < 140 ? Rgb{240, 240, 235} : Rgb{20, 20, 20};
}

// Uniform position for a w x h block inside `island` avoiding `occupied`.
std::optional<Rect> place_block(Rng& rng, const Rect& island, int w, int h, const std::vector<Rect>& occupied,
                                double y_lo_frac = 0.0, double y_hi_frac = 1.0) {
  const int x_hi = island.right() - w;
  const int y_lo = island.y + static_cast<int>(y_lo_frac * island.h);
  const int y_hi = std::min(island.bottom(), island.y + static_cast<int>(std::ceil(y_hi_frac * island.h))) - h;
  if (x_hi < island.x || y_hi < y_lo) return std::nullopt;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Rect r{static_cast<int>(rng.uniform_int(island.x, x_hi)), static_cast<int>(rng.uniform_int(y_lo, y_hi)), w, h};
    if (!overlaps_any(r, occupied)) return r;
  }
  return std::nullopt;
}

UvMask draw_coverage(Image8& decal, const Image8& coverage, const Rect& at, Rgb ink) {
  UvMask mask{at, Image8(at.w, at.h, 1)};
  for (int y = 0; y < at.h; ++y)
    for (int x = 0; x < at.w; ++x) {
      if (!coverage.at(x, y)) continue;
      for (int k = 0; k < 3; ++k) decal.at(at.x + x, at.y + y, k) = ink[static_cast<std::size_t>(k)];
      decal.at(at.x + x, at.y + y, 3) = 255;
      mask.bits.at(x, y) = 1;
    }
  return mask;
}

}  // namespace

DecalResult place_imdg_markers(UvLayerStack& stack, Rng& rng, const MarkerCatalog& catalog, const TextureConfig& cfg,
                               Side side, const UvLayout& layout, std::vector<Rect>& occupied,
                               const std::optional<std::vector<std::size_t>>& forced) {
  if (side == Side::top || side == Side::bottom) throw Error("markers are only placed on the four walls");
  DecalResult result;
  std::vector<std::size_t> picks;
  if (forced) {
    picks = *forced;
  } else {
    const auto n = rng.uniform_int(cfg.marker_count_range.first, cfg.marker_count_range.second);
    for (std::int64_t k = 0; k < n; ++k)
      picks.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(catalog.size()) - 1)));
  }
  const int n = static_cast<int>(picks.size());
  if (n == 0) return result;

  const int px = marker_pixels(cfg, layout);
  if (n > marker_capacity(layout, side, px))
    throw Error("placing " + std::to_string(n) + " markers exceeds the capacity of side " + std::string(side_name(side)));
  const Rect& island = layout.island(side);
  const std::vector<std::pair<int, int>> sizes(static_cast<std::size_t>(n), {px, px});
  const int i_e = n / 2 + 1;
  const int i_b = i_e - n;
  const Anchor a{island.x - i_b * px / 2.0, island.right() - ((i_e - 1) * px / 2.0 + px) - 1.0, double(island.y),
                 island.bottom() - 1.5 * px - 1.0};

  std::vector<Rect> rects;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 64)
      throw Error("could not place markers on side " + std::string(side_name(side)) + " after 64 attempts");
    const auto pos = marker_positions(rng.uniform(a.x_lo, a.x_hi), rng.uniform(a.y_lo, a.y_hi), n, sizes);
    rects.clear();
    for (const auto& [x, y] : pos) rects.push_back({x, y, px, px});
    const bool inside = std::all_of(rects.begin(), rects.end(), [&](const Rect& r) { return island.contains(r); });
    if (inside && !overlaps_any(bounding(rects), occupied)) break;
  }
  for (int k = 0; k < n; ++k) {
    const auto idx = picks[static_cast<std::size_t>(k)];
    const Rect& r = rects[static_cast<std::size_t>(k)];
    const Image8 art = catalog.render(idx, px, px);
    blend_over(stack.decal, art, r.x, r.y);
    UvMask mask{r, Image8(r.w, r.h, 1)};
    for (int y = 0; y < r.h; ++y)
      for (int x = 0; x < r.w; ++x) mask.bits.at(x, y) = art.at(x, y, 3) != 0;
    const auto& entry = catalog.at(idx);
    result.placements.push_back({EntityKind::imdg, entry.code, entry.class_id, r, side, entry.code, Orientation::horizontal});
    result.masks.push_back(std::move(mask));
  }
  occupied.push_back(bounding(rects));
  return result;
}

DecalResult place_texts(UvLayerStack& stack, Rng& rng, const TextureConfig& cfg, Side side, const UvLayout& layout,
                        const std::string& container_id, std::vector<Rect>& occupied) {
  if (side == Side::top || side == Side::bottom) throw Error("text is only placed on the four walls");
  DecalResult result;
  const Rect& island = layout.island(side);
  const Rgb ink = ink_for(stack.base_color);
  const int scale = std::max(1, static_cast<int>(std::lround(cfg.text_height_m * layout.px_per_m / 7.0)));

  // Optional decals that cannot fit at any orientation or scale are left out.
  auto put = [&](EntityKind kind, const std::string& text, int s, bool vertical, double y0, double y1) {
    const Image8 cov = render_text(text, s, vertical);
    if (cov.empty()) return true;
    const auto at = place_block(rng, island, cov.width(), cov.height(), occupied, y0, y1);
    if (!at) return false;
    result.masks.push_back(draw_coverage(stack.decal, cov, *at, ink));
    const bool is_text = kind == EntityKind::text;
    result.placements.push_back({kind, is_text ? "text" : "brand", is_text ? 0 : -1, *at, side, text,
                                 vertical ? Orientation::vertical : Orientation::horizontal});
    occupied.push_back(*at);
    return true;
  };

  if (side == Side::door || side == Side::no_door) {
    const double th = side == Side::door ? cfg.th_brand_door : cfg.th_brand_nodoor;
    if (rng.bernoulli(th)) {
      const std::string& brand = rng.pick(cfg.brands);
      if (!put(EntityKind::brand, brand, scale * 2, false, 0.0, 0.45)) put(EntityKind::brand, brand, scale, false, 0.0, 0.45);
    }
  }
  const double th = side == Side::door ? cfg.th_text_door : cfg.th_text_nodoor;
  if (rng.bernoulli(th)) {
    const bool vertical = rng.bernoulli(cfg.p_vertical_text);
    if (!put(EntityKind::text, container_id, scale, vertical, 0.0, 1.0))
      put(EntityKind::text, container_id, scale, !vertical, 0.0, 1.0);
  }
  return result;
}

int iso6346_letter_value(char c) {
  if (c < 'A' || c > 'Z') throw Error("owner code letters must be A-Z");
  int v = 10;
  for (char k = 'A'; k < c; ++k) {
    ++v;
    if (v % 11 == 0) ++v;
  }
  return v;
}

namespace {
int iso6346_sum(std::string_view s) {
  int sum = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const char c = s[i];
    const int v = i < 4 ? iso6346_letter_value(c) : (c >= '0' && c <= '9' ? c - '0' : throw Error("serial must be digits"));
    sum += v << i;
  }
  return sum;
}
}  // namespace

int iso6346_check_digit(std::string_view first10) {
  if (first10.size() < 10) throw Error("container id needs 10 characters before the check digit");
  return iso6346_sum(first10) % 11 % 10;
}

bool iso6346_valid(std::string_view id) {
  if (id.size() != 11 || id[10] < '0' || id[10] > '9') return false;
  try {
    return iso6346_check_digit(id.substr(0, 10)) == id[10] - '0';
  } catch (const Error&) {
    return false;
  }
}

std::string gen_container_id(Rng& rng) {
  for (;;) {
    std::string id;
    for (int i = 0; i < 3; ++i) id += static_cast<char>('A' + rng.uniform_int(0, 25));
    id += 'U';
    for (int i = 0; i < 6; ++i) id += static_cast<char>('0' + rng.uniform_int(0, 9));
    const int rem = iso6346_sum(id) % 11;
    if (rem == 10) continue;
    id += static_cast<char>('0' + rem);
    return id;
  }
}

}  // namespace cforge
