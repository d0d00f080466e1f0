#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "containerforge/geometry.hpp"
#include "containerforge/image.hpp"
#include "containerforge/rng.hpp"

namespace cforge {

// ---------------------------------------------------------------------------
// Bitmap font

// 5x7 glyphs for A-Z, 0-9, '.', '-' and space. Unknown characters render blank.
const std::array<std::uint8_t, 7>& glyph(char c);

// One-channel coverage image (0 or 255), trimmed to the set pixels. Vertical
// text stacks upright characters top to bottom.
Image8 render_text(std::string_view text, int scale, bool vertical);

// ---------------------------------------------------------------------------
// IMDG catalog

struct MarkerEntry {
  std::string code;  // "C1.1" .. "C9.1"
  int class_id = 0;  // detection class id, 1..26
  std::array<std::uint8_t, 3> top{};
  std::array<std::uint8_t, 3> bottom{};
  std::array<std::uint8_t, 3> ink{};
  std::optional<Image8> art;  // RGBA replacement art
};

class MarkerCatalog {
 public:
  // The 26 hazard sub-classes with generated placeholder art.
  MarkerCatalog();

  // Replaces art for every `<code>.png` found in `dir` (e.g. C3.1.png).
  // Returns the number of entries replaced.
  int load_art(const std::filesystem::path& dir);

  std::size_t size() const { return entries_.size(); }
  const MarkerEntry& at(std::size_t i) const { return entries_.at(i); }
  const std::vector<MarkerEntry>& entries() const { return entries_; }
  std::optional<std::size_t> find(std::string_view code) const;

  // RGBA image of the marker at the requested size.
  Image8 render(std::size_t index, int w, int h) const;

 private:
  std::vector<MarkerEntry> entries_;
};

// ---------------------------------------------------------------------------
// Configuration and layers

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct TextureConfig {
  double th_brand_door = 0.5;
  double th_brand_nodoor = 0.5;
  double th_text_door = 0.9;
  double th_text_nodoor = 0.9;  // also used for the front and back walls
  double p_vertical_text = 0.3;
  std::pair<int, int> marker_count_range{0, 4};  // markers per annotated side
  bool marker_quota = false;                     // cycle classes instead of sampling
  double marker_size_m = 0.25;
  double text_height_m = 0.12;
  std::vector<std::array<std::uint8_t, 3>> palette{
      {178, 34, 34}, {30, 80, 160}, {40, 110, 60}, {200, 120, 30}, {110, 110, 115}, {150, 30, 40}, {20, 60, 90}, {235, 235, 230}};
  Range aging{0.15, 0.55};
  Range dirt{0.1, 0.45};
  Range rust{0.0, 0.35};
  Range tone_noise{0.02, 0.08};
  std::vector<std::string> brands{"OCEANIC", "NORDLINE", "TRANSMAR", "PACIFICA", "BALTIK", "MERIDIAN"};

  void validate() const;
};

struct LayerIntensity {
  double aging = 0.0;
  double dirt = 0.0;
  double rust = 0.0;
  double tone_noise = 0.0;
};

// Texture layers on the atlas. Scalar layers are single-channel floats in
// [0, 1] (tone noise in [-1, 1] before scaling); decal and detail are RGBA.
struct UvLayerStack {
  int width = 0;
  int height = 0;
  std::array<Rect, 6> islands{};  // from the mesh's UV layout
  std::array<std::uint8_t, 3> base_color{};
  LayerIntensity intensity;
  ImageF tone_noise;
  ImageF aging;
  ImageF dirt;
  ImageF rust;
  ImageF roughness;
  ImageF aged;          // aged material transferred from dents and perforations
  Image8 detail;        // door hardware
  Image8 decal;         // markers, brands and identification text

  Image8 composite() const;
};

// Draws the base colour, tone, aging, dirt, rust and roughness layers.
UvLayerStack compose_material(Rng& rng, const TextureConfig& cfg, const ContainerMesh& mesh);
// Same with explicit intensities; compose_material draws them from cfg.
UvLayerStack compose_material(Rng& rng, std::array<std::uint8_t, 3> base, const LayerIntensity& intensity,
                              const ContainerMesh& mesh);

// Marks the UV footprint of the given pristine face ids as aged metal.
void apply_aged_faces(UvLayerStack& stack, const ContainerMesh& mesh, const std::vector<std::uint32_t>& face_ids);

// ---------------------------------------------------------------------------
// Decals

enum class EntityKind : std::uint8_t { imdg, text, brand };
enum class Orientation : std::uint8_t { horizontal, vertical };

struct Placement {
  EntityKind kind{};
  std::string class_label;  // marker code, "text" or "brand"
  int class_id = 0;         // detection class id; brands are not annotated (-1)
  Rect uv_rect;             // atlas pixels
  Side side{};
  std::string payload;      // marker code or drawn string
  Orientation orientation = Orientation::horizontal;
};

// Binary mask on the atlas, stored as the window `rect` only. Pixels outside
// the window are zero.
struct UvMask {
  Rect rect;
  Image8 bits;  // rect.w x rect.h, values 0/1

  bool test(int x, int y) const { return rect.contains(x, y) && bits.at(x - rect.x, y - rect.y) != 0; }
  std::size_t count() const;
};

struct DecalResult {
  std::vector<Placement> placements;
  std::vector<UvMask> masks;  // parallel to placements
};

// Two-row rhombus layout. Index i runs over {i_b, ..., i_e - 1} with
// i_e = floor(N/2) + 1 and i_b = i_e - N; marker k = i - i_b has size sizes[k].
// x_i = ceil(x + i*w/2); y_i = ceil(y) for even |i|, ceil(y + h/2) for odd.
std::vector<std::pair<int, int>> marker_positions(double x, double y, int n,
                                                  const std::vector<std::pair<int, int>>& sizes);

int marker_pixels(const TextureConfig& cfg, const UvLayout& layout);
// Largest N whose rhombus fits on the side's island.
int marker_capacity(const UvLayout& layout, Side side, int marker_px);

// Draws markers onto stack.decal and returns one mask per marker. `occupied`
// rectangles are avoided and extended with the new placements. If `forced`
// is set it fixes the catalog indices (and therefore N).
DecalResult place_imdg_markers(UvLayerStack& stack, Rng& rng, const MarkerCatalog& catalog, const TextureConfig& cfg,
                               Side side, const UvLayout& layout, std::vector<Rect>& occupied,
                               const std::optional<std::vector<std::size_t>>& forced = std::nullopt);

// Brand (door and no_door only) and main identifier text for one side.
DecalResult place_texts(UvLayerStack& stack, Rng& rng, const TextureConfig& cfg, Side side, const UvLayout& layout,
                        const std::string& container_id, std::vector<Rect>& occupied);

// ---------------------------------------------------------------------------
// Container identification

int iso6346_letter_value(char c);
// Check digit of the first 10 characters (owner code, category, serial).
int iso6346_check_digit(std::string_view first10);
bool iso6346_valid(std::string_view id);
// Owner code + 'U' + 6 digit serial + check digit. Serials whose remainder is
// 10 are redrawn so the check digit is never ambiguous.
std::string gen_container_id(Rng& rng);

}  // namespace cforge
