#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "containerforge/image.hpp"
#include "containerforge/math.hpp"

namespace cforge {

enum class Side : std::uint8_t { door, no_door, front, back, top, bottom };

inline constexpr std::array<Side, 6> kAllSides{Side::door, Side::no_door, Side::front,
                                               Side::back, Side::top,     Side::bottom};
// Sides that carry markers, text and cameras.
inline constexpr std::array<Side, 4> kAnnotatedSides{Side::door, Side::no_door, Side::back, Side::front};

std::string_view side_name(Side s);
Side side_from_name(std::string_view name);

// Container dimensions in meters. Defaults are the 20 ft general purpose box.
struct ContainerSpec {
  double length_m = 6.058;
  double width_m = 2.438;
  double height_m = 2.591;
  double corrugation_depth_m = 0.036;
  double corrugation_pitch_m = 0.209;
  int subdivisions_per_meter = 12;
  bool has_door_geometry = true;

  // Throws Error describing the first violated constraint.
  void validate() const;
};

// Local planar frame of a box side: p = origin + s*s_axis + t*t_axis, with
// normal = s_axis x t_axis pointing out of the box.
struct SideFrame {
  Vec3 origin;
  Vec3 s_axis;
  Vec3 t_axis;
  Vec3 normal;
  double width = 0.0;   // extent along s_axis
  double height = 0.0;  // extent along t_axis

  Vec3 point(double s, double t) const { return origin + s_axis * s + t_axis * t; }
};

SideFrame side_frame(const ContainerSpec& spec, Side side);

// Fixed 3x2 atlas grid. Row 0: door, no_door, top. Row 1: front, back, bottom.
// Every island uses the same texel density so UV area is proportional to
// surface area. Texture rows grow downward; the side's top edge maps to the
// island's first row.
struct UvLayout {
  int atlas_w = 0;
  int atlas_h = 0;
  double px_per_m = 0.0;
  std::array<Rect, 6> islands{};  // indexed by Side

  const Rect& island(Side s) const { return islands[static_cast<std::size_t>(s)]; }
  // Atlas pixel coordinates of side-local point (s, t) in meters.
  Vec2 to_pixel(Side side, Vec2 st, const ContainerSpec& spec) const;
};

UvLayout make_uv_layout(const ContainerSpec& spec, int atlas_w, int atlas_h);

using Quad = std::array<std::uint32_t, 4>;

struct ContainerMesh {
  ContainerSpec spec;
  UvLayout layout;
  std::vector<Vec3> vertices;
  std::vector<Vec2> uv;               // per vertex, in [0,1]^2
  std::vector<Side> vertex_side;      // vertices are split along box edges
  std::vector<Vec2> surface;          // side-local (s, t) in meters, never deformed
  std::vector<std::uint32_t> weld;    // equal ids share a position on the pristine box
  std::vector<Quad> faces;            // counter-clockwise seen from outside
  std::vector<Side> side_tag;         // per face
  std::vector<std::uint32_t> face_id; // index of the face in the pristine twin
  std::uint64_t pristine_id = 0;      // shared by a mesh and all of its deformed copies

  std::size_t face_count() const { return faces.size(); }
  Vec3 face_centroid(std::size_t f) const;
  Vec3 face_normal(std::size_t f) const;
};

// Cell counts per box axis: ceil(dimension * subdivisions_per_meter).
std::array<int, 3> grid_cells(const ContainerSpec& spec);

ContainerMesh build_container(const ContainerSpec& spec);
ContainerMesh layout_uv(ContainerMesh mesh, int atlas_w, int atlas_h);

// Trapezoidal rib profile in [0, 1] at side coordinate s; 0 on corner posts.
double corrugation_profile(const ContainerSpec& spec, const SideFrame& frame, double s);

// Every welded edge is used once in each direction.
bool is_watertight(const ContainerMesh& mesh);

struct Aabb {
  Vec3 min;
  Vec3 max;
};
Aabb bounds(const std::vector<Vec3>& points);

void write_obj(const std::filesystem::path& path, const ContainerMesh& mesh);

// Untextured polygon soup used for static props (positions + triangles).
struct PropMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};
PropMesh read_obj(const std::filesystem::path& path);

}  // namespace cforge
