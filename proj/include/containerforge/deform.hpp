#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "containerforge/geometry.hpp"
#include "containerforge/rng.hpp"

namespace cforge {

enum class DamageKind : std::uint8_t { Axis, Concave, Dented, Perforation };

inline constexpr std::array<DamageKind, 4> kDamageKinds{DamageKind::Axis, DamageKind::Concave, DamageKind::Dented,
                                                        DamageKind::Perforation};

std::string_view damage_name(DamageKind k);

// Upper bounds on displacement per kind, meters.
struct DamageLimits {
  double axis = 0.12;
  double concave = 0.10;
  double dented = 0.03;
  double perforation = 0.05;
};

struct DamagePlan {
  bool damaged = false;
  std::vector<DamageKind> kinds;  // one entry per instance, empty when undamaged
};

DamagePlan plan_damages(Rng& rng, double p_damage, int max_per_container);

// The 12 box edges, each shared by two sides.
struct BoxEdge {
  Side a;
  Side b;
};
inline constexpr std::array<BoxEdge, 12> kBoxEdges{{
    {Side::top, Side::front},     {Side::top, Side::back},       {Side::top, Side::door},
    {Side::top, Side::no_door},   {Side::bottom, Side::front},   {Side::bottom, Side::back},
    {Side::bottom, Side::door},   {Side::bottom, Side::no_door}, {Side::front, Side::door},
    {Side::door, Side::back},     {Side::back, Side::no_door},   {Side::no_door, Side::front},
}};

struct EdgeGeometry {
  Vec3 start;
  Vec3 direction;  // unit
  double length = 0.0;
  Vec3 inward;     // unit bisector pointing into the box
};
EdgeGeometry edge_geometry(const ContainerSpec& spec, int edge_index);

struct AxisParams {
  int edge_index = 0;
  double depth_m = 0.0;
  double extent_m = 0.2;       // support width measured across the edge along the surface
  double center_m = 0.0;       // position along the edge
  double half_length_m = 0.5;  // support half-length along the edge
};

// Side-relative coordinates: (0,0) is the side's s=0,t=0 corner, (1,1) the
// opposite one. These are not atlas UVs.
struct ConcaveParams {
  Side side = Side::front;
  Vec2 center_uv{0.5, 0.5};
  double radius_m = 0.4;
  double depth_m = 0.0;
};

// Centre line of a fold: segments alternate straight and sinusoidal.
struct DentSpline {
  Vec2 start_m{};           // side-local meters
  bool vertical = false;    // run along t instead of s
  double length_m = 1.0;
  int segments = 4;
  double amplitude_m = 0.02;
  double band_half_width_m = 0.05;

  std::vector<Vec2> polyline() const;
};

struct DentParams {
  Side side = Side::front;
  DentSpline spline;
  double fold_depth_m = 0.0;
};

struct PerforationParams {
  Side side = Side::front;
  std::vector<Vec2> blob_uv;  // closed polygon, side-relative coordinates
  double drag_depth_m = 0.0;
  double drag_radius_m = 0.15;
};

using DamageParams = std::variant<AxisParams, ConcaveParams, DentParams, PerforationParams>;

DamageKind kind_of(const DamageParams& p);

ContainerMesh apply_axis(const ContainerMesh& mesh, const AxisParams& params, const DamageLimits& limits = {});
// Draws the position and length along the edge; the centre is snapped to a
// grid vertex of the edge.
ContainerMesh apply_axis(const ContainerMesh& mesh, int edge_index, double depth_m, double extent_m, Rng& rng,
                         const DamageLimits& limits = {});
ContainerMesh apply_concave(const ContainerMesh& mesh, const ConcaveParams& params, const DamageLimits& limits = {});
ContainerMesh apply_dented(const ContainerMesh& mesh, const DentParams& params, const DamageLimits& limits = {});
ContainerMesh apply_perforation(const ContainerMesh& mesh, const PerforationParams& params,
                                const DamageLimits& limits = {});
ContainerMesh apply_damage(const ContainerMesh& mesh, const DamageParams& params, const DamageLimits& limits = {});

// Random parameters for one damage of the given kind, always valid for `mesh`.
DamageParams sample_damage(DamageKind kind, const ContainerMesh& mesh, Rng& rng, const DamageLimits& limits = {});

std::vector<Vec2> random_blob(Rng& rng, Vec2 center_uv, double radius_uv_x, double radius_uv_y, int vertices = 12);

struct RegionMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec2> uv;
  std::vector<Quad> quads;
  std::vector<std::uint32_t> source_faces;  // pristine face ids, ascending

  bool empty() const { return quads.empty(); }
};

// Faces of `deformed` with a vertex moved more than eps_m, plus for
// perforations every surviving face that shares a vertex with a removed face.
RegionMesh extract_damage_region(const ContainerMesh& pristine, const ContainerMesh& deformed, DamageKind kind,
                                 double eps_m = 1e-3);

// Restricts a region to faces that still exist in `mesh`, copying positions
// and UVs from it.
RegionMesh restrict_region(const RegionMesh& region, const ContainerMesh& mesh);

struct DamageInstance {
  DamageKind kind{};
  Side side{};
  DamageParams params;
  std::map<std::string, double> seed_params;
  std::vector<std::uint32_t> affected_vertices;
  std::vector<std::uint32_t> aged_faces;  // pristine face ids that receive aged material
  std::size_t removed_faces = 0;
  RegionMesh region;
  int instance_id = 0;
};

// Applies `params` to `current` and records the instance. The region is the
// diff of the isolated application against `pristine`, so overlapping damages
// keep separable regions.
DamageInstance record_damage(const ContainerMesh& pristine, ContainerMesh& current, const DamageParams& params,
                             int instance_id, double eps_m = 1e-3, const DamageLimits& limits = {});

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& polygon);
double polygon_distance(Vec2 p, const std::vector<Vec2>& polygon);  // 0 inside
double polyline_distance(Vec2 p, const std::vector<Vec2>& polyline);

}  // namespace cforge
