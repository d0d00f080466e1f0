#include "containerforge/deform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>

namespace cforge {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return length(p - (a + ab * t));
}

bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

double polygon_distance(Vec2 p, const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 1e300;
  if (point_in_polygon(p, poly)) return 0.0;
  double d = 1e300;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    d = std::min(d, point_segment_distance(p, poly[j], poly[i]));
  return d;
}

double polyline_distance(Vec2 p, const std::vector<Vec2>& line) {
  if (line.size() == 1) return length(p - line[0]);
  double d = 1e300;
  for (std::size_t i = 1; i < line.size(); ++i) d = std::min(d, point_segment_distance(p, line[i - 1], line[i]));
  return d;
}

std::string_view damage_name(DamageKind k) {
  switch (k) {
    case DamageKind::Axis: return "axis";
    case DamageKind::Concave: return "concave";
    case DamageKind::Dented: return "dented";
    case DamageKind::Perforation: return "perforation";
  }
  return "?";
}

DamagePlan plan_damages(Rng& rng, double p_damage, int max_per_container) {
  if (!(p_damage >= 0.0 && p_damage <= 1.0)) throw Error("p_damage must lie in [0, 1]");
  if (max_per_container < 1) throw Error("max_per_container must be >= 1");
  DamagePlan plan;
  plan.damaged = rng.bernoulli(p_damage);
  if (!plan.damaged) return plan;
  const auto count = rng.uniform_int(1, max_per_container);
  for (std::int64_t i = 0; i < count; ++i) plan.kinds.push_back(kDamageKinds[static_cast<std::size_t>(rng.uniform_int(0, 3))]);
  return plan;
}

DamageKind kind_of(const DamageParams& p) { return static_cast<DamageKind>(p.index()); }

namespace {

bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

// Which boundary of `side` lies on `other`: axis 0 means s is constant, 1 means t.
struct Boundary {
  int axis = 0;
  double value = 0.0;
};

Boundary shared_boundary(const ContainerSpec& spec, Side side, Side other) {
  const SideFrame f = side_frame(spec, side);
  const SideFrame g = side_frame(spec, other);
  auto on_other = [&](Vec3 p) { return near(dot(p - g.origin, g.normal), 0.0); };
  const std::array<Boundary, 4> candidates{{{0, 0.0}, {0, f.width}, {1, 0.0}, {1, f.height}}};
  for (const auto& c : candidates) {
    const Vec3 p0 = c.axis == 0 ? f.point(c.value, 0) : f.point(0, c.value);
    const Vec3 p1 = c.axis == 0 ? f.point(c.value, f.height) : f.point(f.width, c.value);
    if (on_other(p0) && on_other(p1)) return c;
  }
  throw Error("sides do not share an edge");
}

void check_depth(double depth, double limit, std::string_view what) {
  if (!(depth >= 0.0)) throw Error(std::string(what) + ": depth must be >= 0");
  if (depth > limit + 1e-12)
    throw Error(std::string(what) + ": depth " + std::to_string(depth) + " m exceeds limit " + std::to_string(limit) + " m");
}

template <typename Field>
ContainerMesh displace_side(const ContainerMesh& mesh, Side side, Vec3 direction, Field&& field) {
  ContainerMesh out = mesh;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.vertex_side[v] != side) continue;
    const double d = field(mesh.surface[v]);
    if (d != 0.0) out.vertices[v] += direction * d;
  }
  return out;
}

Vec2 to_meters(const SideFrame& f, Vec2 uv) { return {uv.x * f.width, uv.y * f.height}; }

}  // namespace

EdgeGeometry edge_geometry(const ContainerSpec& spec, int edge_index) {
  if (edge_index < 0 || edge_index >= static_cast<int>(kBoxEdges.size()))
    throw Error("edge_index must be in [0, 11]");
  const auto [a, b] = kBoxEdges[static_cast<std::size_t>(edge_index)];
  const SideFrame fa = side_frame(spec, a);
  const SideFrame fb = side_frame(spec, b);
  const Boundary bd = shared_boundary(spec, a, b);
  const Vec3 p0 = bd.axis == 0 ? fa.point(bd.value, 0) : fa.point(0, bd.value);
  const Vec3 p1 = bd.axis == 0 ? fa.point(bd.value, fa.height) : fa.point(fa.width, bd.value);
  EdgeGeometry e;
  e.start = p0;
  e.length = length(p1 - p0);
  e.direction = (p1 - p0) / e.length;
  e.inward = -normalize(fa.normal + fb.normal);
  return e;
}

ContainerMesh apply_axis(const ContainerMesh& mesh, const AxisParams& p, const DamageLimits& limits) {
  const EdgeGeometry edge = edge_geometry(mesh.spec, p.edge_index);
  check_depth(p.depth_m, limits.axis, "axis");
  if (p.depth_m == 0.0) return mesh;
  const auto [a, b] = kBoxEdges[static_cast<std::size_t>(p.edge_index)];
  const double max_extent = std::min({side_frame(mesh.spec, a).width, side_frame(mesh.spec, a).height,
                                      side_frame(mesh.spec, b).width, side_frame(mesh.spec, b).height}) / 2;
  if (!(p.extent_m > 0 && p.extent_m < max_extent)) throw Error("axis: extent_m out of range");
  if (!(p.half_length_m > 0) || p.center_m - p.half_length_m < -1e-9 ||
      p.center_m + p.half_length_m > edge.length + 1e-9)
    throw Error("axis: damaged span leaves the edge");

  ContainerMesh out = mesh;
  for (Side side : {a, b}) {
    const SideFrame f = side_frame(mesh.spec, side);
    const Boundary bd = shared_boundary(mesh.spec, side, side == a ? b : a);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (mesh.vertex_side[v] != side) continue;
      const Vec2 st = mesh.surface[v];
      const double across = std::abs((bd.axis == 0 ? st.x : st.y) - bd.value);
      const double along = dot(f.point(st.x, st.y) - edge.start, edge.direction);
      const double w = cosine_falloff(across / p.extent_m) * cosine_falloff((along - p.center_m) / p.half_length_m);
      if (w != 0.0) out.vertices[v] += edge.inward * (p.depth_m * w);
    }
  }
  return out;
}

namespace {

AxisParams sample_axis_span(const ContainerSpec& spec, int edge_index, double depth_m, double extent_m, Rng& rng) {
  const EdgeGeometry edge = edge_geometry(spec, edge_index);
  const auto cells = grid_cells(spec);
  const Vec3 d = edge.direction;
  const int n = std::abs(d.x) > 0.5 ? cells[0] : (std::abs(d.y) > 0.5 ? cells[1] : cells[2]);
  const double step = edge.length / n;
  const double half = rng.uniform(std::min(0.3, edge.length / 4), std::min(1.2, edge.length / 2 - step));
  std::vector<int> valid;
  for (int k = 0; k <= n; ++k) {
    const double c = step * k;
    if (c - half >= 0 && c + half <= edge.length) valid.push_back(k);
  }
  if (valid.empty()) throw Error("axis: edge too short for damage span");
  AxisParams p;
  p.edge_index = edge_index;
  p.depth_m = depth_m;
  p.extent_m = extent_m;
  p.half_length_m = half;
  p.center_m = step * rng.pick(valid);
  return p;
}

}  // namespace

ContainerMesh apply_axis(const ContainerMesh& mesh, int edge_index, double depth_m, double extent_m, Rng& rng,
                         const DamageLimits& limits) {
  return apply_axis(mesh, sample_axis_span(mesh.spec, edge_index, depth_m, extent_m, rng), limits);
}

ContainerMesh apply_concave(const ContainerMesh& mesh, const ConcaveParams& p, const DamageLimits& limits) {
  check_depth(p.depth_m, limits.concave, "concave");
  const SideFrame f = side_frame(mesh.spec, p.side);
  const Vec2 c = to_meters(f, p.center_uv);
  if (!(p.radius_m > 0)) throw Error("concave: radius must be positive");
  constexpr double tol = 1e-9;
  if (c.x - p.radius_m < -tol || c.x + p.radius_m > f.width + tol || c.y - p.radius_m < -tol ||
      c.y + p.radius_m > f.height + tol)
    throw Error("concave: placement overlaps the side boundary");
  if (p.depth_m == 0.0) return mesh;
  return displace_side(mesh, p.side, -f.normal,
                       [&](Vec2 st) { return p.depth_m * cosine_falloff(length(st - c) / p.radius_m); });
}

std::vector<Vec2> DentSpline::polyline() const {
  std::vector<Vec2> pts;
  const int segs = std::max(1, segments);
  const double seg_len = length_m / segs;
  const int samples = std::max(8, static_cast<int>(std::ceil(seg_len / 0.01)));
  pts.push_back(start_m);
  for (int s = 0; s < segs; ++s) {
    const bool wavy = s % 2 == 1;
    for (int k = 1; k <= samples; ++k) {
      const double u = static_cast<double>(k) / samples;
      const double along = (s + u) * seg_len;
      const double off = wavy ? amplitude_m * std::sin(2 * std::numbers::pi * u) : 0.0;
      pts.push_back(vertical ? start_m + Vec2{off, along} : start_m + Vec2{along, off});
    }
  }
  return pts;
}

ContainerMesh apply_dented(const ContainerMesh& mesh, const DentParams& p, const DamageLimits& limits) {
  check_depth(p.fold_depth_m, limits.dented, "dented");
  const SideFrame f = side_frame(mesh.spec, p.side);
  const auto line = p.spline.polyline();
  const double hw = p.spline.band_half_width_m;
  if (!(hw > 0)) throw Error("dented: band width must be positive");
  for (const auto& q : line)
    if (q.x < hw || q.y < hw || q.x > f.width - hw || q.y > f.height - hw)
      throw Error("dented: spline leaves the side");
  if (p.fold_depth_m == 0.0) return mesh;
  return displace_side(mesh, p.side, -f.normal,
                       [&](Vec2 st) { return p.fold_depth_m * cosine_falloff(polyline_distance(st, line) / hw); });
}

ContainerMesh apply_perforation(const ContainerMesh& mesh, const PerforationParams& p, const DamageLimits& limits) {
  check_depth(p.drag_depth_m, limits.perforation, "perforation");
  if (p.blob_uv.empty()) return mesh;
  if (p.blob_uv.size() < 3) throw Error("perforation: blob needs at least 3 vertices");
  const SideFrame f = side_frame(mesh.spec, p.side);
  std::vector<Vec2> blob;
  for (auto q : p.blob_uv) blob.push_back(to_meters(f, q));
  const double reach = std::max(p.drag_radius_m, 0.0);
  for (const auto& q : blob)
    if (q.x - reach < 0 || q.y - reach < 0 || q.x + reach > f.width || q.y + reach > f.height)
      throw Error("perforation: blob or its drag zone leaves the side");

  ContainerMesh out = mesh;
  out.faces.clear();
  out.side_tag.clear();
  out.face_id.clear();
  std::size_t removed = 0;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    if (mesh.side_tag[i] == p.side) {
      Vec2 c{};
      for (auto v : mesh.faces[i]) c = c + mesh.surface[v];
      if (point_in_polygon(c * 0.25, blob)) {
        ++removed;
        continue;
      }
    }
    out.faces.push_back(mesh.faces[i]);
    out.side_tag.push_back(mesh.side_tag[i]);
    out.face_id.push_back(mesh.face_id[i]);
  }
  if (removed == 0) throw Error("perforation: blob too small, it encloses no face");
  if (p.drag_depth_m > 0 && reach > 0) {
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (mesh.vertex_side[v] != p.side) continue;
      const double w = cosine_falloff(polygon_distance(mesh.surface[v], blob) / reach);
      if (w != 0.0) out.vertices[v] += -f.normal * (p.drag_depth_m * w);
    }
  }
  return out;
}

ContainerMesh apply_damage(const ContainerMesh& mesh, const DamageParams& params, const DamageLimits& limits) {
  return std::visit(
      [&](const auto& p) -> ContainerMesh {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AxisParams>) return apply_axis(mesh, p, limits);
        else if constexpr (std::is_same_v<T, ConcaveParams>) return apply_concave(mesh, p, limits);
        else if constexpr (std::is_same_v<T, DentParams>) return apply_dented(mesh, p, limits);
        else return apply_perforation(mesh, p, limits);
      },
      params);
}

std::vector<Vec2> random_blob(Rng& rng, Vec2 center, double rx, double ry, int n) {
  std::vector<Vec2> pts;
  const double step = 2 * std::numbers::pi / n;
  for (int k = 0; k < n; ++k) {
    const double a = step * k + rng.uniform(-0.3, 0.3) * step;
    const double r = rng.uniform(0.75, 1.25);
    pts.push_back({center.x + rx * r * std::cos(a), center.y + ry * r * std::sin(a)});
  }
  return pts;
}

DamageParams sample_damage(DamageKind kind, const ContainerMesh& mesh, Rng& rng, const DamageLimits& limits) {
  const ContainerSpec& spec = mesh.spec;
  const double cell = 1.0 / spec.subdivisions_per_meter;
  auto wall = [&] { return kAnnotatedSides[static_cast<std::size_t>(rng.uniform_int(0, 3))]; };
  switch (kind) {
    case DamageKind::Axis: {
      const int edge = static_cast<int>(rng.uniform_int(0, 11));
      const double depth = rng.uniform(0.3, 1.0) * limits.axis;
      const double extent = rng.uniform(0.12, 0.3);
      return sample_axis_span(spec, edge, depth, extent, rng);
    }
    case DamageKind::Concave: {
      ConcaveParams p;
      p.side = wall();
      const SideFrame f = side_frame(spec, p.side);
      p.radius_m = rng.uniform(0.25, std::min(0.7, 0.45 * std::min(f.width, f.height)));
      const double m = p.radius_m + cell;
      p.center_uv = {rng.uniform(m, f.width - m) / f.width, rng.uniform(m, f.height - m) / f.height};
      p.depth_m = rng.uniform(0.3, 1.0) * limits.concave;
      return p;
    }
    case DamageKind::Dented: {
      DentParams p;
      p.side = wall();
      const SideFrame f = side_frame(spec, p.side);
      DentSpline& s = p.spline;
      s.vertical = rng.bernoulli(0.3);
      const double run = s.vertical ? f.height : f.width;
      const double cross = s.vertical ? f.width : f.height;
      s.band_half_width_m = std::max(0.04, 0.6 * cell);
      s.amplitude_m = rng.uniform(0.005, 0.03);
      s.segments = static_cast<int>(rng.uniform_int(3, 6));
      s.length_m = rng.uniform(std::min(0.9, 0.5 * run), std::min(1.8, 0.75 * run));
      const double m = s.band_half_width_m + cell;
      const double a0 = rng.uniform(m, run - s.length_m - m);
      const double c0 = rng.uniform(m + s.amplitude_m, cross - m - s.amplitude_m);
      s.start_m = s.vertical ? Vec2{c0, a0} : Vec2{a0, c0};
      p.fold_depth_m = rng.uniform(0.4, 1.0) * limits.dented;
      return p;
    }
    case DamageKind::Perforation: {
      PerforationParams p;
      p.side = wall();
      const SideFrame f = side_frame(spec, p.side);
      const double r = rng.uniform(std::max(0.12, 1.5 * cell), 0.25);
      p.drag_radius_m = rng.uniform(0.08, 0.2);
      const double m = 1.25 * r + p.drag_radius_m + cell;
      const Vec2 c{rng.uniform(m, f.width - m) / f.width, rng.uniform(m, f.height - m) / f.height};
      p.blob_uv = random_blob(rng, c, r / f.width, r / f.height);
      p.drag_depth_m = rng.uniform(0.3, 1.0) * limits.perforation;
      return p;
    }
  }
  throw Error("bad damage kind");
}

RegionMesh extract_damage_region(const ContainerMesh& pristine, const ContainerMesh& deformed, DamageKind kind,
                                 double eps_m) {
  if (pristine.vertices.size() != deformed.vertices.size() || pristine.pristine_id != deformed.pristine_id)
    throw Error("extract_damage_region: meshes do not share topology");
  std::unordered_map<std::uint32_t, std::size_t> pristine_index;
  for (std::size_t i = 0; i < pristine.faces.size(); ++i) pristine_index.emplace(pristine.face_id[i], i);
  std::vector<char> kept(pristine.faces.size(), 0);
  for (std::size_t i = 0; i < deformed.faces.size(); ++i) {
    const auto it = pristine_index.find(deformed.face_id[i]);
    if (it == pristine_index.end() || pristine.faces[it->second] != deformed.faces[i])
      throw Error("extract_damage_region: face topology mismatch");
    kept[it->second] = 1;
  }
  std::vector<char> border(pristine.vertices.size(), 0);
  bool any_removed = false;
  for (std::size_t i = 0; i < pristine.faces.size(); ++i)
    if (!kept[i]) {
      any_removed = true;
      for (auto v : pristine.faces[i]) border[v] = 1;
    }
  if (any_removed && kind != DamageKind::Perforation)
    throw Error("extract_damage_region: faces removed by a non-perforation damage");

  std::vector<char> moved(pristine.vertices.size(), 0);
  for (std::size_t v = 0; v < moved.size(); ++v)
    moved[v] = length(deformed.vertices[v] - pristine.vertices[v]) > eps_m;

  RegionMesh region;
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  for (std::size_t i = 0; i < deformed.faces.size(); ++i) {
    const Quad& q = deformed.faces[i];
    const bool hit = std::any_of(q.begin(), q.end(), [&](auto v) { return moved[v] || border[v]; });
    if (!hit) continue;
    Quad local{};
    for (int k = 0; k < 4; ++k) {
      auto [it, fresh] = remap.try_emplace(q[k], static_cast<std::uint32_t>(region.vertices.size()));
      if (fresh) {
        region.vertices.push_back(deformed.vertices[q[k]]);
        region.uv.push_back(deformed.uv[q[k]]);
      }
      local[k] = it->second;
    }
    region.quads.push_back(local);
    region.source_faces.push_back(deformed.face_id[i]);
  }
  return region;
}

RegionMesh restrict_region(const RegionMesh& region, const ContainerMesh& mesh) {
  std::unordered_map<std::uint32_t, std::size_t> index;
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) index.emplace(mesh.face_id[i], i);
  RegionMesh out;
  std::unordered_map<std::uint32_t, std::uint32_t> remap;
  for (auto id : region.source_faces) {
    const auto it = index.find(id);
    if (it == index.end()) continue;
    const Quad& q = mesh.faces[it->second];
    Quad local{};
    for (int k = 0; k < 4; ++k) {
      auto [r, fresh] = remap.try_emplace(q[k], static_cast<std::uint32_t>(out.vertices.size()));
      if (fresh) {
        out.vertices.push_back(mesh.vertices[q[k]]);
        out.uv.push_back(mesh.uv[q[k]]);
      }
      local[k] = r->second;
    }
    out.quads.push_back(local);
    out.source_faces.push_back(id);
  }
  return out;
}

namespace {

std::map<std::string, double> describe(const DamageParams& params) {
  return std::visit(
      [](const auto& p) -> std::map<std::string, double> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AxisParams>)
          return {{"edge_index", static_cast<double>(p.edge_index)}, {"depth_m", p.depth_m}, {"extent_m", p.extent_m},
                  {"center_m", p.center_m}, {"half_length_m", p.half_length_m}};
        else if constexpr (std::is_same_v<T, ConcaveParams>)
          return {{"center_u", p.center_uv.x}, {"center_v", p.center_uv.y}, {"radius_m", p.radius_m},
                  {"depth_m", p.depth_m}};
        else if constexpr (std::is_same_v<T, DentParams>)
          return {{"start_s_m", p.spline.start_m.x}, {"start_t_m", p.spline.start_m.y},
                  {"length_m", p.spline.length_m}, {"segments", static_cast<double>(p.spline.segments)},
                  {"amplitude_m", p.spline.amplitude_m}, {"vertical", p.spline.vertical ? 1.0 : 0.0},
                  {"band_half_width_m", p.spline.band_half_width_m}, {"depth_m", p.fold_depth_m}};
        else
          return {{"blob_vertices", static_cast<double>(p.blob_uv.size())}, {"depth_m", p.drag_depth_m},
                  {"drag_radius_m", p.drag_radius_m}};
      },
      params);
}

Side side_of(const DamageParams& params) {
  return std::visit(
      [](const auto& p) -> Side {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AxisParams>) return kBoxEdges[static_cast<std::size_t>(p.edge_index)].a;
        else return p.side;
      },
      params);
}

}  // namespace

DamageInstance record_damage(const ContainerMesh& pristine, ContainerMesh& current, const DamageParams& params,
                             int instance_id, double eps_m, const DamageLimits& limits) {
  if (instance_id < 1 || instance_id > 99) throw Error("instance_id must be in [1, 99]");
  DamageInstance inst;
  inst.kind = kind_of(params);
  inst.side = side_of(params);
  inst.params = params;
  inst.seed_params = describe(params);
  inst.instance_id = instance_id;

  const ContainerMesh isolated = apply_damage(pristine, params, limits);
  const RegionMesh region = extract_damage_region(pristine, isolated, inst.kind, eps_m);
  inst.removed_faces = pristine.faces.size() - isolated.faces.size();

  std::set<std::uint32_t> affected;
  for (std::size_t v = 0; v < pristine.vertices.size(); ++v)
    if (!(isolated.vertices[v] == pristine.vertices[v])) affected.insert(static_cast<std::uint32_t>(v));
  if (inst.removed_faces > 0) {
    std::set<std::uint32_t> surviving(isolated.face_id.begin(), isolated.face_id.end());
    for (std::size_t i = 0; i < pristine.faces.size(); ++i)
      if (!surviving.contains(pristine.face_id[i]))
        for (auto v : pristine.faces[i]) affected.insert(v);
  }
  inst.affected_vertices.assign(affected.begin(), affected.end());

  if (inst.kind == DamageKind::Dented) {
    inst.aged_faces = region.source_faces;
  } else if (inst.kind == DamageKind::Perforation) {
    // Surviving faces that touch the hole.
    std::set<std::uint32_t> surviving(isolated.face_id.begin(), isolated.face_id.end());
    std::vector<char> rim(pristine.vertices.size(), 0);
    for (std::size_t i = 0; i < pristine.faces.size(); ++i)
      if (!surviving.contains(pristine.face_id[i]))
        for (auto v : pristine.faces[i]) rim[v] = 1;
    for (std::size_t i = 0; i < isolated.faces.size(); ++i) {
      const Quad& q = isolated.faces[i];
      if (std::any_of(q.begin(), q.end(), [&](auto v) { return rim[v]; })) inst.aged_faces.push_back(isolated.face_id[i]);
    }
  }

  current = apply_damage(current, params, limits);
  inst.region = restrict_region(region, current);
  return inst;
}

}  // namespace cforge
