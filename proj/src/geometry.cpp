#include "containerforge/geometry.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace cforge {

std::string_view side_name(Side s) {
  switch (s) {
    case Side::door: return "door";
    case Side::no_door: return "no_door";
    case Side::front: return "front";
    case Side::back: return "back";
    case Side::top: return "top";
    case Side::bottom: return "bottom";
  }
  return "?";
}

Side side_from_name(std::string_view name) {
  for (Side s : kAllSides)
    if (side_name(s) == name) return s;
  throw Error("unknown side '" + std::string(name) + "'");
}

void ContainerSpec::validate() const {
  if (!(length_m > 0 && width_m > 0 && height_m > 0)) throw Error("container dimensions must be positive");
  if (corrugation_depth_m < 0) throw Error("corrugation_depth_m must be >= 0");
  if (!(corrugation_depth_m < width_m / 10)) throw Error("corrugation_depth_m must be < width_m/10");
  if (!(corrugation_pitch_m > 0)) throw Error("corrugation_pitch_m must be positive");
  if (subdivisions_per_meter < 4) throw Error("subdivisions_per_meter must be >= 4");
}

SideFrame side_frame(const ContainerSpec& spec, Side side) {
  const double L = spec.length_m, W = spec.width_m, H = spec.height_m;
  const Vec3 up{0, 0, 1};
  switch (side) {
    case Side::front: return {{0, 0, 0}, {1, 0, 0}, up, {0, -1, 0}, L, H};
    case Side::back: return {{L, W, 0}, {-1, 0, 0}, up, {0, 1, 0}, L, H};
    case Side::no_door: return {{0, W, 0}, {0, -1, 0}, up, {-1, 0, 0}, W, H};
    case Side::door: return {{L, 0, 0}, {0, 1, 0}, up, {1, 0, 0}, W, H};
    case Side::top: return {{0, 0, H}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, L, W};
    case Side::bottom: return {{0, W, 0}, {1, 0, 0}, {0, -1, 0}, {0, 0, -1}, L, W};
  }
  throw Error("bad side");
}

std::array<int, 3> grid_cells(const ContainerSpec& spec) {
  auto cells = [&](double d) {
    return std::max(1, static_cast<int>(std::ceil(d * spec.subdivisions_per_meter - 1e-9)));
  };
  return {cells(spec.length_m), cells(spec.width_m), cells(spec.height_m)};
}

Vec2 UvLayout::to_pixel(Side side, Vec2 st, const ContainerSpec& spec) const {
  const Rect& r = island(side);
  const double h = side_frame(spec, side).height;
  return {r.x + st.x * px_per_m, r.y + (h - st.y) * px_per_m};
}

UvLayout make_uv_layout(const ContainerSpec& spec, int atlas_w, int atlas_h) {
  if (atlas_w < 48 || atlas_h < 32) throw Error("atlas too small");
  constexpr int pad = 4;
  const int cell_w = atlas_w / 3;
  const int cell_h = atlas_h / 2;
  UvLayout layout;
  layout.atlas_w = atlas_w;
  layout.atlas_h = atlas_h;
  double scale = 1e300;
  for (Side s : kAllSides) {
    const auto f = side_frame(spec, s);
    scale = std::min({scale, (cell_w - 2.0 * pad) / f.width, (cell_h - 2.0 * pad) / f.height});
  }
  layout.px_per_m = scale;
  const std::array<std::pair<int, int>, 6> cell_of{{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 0}, {2, 1}}};
  for (Side s : kAllSides) {
    const auto f = side_frame(spec, s);
    const auto [cx, cy] = cell_of[static_cast<std::size_t>(s)];
    const int w = static_cast<int>(std::ceil(f.width * scale));
    const int h = static_cast<int>(std::ceil(f.height * scale));
    layout.islands[static_cast<std::size_t>(s)] = {cx * cell_w + (cell_w - w) / 2, cy * cell_h + (cell_h - h) / 2, w, h};
  }
  return layout;
}

double corrugation_profile(const ContainerSpec& spec, const SideFrame& frame, double s) {
  const double pitch = spec.corrugation_pitch_m;
  const double post = pitch / 2;
  if (s <= post || s >= frame.width - post) return 0.0;
  const double phase = std::fmod(s - post, pitch) / pitch;
  if (phase < 0.3) return 0.0;
  if (phase < 0.5) return (phase - 0.3) / 0.2;
  if (phase < 0.8) return 1.0;
  return 1.0 - (phase - 0.8) / 0.2;
}

Vec3 ContainerMesh::face_centroid(std::size_t f) const {
  Vec3 c{};
  for (auto v : faces[f]) c += vertices[v];
  return c / 4.0;
}

Vec3 ContainerMesh::face_normal(std::size_t f) const {
  const auto& q = faces[f];
  return normalize(cross(vertices[q[2]] - vertices[q[0]], vertices[q[3]] - vertices[q[1]]));
}

ContainerMesh build_container(const ContainerSpec& spec) {
  spec.validate();
  const auto [nx, ny, nz] = grid_cells(spec);
  const double L = spec.length_m, W = spec.width_m, H = spec.height_m;

  ContainerMesh mesh;
  mesh.spec = spec;
  std::uint64_t h = 1469598103934665603ULL;
  for (double d : {L, W, H, spec.corrugation_depth_m, spec.corrugation_pitch_m, double(spec.subdivisions_per_meter)}) {
    h ^= std::hash<double>{}(d);
    h *= 1099511628211ULL;
  }
  mesh.pristine_id = h;

  auto lattice_key = [&](int i, int j, int k) {
    return static_cast<std::uint32_t>((static_cast<std::int64_t>(k) * (ny + 1) + j) * (nx + 1) + i);
  };

  for (Side side : kAllSides) {
    const SideFrame f = side_frame(spec, side);
    const bool wall = side != Side::top && side != Side::bottom;
    auto axis_cells = [&](Vec3 axis) { return axis.x != 0 ? nx : (axis.y != 0 ? ny : nz); };
    const int na = axis_cells(f.s_axis);
    const int nb = axis_cells(f.t_axis);
    const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
    for (int b = 0; b <= nb; ++b) {
      for (int a = 0; a <= na; ++a) {
        const double s = f.width * a / na;
        const double t = f.height * b / nb;
        const Vec3 nominal = f.point(s, t);
        const int i = static_cast<int>(std::lround(nominal.x / L * nx));
        const int j = static_cast<int>(std::lround(nominal.y / W * ny));
        const int k = static_cast<int>(std::lround(nominal.z / H * nz));
        // Positions come from lattice indices so split copies are bit-identical.
        Vec3 p{L * i / nx, W * j / ny, H * k / nz};
        if (wall && b > 0 && b < nb && spec.corrugation_depth_m > 0)
          p = p - f.normal * (spec.corrugation_depth_m * corrugation_profile(spec, f, s));
        mesh.vertices.push_back(p);
        mesh.vertex_side.push_back(side);
        mesh.surface.push_back({s, t});
        mesh.weld.push_back(lattice_key(i, j, k));
      }
    }
    auto vid = [&](int a, int b) { return base + static_cast<std::uint32_t>(b * (na + 1) + a); };
    for (int b = 0; b < nb; ++b)
      for (int a = 0; a < na; ++a) {
        mesh.faces.push_back({vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1)});
        mesh.side_tag.push_back(side);
        mesh.face_id.push_back(static_cast<std::uint32_t>(mesh.face_id.size()));
      }
  }
  return layout_uv(std::move(mesh), 2048, 1024);
}

ContainerMesh layout_uv(ContainerMesh mesh, int atlas_w, int atlas_h) {
  mesh.layout = make_uv_layout(mesh.spec, atlas_w, atlas_h);
  mesh.uv.resize(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Vec2 px = mesh.layout.to_pixel(mesh.vertex_side[v], mesh.surface[v], mesh.spec);
    mesh.uv[v] = {px.x / atlas_w, px.y / atlas_h};
  }
  return mesh;
}

bool is_watertight(const ContainerMesh& mesh) {
  std::unordered_map<std::uint64_t, int> directed;
  auto key = [](std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; };
  for (const auto& q : mesh.faces)
    for (int e = 0; e < 4; ++e) {
      const auto a = mesh.weld[q[e]], b = mesh.weld[q[(e + 1) % 4]];
      if (++directed[key(a, b)] > 1) return false;
    }
  for (const auto& [k, n] : directed) {
    const auto a = static_cast<std::uint32_t>(k >> 32), b = static_cast<std::uint32_t>(k);
    if (!directed.contains(key(b, a))) return false;
  }
  return true;
}

Aabb bounds(const std::vector<Vec3>& points) {
  Aabb box{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
  for (const auto& p : points) {
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y), std::min(box.min.z, p.z)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y), std::max(box.max.z, p.z)};
  }
  return box;
}

void write_obj(const std::filesystem::path& path, const ContainerMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  out.precision(9);
  out << "# container mesh\n";
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  // OBJ texture space has v growing upward.
  for (const auto& t : mesh.uv) out << "vt " << t.x << ' ' << 1.0 - t.y << '\n';
  for (const auto& q : mesh.faces) {
    out << 'f';
    for (auto i : q) out << ' ' << i + 1 << '/' << i + 1;
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

PropMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  PropMesh prop;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x >> p.y >> p.z)) throw Error(path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      prop.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ls >> tok) {
        const long i = std::stol(tok.substr(0, tok.find('/')));
        const long n = static_cast<long>(prop.vertices.size());
        const long resolved = i < 0 ? n + i : i - 1;
        if (resolved < 0 || resolved >= n)
          throw Error(path.string() + ":" + std::to_string(line_no) + ": face index out of range");
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 2; k < idx.size(); ++k) prop.triangles.push_back({idx[0], idx[k - 1], idx[k]});
    }
  }
  return prop;
}

}  // namespace cforge
