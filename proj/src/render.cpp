#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>

#include "containerforge/image_io.hpp"
#include "containerforge/render.hpp"

namespace cforge {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kNear = 0.01;
}  // namespace

void Camera::validate() const {
  if (!(focal_length_mm > 0)) throw Error("camera " + name + ": focal length must be positive");
  if (!(sensor_width_mm > 0)) throw Error("camera " + name + ": sensor width must be positive");
  if (width <= 0 || height <= 0) throw Error("camera " + name + ": resolution must be positive");
}

Vec3 Camera::ray(double px, double py) const {
  const double f = focal_px();
  return normalize(orientation.transpose_mul({(px - width / 2.0) / f, (py - height / 2.0) / f, 1.0}));
}

Mat3 look_at(Vec3 eye, Vec3 target, Vec3 up) {
  const Vec3 forward = normalize(target - eye);
  const Vec3 right = cross(forward, up);
  if (length(right) < 1e-9) throw Error("look_at: view direction is parallel to the up vector");
  Mat3 m;
  m.rows[0] = normalize(right);
  m.rows[1] = cross(forward, m.rows[0]);
  m.rows[2] = forward;
  return m;
}

Projection project(const Camera& camera, Vec3 p) {
  if (p.z <= 0) return {{}, true};
  const double f = camera.focal_px();
  return {{camera.width / 2.0 + p.x / p.z * f, camera.height / 2.0 + p.y / p.z * f}, false};
}

void RigConfig::validate() const {
  if (width <= 0 || height <= 0) throw Error("camera resolution must be positive");
  if (!(sensor_width_mm > 0)) throw Error("sensor_width_mm must be positive");
  if (!(focal_a_mm > 0 && focal_b_mm > 0 && focal_c_mm > 0)) throw Error("focal lengths must be positive");
  if (!(fill > 0 && fill <= 1)) throw Error("fill must lie in (0, 1]");
  if (!(jitter_m >= 0)) throw Error("jitter_m must be non-negative");
  for (double e : {elevation_a_deg, elevation_b_deg, elevation_c_deg})
    if (!(e > -80 && e < 80)) throw Error("camera elevation must lie in (-80, 80) degrees");
}

Side camera_side(std::string_view name) {
  if (name == "A") return Side::back;
  if (name == "B") return Side::front;
  if (name == "Cl") return Side::no_door;
  if (name == "Cr") return Side::door;
  throw Error("unknown camera '" + std::string(name) + "'");
}

std::array<Camera, 4> make_camera_rig(const ContainerSpec& spec, const RigConfig& cfg, Rng* jitter) {
  cfg.validate();
  const std::array<double, 4> focal{cfg.focal_a_mm, cfg.focal_b_mm, cfg.focal_c_mm, cfg.focal_c_mm};
  const std::array<double, 4> elevation{cfg.elevation_a_deg, cfg.elevation_b_deg, cfg.elevation_c_deg,
                                        cfg.elevation_c_deg};
  std::vector<Vec3> corners;
  for (int k = 0; k < 8; ++k)
    corners.push_back({k & 1 ? spec.length_m : 0.0, k & 2 ? spec.width_m : 0.0, k & 4 ? spec.height_m : 0.0});

  std::array<Camera, 4> rig;
  for (std::size_t i = 0; i < 4; ++i) {
    Camera& cam = rig[i];
    cam.name = kCameraNames[i];
    cam.focal_length_mm = focal[i];
    cam.sensor_width_mm = cfg.sensor_width_mm;
    cam.width = cfg.width;
    cam.height = cfg.height;
    const SideFrame frame = side_frame(spec, camera_side(cam.name));
    const Vec3 target = frame.point(frame.width / 2, frame.height / 2);
    const double el = elevation[i] * kPi / 180.0;
    const Vec3 out = normalize(frame.normal * std::cos(el) + Vec3{0, 0, 1} * std::sin(el));
    double d = 10.0;
    for (int it = 0; it < 6; ++it) {
      cam.position = target + out * d;
      cam.orientation = look_at(cam.position, target);
      double x0 = 1e18, x1 = -1e18, y0 = 1e18, y1 = -1e18;
      for (const Vec3& c : corners) {
        const Projection p = project(cam, cam.to_camera(c));
        x0 = std::min(x0, p.pixel.x);
        x1 = std::max(x1, p.pixel.x);
        y0 = std::min(y0, p.pixel.y);
        y1 = std::max(y1, p.pixel.y);
      }
      const double frac = std::max((x1 - x0) / cam.width, (y1 - y0) / cam.height);
      d *= frac / cfg.fill;
    }
    cam.position = target + out * d;
    cam.orientation = look_at(cam.position, target);
    if (jitter && cfg.jitter_m > 0) {
      const double j = cfg.jitter_m;
      const double dx = jitter->uniform(-j, j), dy = jitter->uniform(-j, j), dz = jitter->uniform(-j, j);
      cam.position += Vec3{dx, dy, dz};
    }
  }
  return rig;
}

// ---------------------------------------------------------------------------

namespace {

Vec3 texel_direction(int i, int j, int w, int h) {
  const double theta = (j + 0.5) / h * kPi;
  const double phi = (i + 0.5) / w * 2 * kPi - kPi;
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

constexpr double kC0 = 0.28209479177387814;   // 1 / (2 sqrt(pi))
constexpr double kC1 = 0.48860251190291992;   // sqrt(3 / (4 pi))
constexpr double kC2 = 1.0925484305920792;    // sqrt(15 / pi) / 2
constexpr double kC3 = 0.31539156525252005;   // sqrt(5 / pi) / 4
constexpr double kC4 = 0.54627421529603959;   // sqrt(15 / pi) / 4

std::array<double, 9> sh_basis(Vec3 n) {
  return {kC0,
          kC1 * n.y,
          kC1 * n.z,
          kC1 * n.x,
          kC2 * n.x * n.y,
          kC2 * n.y * n.z,
          kC3 * (3 * n.z * n.z - 1),
          kC2 * n.x * n.z,
          kC4 * (n.x * n.x - n.y * n.y)};
}

// Integral of each basis function over the texel theta in [t0, t1], phi in [p0, p1].
// With z = cos(theta) the solid angle element is dz dphi, so every term has a closed form.
std::array<double, 9> sh_texel_integral(double t0, double t1, double p0, double p1) {
  const double z0 = std::cos(t0), z1 = std::cos(t1);
  auto prim_s = [](double z) { return 0.5 * (z * std::sqrt(1 - z * z) + std::asin(z)); };
  auto prim_zs = [](double z) { return -std::pow(1 - z * z, 1.5) / 3; };
  const double i0 = z0 - z1, iz = (z0 * z0 - z1 * z1) / 2, izz = (z0 * z0 * z0 - z1 * z1 * z1) / 3;
  const double is = prim_s(z0) - prim_s(z1), izs = prim_zs(z0) - prim_zs(z1), iss = i0 - izz;
  const double pw = p1 - p0;
  const double c1 = std::sin(p1) - std::sin(p0), s1 = std::cos(p0) - std::cos(p1);
  const double c2 = (std::sin(2 * p1) - std::sin(2 * p0)) / 2, s2 = (std::cos(2 * p0) - std::cos(2 * p1)) / 2;
  return {kC0 * pw * i0,
          kC1 * s1 * is,
          kC1 * pw * iz,
          kC1 * c1 * is,
          kC2 * iss * s2 / 2,
          kC2 * s1 * izs,
          kC3 * pw * (3 * izz - i0),
          kC2 * c1 * izs,
          kC4 * iss * c2};
}

}  // namespace

EnvironmentMap::EnvironmentMap(ImageF radiance, double exposure) : radiance_(std::move(radiance)), exposure_(exposure) {
  if (radiance_.empty() || radiance_.channels() != 3) throw Error("environment map must be a non-empty RGB image");
  if (!(exposure_ > 0)) throw Error("environment exposure must be positive");
  const int w = radiance_.width(), h = radiance_.height();
  for (float v : radiance_.data())
    if (!(v >= 0) || !std::isfinite(v)) throw Error("environment radiance must be finite and non-negative");
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      const auto y = sh_texel_integral(double(j) / h * kPi, double(j + 1) / h * kPi, double(i) / w * 2 * kPi - kPi,
                                       double(i + 1) / w * 2 * kPi - kPi);
      const Vec3 l{radiance_.at(i, j, 0), radiance_.at(i, j, 1), radiance_.at(i, j, 2)};
      for (std::size_t k = 0; k < 9; ++k) sh_[k] += l * y[k];
    }
}

Vec3 EnvironmentMap::irradiance(Vec3 n) const {
  static constexpr std::array<double, 9> band{kPi,           2 * kPi / 3,   2 * kPi / 3,   2 * kPi / 3,  kPi / 4,
                                              kPi / 4,       kPi / 4,       kPi / 4,       kPi / 4};
  const auto y = sh_basis(normalize(n));
  Vec3 e;
  for (std::size_t k = 0; k < 9; ++k) e += sh_[k] * (band[k] * y[k]);
  return {std::max(0.0, e.x), std::max(0.0, e.y), std::max(0.0, e.z)};
}

Vec3 sample_env(const EnvironmentMap& env, Vec3 d) {
  const double len = length(d);
  if (!(len > 0)) throw Error("sample_env: direction must be non-zero");
  const ImageF& img = env.radiance();
  const int w = img.width(), h = img.height();
  const double u = (std::atan2(d.y, d.x) + kPi) / (2 * kPi);
  const double v = std::acos(std::clamp(d.z / len, -1.0, 1.0)) / kPi;
  const double fx = u * w - 0.5;
  const double fy = std::clamp(v * h - 0.5, 0.0, h - 1.0);
  const double x0f = std::floor(fx), y0f = std::floor(fy);
  const double tx = fx - x0f, ty = fy - y0f;
  const int x0 = ((static_cast<int>(x0f) % w) + w) % w, x1 = (x0 + 1) % w;
  const int y0 = static_cast<int>(y0f), y1 = std::min(y0 + 1, h - 1);
  Vec3 out;
  const double c[3] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty};
  const double c3 = tx * ty;
  auto px = [&](int x, int y) { return Vec3{img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)}; };
  out = px(x0, y0) * c[0] + px(x1, y0) * c[1] + px(x0, y1) * c[2] + px(x1, y1) * c3;
  return out;
}

namespace {

Vec3 sky(Vec3 d, Vec3 zenith, Vec3 horizon, Vec3 ground, Vec3 sun_dir, Vec3 sun_color, double sun_power,
         double sun_sharpness) {
  Vec3 c;
  if (d.z >= 0) {
    const double t = std::pow(1.0 - d.z, 3.0);
    c = lerp(zenith, horizon, t);
  } else {
    c = lerp(horizon * 0.6, ground, std::min(1.0, -d.z * 6.0));
  }
  const double s = std::max(0.0, dot(d, sun_dir));
  c += sun_color * (sun_power * std::pow(s, sun_sharpness) + 0.35 * std::pow(s, 6.0));
  return c;
}

}  // namespace

EnvironmentMap procedural_environment(std::string_view name, double az, double exposure, int width, int height) {
  if (width < 4 || height < 2) throw Error("environment resolution too small");
  auto sun = [&](double elev_deg) {
    const double e = elev_deg * kPi / 180;
    return Vec3{std::cos(e) * std::cos(az), std::cos(e) * std::sin(az), std::sin(e)};
  };
  ImageF img(width, height, 3);
  for (int j = 0; j < height; ++j)
    for (int i = 0; i < width; ++i) {
      const Vec3 d = texel_direction(i, j, width, height);
      Vec3 c;
      if (name == "clear_day") {
        c = sky(d, {0.22, 0.42, 0.95}, {0.75, 0.85, 1.0}, {0.28, 0.26, 0.24}, sun(40), {1.0, 0.95, 0.85}, 40.0, 600.0);
      } else if (name == "overcast") {
        c = sky(d, {0.80, 0.82, 0.85}, {0.70, 0.72, 0.74}, {0.30, 0.30, 0.30}, sun(55), {0.6, 0.6, 0.6}, 0.0, 1.0);
      } else if (name == "dusk_industrial") {
        c = sky(d, {0.10, 0.12, 0.28}, {1.00, 0.55, 0.30}, {0.10, 0.09, 0.08}, sun(4), {1.0, 0.6, 0.3}, 25.0, 300.0);
        // Flood lights along the horizon.
        const double phi = std::atan2(d.y, d.x);
        const double lamp = std::pow(std::max(0.0, std::cos(6 * phi)), 200.0) * std::exp(-std::pow((d.z - 0.12) / 0.02, 2));
        c += Vec3{1.0, 0.9, 0.7} * (6.0 * lamp);
      } else {
        throw Error("unknown environment '" + std::string(name) + "'");
      }
      for (int k = 0; k < 3; ++k) img.at(i, j, k) = static_cast<float>(k == 0 ? c.x : k == 1 ? c.y : c.z);
    }
  return EnvironmentMap(std::move(img), exposure);
}

EnvironmentMap load_environment(const std::filesystem::path& path, double exposure) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".hdr") return EnvironmentMap(read_hdr(path), exposure);
  if (ext != ".png") throw Error("unsupported environment format: " + path.string());
  return std::visit(
      [&](const auto& src) {
        const double maxv = sizeof(src.data()[0]) == 1 ? 255.0 : 65535.0;
        ImageF img(src.width(), src.height(), 3);
        const int c = src.channels();
        for (int y = 0; y < src.height(); ++y)
          for (int x = 0; x < src.width(); ++x)
            for (int k = 0; k < 3; ++k) img.at(x, y, k) = static_cast<float>(src.at(x, y, c >= 3 ? k : 0) / maxv);
        return EnvironmentMap(std::move(img), exposure);
      },
      read_png(path));
}

EnvironmentMap constant_environment(Vec3 r, double exposure) {
  ImageF img(8, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) {
      img.at(x, y, 0) = static_cast<float>(r.x);
      img.at(x, y, 1) = static_cast<float>(r.y);
      img.at(x, y, 2) = static_cast<float>(r.z);
    }
  return EnvironmentMap(std::move(img), exposure);
}

// ---------------------------------------------------------------------------

void Scene::validate() const {
  const UvLayout& l = mesh.layout;
  if (albedo.width() != l.atlas_w || albedo.height() != l.atlas_h || albedo.channels() != 3)
    throw Error("scene albedo must be an RGB image matching the UV atlas");
  if (roughness.width() != l.atlas_w || roughness.height() != l.atlas_h)
    throw Error("scene roughness must match the UV atlas");
  if (env.empty()) throw Error("scene has no environment map");
  std::set<int> ids;
  for (const Entity& e : entities) {
    if (!ids.insert(e.id).second) throw Error("duplicate entity id " + std::to_string(e.id));
    if (e.type == EntityType::decal) {
      if (!e.uv_mask) throw Error("decal entity " + std::to_string(e.id) + " has no UV mask");
      continue;
    }
    if (e.class_id < 1 || e.class_id > 99) throw Error("entity class id must lie in [1, 99]");
    if (e.instance_id < 1 || e.instance_id > 99) throw Error("entity instance id must lie in [1, 99]");
  }
  for (const Camera& c : cameras) c.validate();
}

const Entity& Scene::entity(int id) const {
  for (const Entity& e : entities)
    if (e.id == id) return e;
  throw Error("unknown entity id " + std::to_string(id));
}

void add_container_entity(Scene& scene, int id) {
  scene.entities.push_back({id, EntityType::container, kContainerClass, 1, {}, std::nullopt});
}

void add_damage_entity(Scene& scene, int id, const DamageInstance& damage, int class_id) {
  scene.entities.push_back({id, EntityType::damage, class_id, damage.instance_id, damage.region.source_faces, std::nullopt});
}

void add_decal_entity(Scene& scene, int id, int class_id, const UvMask& mask) {
  scene.entities.push_back({id, EntityType::decal, class_id, 0, {}, mask});
}

// ---------------------------------------------------------------------------

namespace {

struct ClipVertex {
  Vec3 p;  // camera space
  Vec2 uv;
};

void draw_triangle(GBuffer& gb, const Camera& cam, const ClipVertex& a, const ClipVertex& b, const ClipVertex& c,
                   std::int32_t face) {
  const double f = cam.focal_px();
  const double cx = cam.width / 2.0, cy = cam.height / 2.0;
  const ClipVertex* v[3] = {&a, &b, &c};
  double sx[3], sy[3], iz[3];
  for (int k = 0; k < 3; ++k) {
    iz[k] = 1.0 / v[k]->p.z;
    sx[k] = cx + v[k]->p.x * iz[k] * f;
    sy[k] = cy + v[k]->p.y * iz[k] * f;
  }
  const double area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sx[2] - sx[0]) * (sy[1] - sy[0]);
  if (std::abs(area) < 1e-12) return;
  const double sign = area > 0 ? 1.0 : -1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({sx[0], sx[1], sx[2]}))));
  const int x1 = std::min(gb.width - 1, static_cast<int>(std::ceil(std::max({sx[0], sx[1], sx[2]}))));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({sy[0], sy[1], sy[2]}))));
  const int y1 = std::min(gb.height - 1, static_cast<int>(std::ceil(std::max({sy[0], sy[1], sy[2]}))));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double w[3];
      for (int k = 0; k < 3; ++k) {
        const int i = (k + 1) % 3, j = (k + 2) % 3;
        w[k] = sign * ((sx[j] - sx[i]) * (py - sy[i]) - (sy[j] - sy[i]) * (px - sx[i]));
      }
      if (w[0] < 0 || w[1] < 0 || w[2] < 0) continue;
      const double s = w[0] + w[1] + w[2];
      const double b0 = w[0] / s, b1 = w[1] / s, b2 = w[2] / s;
      const double inv = b0 * iz[0] + b1 * iz[1] + b2 * iz[2];
      const double z = 1.0 / inv;
      const std::size_t idx = gb.index(x, y);
      if (!(z < gb.depth[idx])) continue;
      gb.depth[idx] = static_cast<float>(z);
      gb.face[idx] = face;
      if (face >= 0)
        gb.uv[idx] = (a.uv * (b0 * iz[0]) + b.uv * (b1 * iz[1]) + c.uv * (b2 * iz[2])) * z;
    }
}

void draw_clipped(GBuffer& gb, const Camera& cam, std::array<ClipVertex, 3> tri, std::int32_t face) {
  std::vector<ClipVertex> poly;
  for (int k = 0; k < 3; ++k) {
    const ClipVertex& p = tri[static_cast<std::size_t>(k)];
    const ClipVertex& q = tri[static_cast<std::size_t>((k + 1) % 3)];
    const bool pin = p.p.z >= kNear, qin = q.p.z >= kNear;
    if (pin) poly.push_back(p);
    if (pin != qin) {
      const double t = (kNear - p.p.z) / (q.p.z - p.p.z);
      poly.push_back({lerp(p.p, q.p, t), p.uv + (q.uv - p.uv) * t});
    }
  }
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) draw_triangle(gb, cam, poly[0], poly[k], poly[k + 1], face);
}

}  // namespace

GBuffer rasterize(const Scene& scene, const Camera& cam) {
  cam.validate();
  GBuffer gb;
  gb.width = cam.width;
  gb.height = cam.height;
  const auto n = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
  gb.depth.assign(n, std::numeric_limits<float>::infinity());
  gb.face.assign(n, GBuffer::kNoFace);
  gb.uv.assign(n, {});

  const ContainerMesh& m = scene.mesh;
  std::vector<Vec3> cp(m.vertices.size());
  for (std::size_t i = 0; i < cp.size(); ++i) cp[i] = cam.to_camera(m.vertices[i]);
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    const Quad& q = m.faces[f];
    auto cv = [&](std::uint32_t i) { return ClipVertex{cp[i], m.uv[i]}; };
    const auto face = static_cast<std::int32_t>(f);
    draw_clipped(gb, cam, {cv(q[0]), cv(q[1]), cv(q[2])}, face);
    draw_clipped(gb, cam, {cv(q[0]), cv(q[2]), cv(q[3])}, face);
  }
  if (scene.prop) {
    const PropMesh& p = *scene.prop;
    for (std::size_t t = 0; t < p.triangles.size(); ++t) {
      const auto& tri = p.triangles[t];
      draw_clipped(gb, cam,
                   {ClipVertex{cam.to_camera(p.vertices[tri[0]]), {}}, ClipVertex{cam.to_camera(p.vertices[tri[1]]), {}},
                    ClipVertex{cam.to_camera(p.vertices[tri[2]]), {}}},
                   GBuffer::prop_face(t));
    }
  }
  return gb;
}

namespace {

// Atlas coordinates of a G-buffer uv, kept inside the face's island so that
// filtering never reads the gutter.
Vec2 atlas_coords(const Scene& scene, std::int32_t face, Vec2 uv) {
  const UvLayout& l = scene.mesh.layout;
  const Rect& r = l.island(scene.mesh.side_tag[static_cast<std::size_t>(face)]);
  return {std::clamp(uv.x * l.atlas_w - 0.5, double(r.x), r.right() - 1.0),
          std::clamp(uv.y * l.atlas_h - 0.5, double(r.y), r.bottom() - 1.0)};
}

template <typename T>
double bilinear(const Image<T>& img, Vec2 p, int c) {
  const int x0 = static_cast<int>(std::floor(p.x)), y0 = static_cast<int>(std::floor(p.y));
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double tx = p.x - x0, ty = p.y - y0;
  return lerp(lerp(img.at(x0, y0, c), img.at(x1, y0, c), tx), lerp(img.at(x0, y1, c), img.at(x1, y1, c), tx), ty);
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

Vec3 triangle_normal(const PropMesh& p, std::size_t t) {
  const auto& tri = p.triangles[t];
  return normalize(cross(p.vertices[tri[1]] - p.vertices[tri[0]], p.vertices[tri[2]] - p.vertices[tri[0]]));
}

Vec3 shade(const Scene& scene, Vec3 view, Vec3 n, Vec3 albedo, double roughness) {
  const Vec3 e = scene.env.irradiance(n);
  Vec3 c = hadamard(albedo, e) / kPi;
  const double cos_v = std::max(0.0, -dot(view, n));
  const double fresnel = 0.04 + 0.96 * std::pow(1.0 - cos_v, 5.0);
  const double ks = (1.0 - roughness) * fresnel;
  if (ks > 0) c += sample_env(scene.env, view - n * (2 * dot(view, n))) * ks;
  return c * scene.env.exposure();
}

}  // namespace

Image8 render_beauty(const Scene& scene, const Camera& cam) { return render_beauty(scene, cam, rasterize(scene, cam)); }

Image8 render_beauty(const Scene& scene, const Camera& cam, const GBuffer& gb) {
  const ContainerMesh& m = scene.mesh;
  std::vector<Vec3> normals(m.faces.size());
  for (std::size_t f = 0; f < normals.size(); ++f) normals[f] = m.face_normal(f);
  static constexpr Vec3 kPropAlbedo{0.35, 0.33, 0.30};

  Image8 out(gb.width, gb.height, 3);
  for (int y = 0; y < gb.height; ++y)
    for (int x = 0; x < gb.width; ++x) {
      const std::size_t idx = gb.index(x, y);
      const std::int32_t face = gb.face[idx];
      const Vec3 view = cam.ray(x + 0.5, y + 0.5);
      Vec3 c;
      if (face == GBuffer::kNoFace) {
        c = sample_env(scene.env, view) * scene.env.exposure();
      } else if (face >= 0) {
        const Vec2 t = atlas_coords(scene, face, gb.uv[idx]);
        const Vec3 albedo{bilinear(scene.albedo, t, 0) / 255.0, bilinear(scene.albedo, t, 1) / 255.0,
                          bilinear(scene.albedo, t, 2) / 255.0};
        Vec3 n = normals[static_cast<std::size_t>(face)];
        const bool inside = dot(n, view) > 0;
        if (inside) n = -n;
        c = shade(scene, view, n, albedo, bilinear(scene.roughness, t, 0));
        if (inside) c = c * 0.3;
      } else {
        Vec3 n = triangle_normal(*scene.prop, static_cast<std::size_t>(-2 - face));
        if (dot(n, view) > 0) n = -n;
        c = shade(scene, view, n, kPropAlbedo, 0.6);
      }
      out.at(x, y, 0) = to_byte(c.x);
      out.at(x, y, 1) = to_byte(c.y);
      out.at(x, y, 2) = to_byte(c.z);
    }
  return out;
}

Image16 render_id_pass(const Scene& scene, const Camera& cam) { return render_id_pass(scene, rasterize(scene, cam)); }

Image16 render_id_pass(const Scene& scene, const GBuffer& gb) {
  scene.validate();
  const ContainerMesh& m = scene.mesh;
  std::uint16_t container = 0;
  std::vector<const Entity*> damages;
  for (const Entity& e : scene.entities) {
    if (e.type == EntityType::container) container = encode_label(e.class_id, e.instance_id);
    if (e.type == EntityType::damage) damages.push_back(&e);
  }
  std::stable_sort(damages.begin(), damages.end(),
                   [](const Entity* a, const Entity* b) { return a->instance_id < b->instance_id; });
  std::unordered_map<std::uint32_t, std::size_t> by_pristine;
  for (std::size_t f = 0; f < m.faces.size(); ++f) by_pristine.emplace(m.face_id[f], f);
  std::vector<std::uint16_t> label(m.faces.size(), container);
  std::vector<bool> claimed(m.faces.size(), false);
  for (const Entity* e : damages)
    for (auto pid : e->faces) {
      const auto it = by_pristine.find(pid);
      if (it == by_pristine.end() || claimed[it->second]) continue;
      claimed[it->second] = true;
      label[it->second] = encode_label(e->class_id, e->instance_id);
    }

  Image16 out(gb.width, gb.height, 1);
  for (int y = 0; y < gb.height; ++y)
    for (int x = 0; x < gb.width; ++x) {
      const std::int32_t f = gb.face[gb.index(x, y)];
      if (f >= 0) out.at(x, y) = label[static_cast<std::size_t>(f)];
    }
  return out;
}

Image8 render_entity_mask(const Scene& scene, const Camera& cam, int id) {
  return render_entity_mask(scene, rasterize(scene, cam), id);
}

Image8 render_entity_mask(const Scene& scene, const GBuffer& gb, int id) {
  const Entity& e = scene.entity(id);
  const ContainerMesh& m = scene.mesh;
  std::vector<bool> member(m.faces.size(), e.type != EntityType::damage);
  if (e.type == EntityType::damage) {
    for (std::size_t f = 0; f < m.faces.size(); ++f)
      member[f] = std::binary_search(e.faces.begin(), e.faces.end(), m.face_id[f]);
  }
  Image8 out(gb.width, gb.height, 1);
  for (int y = 0; y < gb.height; ++y)
    for (int x = 0; x < gb.width; ++x) {
      const std::size_t idx = gb.index(x, y);
      const std::int32_t f = gb.face[idx];
      if (f < 0 || !member[static_cast<std::size_t>(f)]) continue;
      if (e.type == EntityType::decal) {
        const Vec2 t = atlas_coords(scene, f, gb.uv[idx]);
        if (!e.uv_mask->test(static_cast<int>(std::lround(t.x)), static_cast<int>(std::lround(t.y)))) continue;
      }
      out.at(x, y) = 255;
    }
  return out;
}

RenderPasses render_all(const Scene& scene, const Camera& cam) {
  scene.validate();
  const GBuffer gb = rasterize(scene, cam);
  RenderPasses passes;
  passes.beauty = render_beauty(scene, cam, gb);
  passes.id_pass = render_id_pass(scene, gb);
  for (const Entity& e : scene.entities) passes.entity_masks.emplace(e.id, render_entity_mask(scene, gb, e.id));
  return passes;
}

}  // namespace cforge
