#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "containerforge/deform.hpp"
#include "containerforge/geometry.hpp"
#include "containerforge/image.hpp"
#include "containerforge/rng.hpp"
#include "containerforge/texture.hpp"

namespace cforge {

// ---------------------------------------------------------------------------
// Camera

// Camera space: x right, y down, z forward.
struct Camera {
  std::string name;  // A, B, Cl or Cr
  Vec3 position;
  Mat3 orientation;  // rows are the camera axes in world coordinates
  double focal_length_mm = 45.0;
  double sensor_width_mm = 36.0;
  int width = 1280;
  int height = 960;

  void validate() const;
  double focal_px() const { return focal_length_mm / sensor_width_mm * width; }
  Vec3 to_camera(Vec3 world) const { return orientation * (world - position); }
  // World-space direction through the center of pixel (px, py).
  Vec3 ray(double px, double py) const;
};

Mat3 look_at(Vec3 eye, Vec3 target, Vec3 up = {0, 0, 1});

struct Projection {
  Vec2 pixel;
  bool behind = false;
};

// Pinhole projection of a camera-space point.
Projection project(const Camera& camera, Vec3 camera_point);

struct RigConfig {
  int width = 1280;
  int height = 960;
  double sensor_width_mm = 36.0;
  double focal_a_mm = 14.5;
  double focal_b_mm = 28.0;
  double focal_c_mm = 45.0;
  double fill = 0.75;  // target fraction of the frame covered by the container
  double elevation_a_deg = 10.0;
  double elevation_b_deg = 25.0;
  double elevation_c_deg = 15.0;
  double jitter_m = 0.3;  // uniform per-axis translation range

  void validate() const;
};

inline constexpr std::array<const char*, 4> kCameraNames{"A", "B", "Cl", "Cr"};

// Side each camera looks at: A back, B front, Cl no_door, Cr door.
Side camera_side(std::string_view camera_name);

// Four cameras around the container. Pass an rng to apply position jitter.
std::array<Camera, 4> make_camera_rig(const ContainerSpec& spec, const RigConfig& cfg, Rng* jitter = nullptr);

// ---------------------------------------------------------------------------
// Environment

// Equirectangular radiance map: u = (atan2(y, x) + pi) / 2pi, v = acos(z) / pi.
class EnvironmentMap {
 public:
  EnvironmentMap() = default;
  EnvironmentMap(ImageF radiance, double exposure = 1.0);

  const ImageF& radiance() const { return radiance_; }
  double exposure() const { return exposure_; }
  bool empty() const { return radiance_.empty(); }

  // Cosine-weighted irradiance from a 9-term spherical harmonic fit.
  Vec3 irradiance(Vec3 normal) const;

 private:
  ImageF radiance_;
  double exposure_ = 1.0;
  std::array<Vec3, 9> sh_{};
};

// Bilinear lookup, wrapping in azimuth. Exposure is not applied.
Vec3 sample_env(const EnvironmentMap& env, Vec3 direction);

inline constexpr std::array<const char*, 3> kProceduralEnvironments{"clear_day", "overcast", "dusk_industrial"};

// `sun_azimuth` in radians. Unknown names throw.
EnvironmentMap procedural_environment(std::string_view name, double sun_azimuth, double exposure = 1.0,
                                      int width = 256, int height = 128);
// Radiance HDR (.hdr) or PNG (8 or 16 bit, scaled to [0, 1]).
EnvironmentMap load_environment(const std::filesystem::path& path, double exposure = 1.0);

EnvironmentMap constant_environment(Vec3 radiance, double exposure = 1.0);

// ---------------------------------------------------------------------------
// Scene

inline constexpr int kContainerClass = 1;

inline constexpr std::uint16_t encode_label(int class_id, int instance) {
  return static_cast<std::uint16_t>(100 * class_id + instance);
}
inline constexpr int decode_class(std::uint16_t v) { return v / 100; }
inline constexpr int decode_instance(std::uint16_t v) { return v % 100; }

enum class EntityType : std::uint8_t { container, damage, decal };

struct Entity {
  int id = 0;
  EntityType type{};
  int class_id = 0;     // id-pass class for container and damages, detection class for decals
  int instance_id = 0;  // 1..99 for container and damages
  std::vector<std::uint32_t> faces;  // pristine face ids of a damage region, ascending
  std::optional<UvMask> uv_mask;     // decals
};

struct Scene {
  ContainerMesh mesh;  // deformed container
  Image8 albedo;       // composited atlas, RGB
  ImageF roughness;    // atlas-sized, [0, 1]
  std::optional<PropMesh> prop;
  EnvironmentMap env;
  std::array<Camera, 4> cameras{};
  std::vector<Entity> entities;

  // Checks ids, class and instance ranges and atlas sizes.
  void validate() const;
  const Entity& entity(int id) const;
};

// Adds the container entity (class 1, instance 1) with the given id.
void add_container_entity(Scene& scene, int id);
void add_damage_entity(Scene& scene, int id, const DamageInstance& damage, int class_id);
void add_decal_entity(Scene& scene, int id, int class_id, const UvMask& mask);

// ---------------------------------------------------------------------------
// Rasterization

// One nearest sample per pixel. face >= 0 indexes scene.mesh.faces, kNoFace is
// background and values <= -2 encode prop triangle -2 - face.
struct GBuffer {
  static constexpr std::int32_t kNoFace = -1;
  static constexpr std::int32_t prop_face(std::size_t t) { return -2 - static_cast<std::int32_t>(t); }

  int width = 0;
  int height = 0;
  std::vector<float> depth;
  std::vector<std::int32_t> face;
  std::vector<Vec2> uv;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x); }
};

GBuffer rasterize(const Scene& scene, const Camera& camera);

Image8 render_beauty(const Scene& scene, const Camera& camera);
Image8 render_beauty(const Scene& scene, const Camera& camera, const GBuffer& gb);

Image16 render_id_pass(const Scene& scene, const Camera& camera);
Image16 render_id_pass(const Scene& scene, const GBuffer& gb);

// Values 0/255.
Image8 render_entity_mask(const Scene& scene, const Camera& camera, int entity_id);
Image8 render_entity_mask(const Scene& scene, const GBuffer& gb, int entity_id);

struct RenderPasses {
  Image8 beauty;
  Image16 id_pass;
  std::map<int, Image8> entity_masks;
};

RenderPasses render_all(const Scene& scene, const Camera& camera);

}  // namespace cforge
