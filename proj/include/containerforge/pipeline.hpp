#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "containerforge/annotate.hpp"
#include "containerforge/deform.hpp"
#include "containerforge/geometry.hpp"
#include "containerforge/render.hpp"
#include "containerforge/texture.hpp"

namespace cforge {

struct GenerationConfig {
  std::uint64_t master_seed = 1;
  int scene_count = 10;
  double train_fraction = 0.8;
  double val_fraction = 0.2;
  int test_scene_count = 0;
  double p_damage = 0.4;
  int max_damages = 2;
  int damage_retries = 16;
  DamageLimits damage_limits;
  ContainerSpec container;
  TextureConfig texture;
  std::string marker_art_dir;  // optional PNG art per marker code
  RigConfig rig;
  int atlas_width = 2048;
  int atlas_height = 1024;
  // Procedural names (clear_day, overcast, dusk_industrial) or .hdr/.png paths.
  std::vector<std::string> environments{"clear_day", "overcast", "dusk_industrial"};
  double exposure = 1.0;
  std::string prop_obj;  // optional crane model, placed over the container
  bool door_all_cameras = false;
  AnnotateOptions annotate;
  std::filesystem::path output = "dataset";

  void validate() const;
};

// Shared read-only state for a run: pristine mesh, marker art, loaded files.
struct GenerationContext {
  GenerationConfig cfg;
  ContainerMesh pristine;
  MarkerCatalog catalog;
  std::optional<PropMesh> prop;
  std::map<std::string, EnvironmentMap> loaded_envs;

  explicit GenerationContext(const GenerationConfig& config);
};

struct CameraView {
  Camera camera;
  RenderPasses passes;  // entity_masks is empty unless kept
  std::vector<AnnotationRecord> annotations;  // image_id is the view index 0..3
};

struct SceneArtifacts {
  int index = 0;
  std::string split;
  DamagePlan plan;
  std::vector<DamageInstance> damages;
  std::string container_id;
  std::string environment;
  std::array<std::uint8_t, 3> base_color{};
  std::vector<Placement> placements;  // markers, texts and brands
  std::vector<EntityLabel> labels;
  std::array<CameraView, 4> views;
  int markers_placed = 0;
  int texts_placed = 0;
};

// Scenes of the test split draw from their own seed namespace.
SceneArtifacts generate_scene(const GenerationContext& ctx, int scene_index, const std::string& split = "train",
                              bool keep_masks = true);

// Scene indices of the train and val splits: n_val = round(val_fraction * n),
// the rest go to train; assignment is a seeded shuffle.
struct SplitAssignment {
  std::vector<int> train;
  std::vector<int> val;
};
SplitAssignment assign_splits(std::uint64_t master_seed, int scene_count, double val_fraction);

struct RunOptions {
  int jobs = 1;
  bool quiet = false;
  nlohmann::json overrides = nlohmann::json::object();
};

// Generates every split under cfg.output and writes manifest.json, stats.json
// and stats.txt. The manifest is written with complete = false first.
DatasetManifest run_dataset(const GenerationConfig& cfg, const RunOptions& opt = {});

// ---------------------------------------------------------------------------
// Statistics

struct ClassCount {
  int id = 0;
  std::string name;
  long instances = 0;    // per scene: applied damages, or entities annotated in some view
  long annotations = 0;  // per image
};

struct SplitStats {
  std::string split;
  int scenes = 0;
  int images = 0;
  int damaged = 0;
  int undamaged = 0;
  std::vector<ClassCount> damage;     // container, axis, concave, dented, perforation
  std::vector<ClassCount> detection;  // text, C1.1 .. C9.1, container
  std::vector<std::array<int, 2>> damage_boxes;     // (w, h)
  std::vector<std::array<int, 2>> detection_boxes;  // (w, h)
};

struct StatsReport {
  std::vector<SplitStats> splits;  // train, val, test

  const SplitStats& split(std::string_view name) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

StatsReport compute_stats(const DatasetManifest& m);

// ---------------------------------------------------------------------------
// Validation

struct CheckResult {
  std::string name;
  bool passed = true;
  long checked = 0;
  long failures = 0;
  std::vector<std::string> messages;  // first few failures
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool ok() const;
  const CheckResult& check(std::string_view name) const;
  std::string to_text() const;
};

ValidationReport validate_dataset(const std::filesystem::path& root);

}  // namespace cforge
