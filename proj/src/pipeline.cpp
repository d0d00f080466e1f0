#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include "containerforge/config.hpp"
#include "containerforge/image_io.hpp"
#include "containerforge/pipeline.hpp"

namespace cforge {

namespace fs = std::filesystem;

void GenerationConfig::validate() const {
  if (scene_count < 0) throw Error("scene_count must be non-negative");
  if (test_scene_count < 0) throw Error("test_scene_count must be non-negative");
  if (!(train_fraction >= 0 && train_fraction <= 1 && val_fraction >= 0 && val_fraction <= 1))
    throw Error("split fractions must lie in [0, 1]");
  if (std::abs(train_fraction + val_fraction - 1.0) > 1e-9) throw Error("split fractions must sum to 1");
  if (!(p_damage >= 0 && p_damage <= 1)) throw Error("p_damage must lie in [0, 1]");
  if (max_damages < 1 || max_damages > 99) throw Error("max_damages must lie in [1, 99]");
  if (damage_retries < 1) throw Error("damage_retries must be >= 1");
  if (atlas_width < 64 || atlas_height < 32) throw Error("atlas must be at least 64x32");
  if (environments.empty()) throw Error("environments must not be empty");
  if (!(exposure > 0)) throw Error("exposure must be positive");
  if (annotate.connectivity != 4 && annotate.connectivity != 8) throw Error("connectivity must be 4 or 8");
  if (annotate.min_area < 1) throw Error("min_area must be >= 1");
  container.validate();
  texture.validate();
  rig.validate();
}

namespace {

bool is_procedural(const std::string& name) {
  return std::find_if(kProceduralEnvironments.begin(), kProceduralEnvironments.end(),
                      [&](const char* n) { return name == n; }) != kProceduralEnvironments.end();
}

// Centers the prop over the container with its lowest point just above the roof.
PropMesh place_prop(PropMesh prop, const ContainerSpec& spec) {
  if (prop.vertices.empty()) return prop;
  const Aabb b = bounds(prop.vertices);
  const Vec3 shift{spec.length_m / 2 - (b.min.x + b.max.x) / 2, spec.width_m / 2 - (b.min.y + b.max.y) / 2,
                   spec.height_m + 0.05 - b.min.z};
  for (Vec3& v : prop.vertices) v += shift;
  return prop;
}

std::string hex_color(const std::array<std::uint8_t, 3>& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string scene_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

}  // namespace

GenerationContext::GenerationContext(const GenerationConfig& config) : cfg(config) {
  cfg.validate();
  pristine = layout_uv(build_container(cfg.container), cfg.atlas_width, cfg.atlas_height);
  if (!cfg.marker_art_dir.empty()) catalog.load_art(cfg.marker_art_dir);
  if (!cfg.prop_obj.empty()) prop = place_prop(read_obj(cfg.prop_obj), cfg.container);
  for (const std::string& e : cfg.environments)
    if (!is_procedural(e) && !loaded_envs.count(e)) loaded_envs.emplace(e, load_environment(e, cfg.exposure));
}

SceneArtifacts generate_scene(const GenerationContext& ctx, int index, const std::string& split, bool keep_masks) {
  const GenerationConfig& cfg = ctx.cfg;
  const std::string ns = split == "test" ? "test/" : "";
  auto rng_for = [&](const char* stage) { return stream(cfg.master_seed, static_cast<std::uint64_t>(index), ns + stage); };
  SceneArtifacts art;
  art.index = index;
  art.split = split;
  try {
    // Damages
    Rng rd = rng_for("damage");
    art.plan = plan_damages(rd, cfg.p_damage, cfg.max_damages);
    ContainerMesh current = ctx.pristine;
    for (DamageKind kind : art.plan.kinds) {
      const int instance = static_cast<int>(art.damages.size()) + 1;
      for (int attempt = 0;; ++attempt) {
        if (attempt == cfg.damage_retries)
          throw Error("could not place " + std::string(damage_name(kind)) + " damage after " +
                      std::to_string(cfg.damage_retries) + " attempts");
        try {
          const DamageParams params = sample_damage(kind, current, rd, cfg.damage_limits);
          ContainerMesh trial = current;
          DamageInstance inst = record_damage(ctx.pristine, trial, params, instance, 1e-3, cfg.damage_limits);
          if (inst.region.empty()) continue;
          current = std::move(trial);
          art.damages.push_back(std::move(inst));
          break;
        } catch (const Error&) {
          // Sampled placement collides with an earlier damage; draw again.
        }
      }
    }

    // Material
    Rng rm = rng_for("material");
    UvLayerStack stack = compose_material(rm, cfg.texture, ctx.pristine);
    art.base_color = stack.base_color;
    for (const DamageInstance& d : art.damages) apply_aged_faces(stack, ctx.pristine, d.aged_faces);

    // Decals
    Rng rdec = rng_for("decal");
    art.container_id = gen_container_id(rdec);
    const UvLayout& layout = ctx.pristine.layout;
    std::vector<std::pair<Placement, UvMask>> decals;
    int slot = 0;
    const int per_scene = cfg.texture.marker_count_range.second * static_cast<int>(kAnnotatedSides.size());
    for (Side side : kAnnotatedSides) {
      std::vector<Rect> occupied;
      std::optional<std::vector<std::size_t>> forced;
      if (cfg.texture.marker_quota) {
        const auto n = rdec.uniform_int(cfg.texture.marker_count_range.first, cfg.texture.marker_count_range.second);
        forced.emplace();
        for (std::int64_t k = 0; k < n; ++k)
          forced->push_back(static_cast<std::size_t>((index * per_scene + slot++) % static_cast<int>(ctx.catalog.size())));
      }
      DecalResult markers = place_imdg_markers(stack, rdec, ctx.catalog, cfg.texture, side, layout, occupied, forced);
      DecalResult texts = place_texts(stack, rdec, cfg.texture, side, layout, art.container_id, occupied);
      for (DecalResult* r : {&markers, &texts})
        for (std::size_t k = 0; k < r->placements.size(); ++k) {
          art.placements.push_back(r->placements[k]);
          if (r->placements[k].kind != EntityKind::brand) decals.emplace_back(r->placements[k], std::move(r->masks[k]));
        }
    }

    // Scene
    Scene scene;
    scene.mesh = std::move(current);
    scene.albedo = stack.composite();
    scene.roughness = std::move(stack.roughness);
    scene.prop = ctx.prop;
    Rng re = rng_for("env");
    art.environment = re.pick(cfg.environments);
    const double sun_azimuth = re.uniform(-std::numbers::pi, std::numbers::pi);
    scene.env = is_procedural(art.environment)
                    ? procedural_environment(art.environment, sun_azimuth, cfg.exposure)
                    : ctx.loaded_envs.at(art.environment);
    Rng rc = rng_for("camera");
    scene.cameras = make_camera_rig(cfg.container, cfg.rig, &rc);

    add_container_entity(scene, 1);
    art.labels.push_back({1, Task::damage, 1, "container", ""});
    art.labels.push_back({1, Task::detection, kContainerDetectionClass, "container", ""});
    for (const DamageInstance& d : art.damages) {
      const int id = 100 + d.instance_id;
      add_damage_entity(scene, id, d, damage_class_id(d.kind));
      art.labels.push_back({id, Task::damage, damage_class_id(d.kind), std::string(damage_name(d.kind)), ""});
    }
    int decal_id = 1000;
    for (const auto& [p, mask] : decals) {
      add_decal_entity(scene, decal_id, p.class_id, mask);
      if (p.kind == EntityKind::imdg) {
        ++art.markers_placed;
        art.labels.push_back({decal_id, Task::detection, p.class_id, p.class_label, ""});
      } else {
        ++art.texts_placed;
        art.labels.push_back({decal_id, Task::detection, kTextClass, "text", p.payload});
      }
      ++decal_id;
    }
    scene.validate();

    // Render and annotate
    for (std::size_t v = 0; v < 4; ++v) {
      CameraView& view = art.views[v];
      view.camera = scene.cameras[v];
      view.passes = render_all(scene, view.camera);
      view.annotations = annotate_image(static_cast<int>(v), view.passes, art.labels, cfg.annotate);
      if (!keep_masks) view.passes.entity_masks.clear();
    }
  } catch (const Error& e) {
    throw Error(split + " scene " + std::to_string(index) + ": " + e.what());
  }
  return art;
}

SplitAssignment assign_splits(std::uint64_t master_seed, int n, double val_fraction) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = stream(master_seed, 0, "split");
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
  const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * n));
  SplitAssignment s;
  s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

namespace {

struct SceneOutput {
  SceneRecord record;
  std::array<ImageRecord, 4> images;
  std::array<std::vector<AnnotationRecord>, 4> annotations;
  std::vector<TextCrop> crops;
};

SceneOutput write_scene(const fs::path& root, const SceneArtifacts& art) {
  SceneOutput out;
  out.record.index = art.index;
  out.record.split = art.split;
  out.record.container_id = art.container_id;
  out.record.environment = art.environment;
  out.record.base_color = hex_color(art.base_color);
  out.record.markers_placed = art.markers_placed;
  out.record.texts_placed = art.texts_placed;
  for (const DamageInstance& d : art.damages)
    out.record.damages.push_back(
        {std::string(damage_name(d.kind)), d.instance_id, std::string(side_name(d.side)), d.removed_faces});

  const std::string stem = scene_stem(art.index);
  const fs::path split_dir = root / art.split;
  for (std::size_t v = 0; v < 4; ++v) {
    const CameraView& view = art.views[v];
    const std::string& cam = view.camera.name;
    ImageRecord& im = out.images[v];
    im.camera = cam;
    im.scene = art.index;
    im.split = art.split;
    im.width = view.camera.width;
    im.height = view.camera.height;
    im.file = art.split + "/images/" + cam + "/" + stem + ".png";
    im.seg_file = art.split + "/damage/" + cam + "/" + stem + ".png";
    im.yolo_file = art.split + "/imdg/" + cam + "/" + stem + ".txt";
    fs::create_directories((root / im.file).parent_path());
    write_png(root / im.file, view.passes.beauty);
    write_seg_png(root / im.seg_file, view.passes.id_pass);

    std::string yolo;
    for (const AnnotationRecord& a : view.annotations)
      if (a.task == Task::detection) yolo += encode_yolo_line(a.class_id, a.bbox, im.width, im.height) + "\n";
    fs::create_directories((root / im.yolo_file).parent_path());
    std::ofstream(root / im.yolo_file, std::ios::binary) << yolo;

    const auto crops = emit_text_crops(view.passes.beauty, view.annotations, split_dir / "text", cam + "/" + stem);
    for (const TextCrop& c : crops) im.crops.push_back(art.split + "/text/" + c.file);
    out.crops.insert(out.crops.end(), crops.begin(), crops.end());
    out.annotations[v] = view.annotations;
  }
  return out;
}

}  // namespace

DatasetManifest run_dataset(const GenerationConfig& cfg, const RunOptions& opt) {
  const GenerationContext ctx(cfg);
  const fs::path root = cfg.output;
  if (opt.jobs < 1) throw Error("jobs must be >= 1");
  fs::create_directories(root);
  if (fs::exists(root / "manifest.json"))
    for (const char* s : kSplits) fs::remove_all(root / s);

  DatasetManifest m;
  m.config = config_to_json(cfg);
  m.config.erase("output");  // the manifest sits in the output root
  m.overrides = opt.overrides;
  m.door_all_cameras = cfg.door_all_cameras;
  m.complete = false;
  write_manifest(root / "manifest.json", m);

  struct Job {
    int index;
    std::string split;
  };
  std::vector<Job> tasks;
  const SplitAssignment splits = assign_splits(cfg.master_seed, cfg.scene_count, cfg.val_fraction);
  for (int i : splits.train) tasks.push_back({i, "train"});
  for (int i : splits.val) tasks.push_back({i, "val"});
  for (int i = 0; i < cfg.test_scene_count; ++i) tasks.push_back({i, "test"});

  std::vector<SceneOutput> outputs(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::atomic<int> done{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next++;
      if (t >= tasks.size() || failed) return;
      try {
        const SceneArtifacts art = generate_scene(ctx, tasks[t].index, tasks[t].split, false);
        outputs[t] = write_scene(root, art);
      } catch (...) {
        errors[t] = std::current_exception();
        failed = true;
        return;
      }
      const int d = ++done;
      if (!opt.quiet) {
        std::lock_guard lock(log_mutex);
        std::fprintf(stderr, "scene %d/%zu done\n", d, tasks.size());
      }
    }
  };
  const int n_threads = std::min<int>(opt.jobs, std::max<int>(1, static_cast<int>(tasks.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Single-writer aggregation in task order.
  std::map<std::string, std::vector<TextCrop>> crops_by_split;
  int image_id = 1;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    SceneOutput& o = outputs[t];
    m.scenes.push_back(o.record);
    for (std::size_t v = 0; v < 4; ++v) {
      o.images[v].id = image_id;
      for (AnnotationRecord a : o.annotations[v]) {
        a.image_id = image_id;
        m.annotations.push_back(std::move(a));
      }
      m.images.push_back(o.images[v]);
      ++image_id;
    }
    auto& c = crops_by_split[tasks[t].split];
    c.insert(c.end(), o.crops.begin(), o.crops.end());
  }
  for (const char* s : kSplits) {
    const bool present = std::any_of(tasks.begin(), tasks.end(), [&](const Job& t) { return t.split == s; });
    if (!present) continue;
    write_coco(root / s / "damage" / "coco.json", m, s, Task::damage);
    write_coco(root / s / "imdg" / "coco.json", m, s, Task::detection);
    write_text_labels(root / s / "text" / "labels.txt", crops_by_split[s]);
    emit_door_split(m, root, s, cfg.door_all_cameras);
  }
  // Polygons live in the COCO files only.
  for (AnnotationRecord& a : m.annotations) a.polygons.clear();
  m.complete = true;
  const StatsReport stats = compute_stats(m);
  {
    std::ofstream js(root / "stats.json", std::ios::binary);
    js << stats.to_json().dump(2) << "\n";
    std::ofstream txt(root / "stats.txt", std::ios::binary);
    txt << stats.to_text();
  }
  write_manifest(root / "manifest.json", m);
  return m;
}

}  // namespace cforge
