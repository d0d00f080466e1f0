#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "containerforge/image.hpp"
#include "containerforge/render.hpp"

namespace cforge {

using BBox = Rect;

// ---------------------------------------------------------------------------
// Masks

struct Component {
  Rect bbox;
  long area = 0;
};

// Connected components of the nonzero pixels, in raster order of their first
// pixel. `labels` (optional) receives 1-based component ids.
std::vector<Component> connected_components(const Mask& mask, int connectivity, Image<std::int32_t>* labels = nullptr);

// Drops components smaller than min_area; survivors are 255.
Mask filter_components(const Mask& mask, int connectivity, int min_area);

// Union bounding rectangle of the components that reach min_area.
std::optional<BBox> cca_bboxes(const Mask& mask, int connectivity = 8, int min_area = 4);

// Outer boundary of each connected component, as pixel-corner coordinates
// traced clockwise on screen. Collinear points are merged.
using Polygon = std::vector<std::array<int, 2>>;
std::vector<Polygon> mask_to_polygons(const Mask& mask, int connectivity = 8);
BBox polygon_bounds(const std::vector<Polygon>& polygons);

// ---------------------------------------------------------------------------
// Class tables

struct ClassEntry {
  int id = 0;
  std::string name;
};

// container=1, axis=2, concave=3, dented=4, perforation=5.
const std::vector<ClassEntry>& damage_classes();
// text=0, C1.1..C9.1 = 1..26, container=27.
const std::vector<ClassEntry>& detection_classes();
int damage_class_id(DamageKind kind);
inline constexpr int kTextClass = 0;
inline constexpr int kContainerDetectionClass = 27;

// ---------------------------------------------------------------------------
// YOLO

std::string encode_yolo_line(int class_id, const BBox& box, int img_w, int img_h);

struct YoloBox {
  int class_id = 0;
  double xc = 0, yc = 0, w = 0, h = 0;  // normalized
};
YoloBox parse_yolo_line(std::string_view line);
// Pixel box (x, y, w, h).
std::array<double, 4> denormalize(const YoloBox& box, int img_w, int img_h);

// ---------------------------------------------------------------------------
// Records and manifest

enum class Task : std::uint8_t { damage, detection };
std::string_view task_name(Task t);

struct AnnotationRecord {
  int image_id = 0;
  int entity_id = 0;
  Task task{};
  int class_id = 0;
  std::string class_name;
  BBox bbox;
  std::vector<Polygon> polygons;  // damage task only; not stored in the manifest
  long area = 0;
  std::string text;  // ground-truth string of text entities
};

struct ImageRecord {
  int id = 0;
  std::string file;  // relative to the dataset root
  std::string camera;
  int scene = 0;
  std::string split;
  int width = 0;
  int height = 0;
  std::string seg_file;
  std::string yolo_file;
  std::vector<std::string> crops;
};

struct DamageSummary {
  std::string kind;
  int instance = 0;
  std::string side;
  std::size_t removed_faces = 0;
};

struct SceneRecord {
  int index = 0;
  std::string split;
  std::string container_id;
  std::string environment;
  std::string base_color;  // hex
  std::vector<DamageSummary> damages;
  int markers_placed = 0;
  int texts_placed = 0;
};

inline constexpr std::array<const char*, 3> kSplits{"train", "val", "test"};

struct DatasetManifest {
  bool complete = false;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json overrides = nlohmann::json::object();
  bool door_all_cameras = false;
  std::vector<SceneRecord> scenes;
  std::vector<ImageRecord> images;
  std::vector<AnnotationRecord> annotations;
};

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Annotation of rendered passes

struct EntityLabel {
  int entity_id = 0;
  Task task{};
  int class_id = 0;
  std::string class_name;
  std::string text;
};

struct AnnotateOptions {
  int connectivity = 8;
  int min_area = 4;
};

// One record per label whose entity survives min_area filtering in this view.
std::vector<AnnotationRecord> annotate_image(int image_id, const RenderPasses& passes,
                                             const std::vector<EntityLabel>& labels, const AnnotateOptions& opt = {});

// ---------------------------------------------------------------------------
// Writers

// COCO layout for one split and task. Image and annotation ids are renumbered
// from 1 within the file.
nlohmann::json coco_json(const DatasetManifest& m, std::string_view split, Task task);
void write_coco(const std::filesystem::path& path, const DatasetManifest& m, std::string_view split, Task task);

void write_seg_png(const std::filesystem::path& path, const Image16& id_pass);

struct TextCrop {
  std::string file;  // relative to the text directory
  std::string text;
};

// Writes `<text_dir>/<stem>_<k>.png` for each text annotation and returns the
// crops in order. Empty boxes are skipped.
std::vector<TextCrop> emit_text_crops(const Image8& beauty, const std::vector<AnnotationRecord>& annotations,
                                      const std::filesystem::path& text_dir, const std::string& stem);
void write_text_labels(const std::filesystem::path& path, const std::vector<TextCrop>& crops);

struct DoorSplitCounts {
  int door = 0;
  int no_door = 0;
};

// Copies beauty images of `split` into <root>/<split>/door/{door,no_door}.
// Cr is the positive camera; Cl is negative, and A and B too if all_cameras.
DoorSplitCounts emit_door_split(const DatasetManifest& m, const std::filesystem::path& root, std::string_view split,
                                bool all_cameras);

}  // namespace cforge
