#include <climits>
#include <cstdio>
#include <fstream>
#include <map>

#include "containerforge/annotate.hpp"
#include "containerforge/image_io.hpp"

namespace cforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Component> connected_components(const Mask& mask, int connectivity, Image<std::int32_t>* labels_out) {
  if (connectivity != 4 && connectivity != 8) throw Error("connectivity must be 4 or 8");
  const int w = mask.width(), h = mask.height();
  Image<std::int32_t> labels(w, h, 1);
  std::vector<Component> comps;
  std::vector<std::pair<int, int>> stack;
  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || labels.at(x, y)) continue;
      const auto id = static_cast<std::int32_t>(comps.size() + 1);
      int x0 = x, x1 = x, y0 = y, y1 = y;
      long area = 0;
      labels.at(x, y) = id;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++area;
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        for (int k = 0; k < connectivity; ++k) {
          const int nx = cx + kDx[k], ny = cy + kDy[k];
          if (!mask.contains(nx, ny) || !mask.at(nx, ny) || labels.at(nx, ny)) continue;
          labels.at(nx, ny) = id;
          stack.emplace_back(nx, ny);
        }
      }
      comps.push_back({{x0, y0, x1 - x0 + 1, y1 - y0 + 1}, area});
    }
  if (labels_out) *labels_out = std::move(labels);
  return comps;
}

Mask filter_components(const Mask& mask, int connectivity, int min_area) {
  Image<std::int32_t> labels;
  const auto comps = connected_components(mask, connectivity, &labels);
  Mask out(mask.width(), mask.height(), 1);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      const auto l = labels.at(x, y);
      if (l && comps[static_cast<std::size_t>(l - 1)].area >= min_area) out.at(x, y) = 255;
    }
  return out;
}

std::optional<BBox> cca_bboxes(const Mask& mask, int connectivity, int min_area) {
  std::optional<BBox> out;
  for (const Component& c : connected_components(mask, connectivity)) {
    if (c.area < min_area) continue;
    if (!out) {
      out = c.bbox;
      continue;
    }
    const int x0 = std::min(out->x, c.bbox.x), y0 = std::min(out->y, c.bbox.y);
    const int x1 = std::max(out->right(), c.bbox.right()), y1 = std::max(out->bottom(), c.bbox.bottom());
    out = BBox{x0, y0, x1 - x0, y1 - y0};
  }
  return out;
}

std::vector<Polygon> mask_to_polygons(const Mask& mask, int connectivity) {
  Image<std::int32_t> labels;
  const auto comps = connected_components(mask, connectivity, &labels);
  std::vector<Polygon> polys;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto id = static_cast<std::int32_t>(i + 1);
    auto inside = [&](int x, int y) { return labels.contains(x, y) && labels.at(x, y) == id; };
    // First pixel in raster order; its top-left corner is on the outer contour.
    const Rect& b = comps[i].bbox;
    int sx = b.x;
    while (!inside(sx, b.y)) ++sx;
    const std::array<int, 2> start{sx, b.y};
    // Walk pixel cracks keeping the component on the right (y points down).
    int cx = sx, cy = b.y, dx = 1, dy = 0;
    Polygon poly{start};
    for (;;) {
      cx += dx;
      cy += dy;
      // Pixels ahead-left and ahead-right of the corner, relative to (dx, dy).
      const int rx = -dy, ry = dx;
      const bool al = inside(cx + (dx - rx - 1) / 2, cy + (dy - ry - 1) / 2);
      const bool ar = inside(cx + (dx + rx - 1) / 2, cy + (dy + ry - 1) / 2);
      int ndx, ndy;
      if (al && (ar || connectivity == 8)) {
        ndx = dy;
        ndy = -dx;
      } else if (ar) {
        ndx = dx;
        ndy = dy;
      } else {
        ndx = -dy;
        ndy = dx;
      }
      if (cx == start[0] && cy == start[1] && ndx == 1 && ndy == 0) break;
      if (ndx != dx || ndy != dy) poly.push_back({cx, cy});
      dx = ndx;
      dy = ndy;
    }
    polys.push_back(std::move(poly));
  }
  return polys;
}

BBox polygon_bounds(const std::vector<Polygon>& polygons) {
  int x0 = INT_MAX, y0 = INT_MAX, x1 = INT_MIN, y1 = INT_MIN;
  for (const auto& p : polygons)
    for (const auto& [x, y] : p) {
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  if (x0 > x1) return {};
  return {x0, y0, x1 - x0, y1 - y0};
}

const std::vector<ClassEntry>& damage_classes() {
  static const std::vector<ClassEntry> kTable{
      {1, "container"}, {2, "axis"}, {3, "concave"}, {4, "dented"}, {5, "perforation"}};
  return kTable;
}

const std::vector<ClassEntry>& detection_classes() {
  static const std::vector<ClassEntry> kTable = [] {
    std::vector<ClassEntry> t{{kTextClass, "text"}};
    const MarkerCatalog catalog;
    for (const MarkerEntry& e : catalog.entries()) t.push_back({e.class_id, e.code});
    t.push_back({kContainerDetectionClass, "container"});
    return t;
  }();
  return kTable;
}

int damage_class_id(DamageKind kind) { return 2 + static_cast<int>(kind); }

std::string encode_yolo_line(int class_id, const BBox& b, int img_w, int img_h) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", class_id, (b.x + b.w / 2.0) / img_w,
                (b.y + b.h / 2.0) / img_h, static_cast<double>(b.w) / img_w, static_cast<double>(b.h) / img_h);
  return buf;
}

YoloBox parse_yolo_line(std::string_view line) {
  YoloBox b;
  const std::string s(line);
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d %lf %lf %lf %lf %c", &b.class_id, &b.xc, &b.yc, &b.w, &b.h, &tail) != 5)
    throw Error("malformed YOLO line: '" + s + "'");
  return b;
}

std::array<double, 4> denormalize(const YoloBox& b, int img_w, int img_h) {
  const double w = b.w * img_w, h = b.h * img_h;
  return {b.xc * img_w - w / 2, b.yc * img_h - h / 2, w, h};
}

std::string_view task_name(Task t) { return t == Task::damage ? "damage" : "detection"; }

namespace {

Task task_from_name(std::string_view s) {
  if (s == "damage") return Task::damage;
  if (s == "detection") return Task::detection;
  throw Error("unknown task '" + std::string(s) + "'");
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }
Rect rect_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()}; }

}  // namespace

json manifest_to_json(const DatasetManifest& m) {
  json scenes = json::array();
  for (const SceneRecord& s : m.scenes) {
    json dmg = json::array();
    for (const DamageSummary& d : s.damages)
      dmg.push_back({{"kind", d.kind}, {"instance", d.instance}, {"side", d.side}, {"removed_faces", d.removed_faces}});
    scenes.push_back({{"index", s.index},
                      {"split", s.split},
                      {"container_id", s.container_id},
                      {"environment", s.environment},
                      {"base_color", s.base_color},
                      {"damages", std::move(dmg)},
                      {"markers_placed", s.markers_placed},
                      {"texts_placed", s.texts_placed}});
  }
  std::map<int, json> per_image;
  for (const AnnotationRecord& a : m.annotations) {
    json r{{"entity_id", a.entity_id},
           {"task", task_name(a.task)},
           {"class_id", a.class_id},
           {"class_name", a.class_name},
           {"bbox", rect_json(a.bbox)},
           {"area", a.area}};
    if (!a.text.empty()) r["text"] = a.text;
    per_image[a.image_id].push_back(std::move(r));
  }
  json images = json::array();
  for (const ImageRecord& im : m.images) {
    json anns = per_image.count(im.id) ? per_image[im.id] : json::array();
    images.push_back({{"id", im.id},
                      {"file", im.file},
                      {"camera", im.camera},
                      {"scene", im.scene},
                      {"split", im.split},
                      {"width", im.width},
                      {"height", im.height},
                      {"seg_file", im.seg_file},
                      {"yolo_file", im.yolo_file},
                      {"crops", im.crops},
                      {"annotations", std::move(anns)}});
  }
  return {{"format", "containerforge-dataset"},
          {"version", 1},
          {"complete", m.complete},
          {"door_all_cameras", m.door_all_cameras},
          {"config", m.config},
          {"overrides", m.overrides},
          {"scenes", std::move(scenes)},
          {"images", std::move(images)}};
}

DatasetManifest manifest_from_json(const json& j) {
  if (j.value("format", "") != "containerforge-dataset") throw Error("not a containerforge manifest");
  DatasetManifest m;
  m.complete = j.at("complete").get<bool>();
  m.door_all_cameras = j.value("door_all_cameras", false);
  m.config = j.value("config", json::object());
  m.overrides = j.value("overrides", json::object());
  for (const json& s : j.at("scenes")) {
    SceneRecord r;
    r.index = s.at("index");
    r.split = s.at("split");
    r.container_id = s.value("container_id", "");
    r.environment = s.value("environment", "");
    r.base_color = s.value("base_color", "");
    r.markers_placed = s.value("markers_placed", 0);
    r.texts_placed = s.value("texts_placed", 0);
    for (const json& d : s.at("damages"))
      r.damages.push_back({d.at("kind"), d.at("instance"), d.at("side"), d.value("removed_faces", std::size_t{0})});
    m.scenes.push_back(std::move(r));
  }
  for (const json& im : j.at("images")) {
    ImageRecord r;
    r.id = im.at("id");
    r.file = im.at("file");
    r.camera = im.at("camera");
    r.scene = im.at("scene");
    r.split = im.at("split");
    r.width = im.at("width");
    r.height = im.at("height");
    r.seg_file = im.value("seg_file", "");
    r.yolo_file = im.value("yolo_file", "");
    r.crops = im.value("crops", std::vector<std::string>{});
    for (const json& a : im.value("annotations", json::array())) {
      AnnotationRecord ar;
      ar.image_id = r.id;
      ar.entity_id = a.at("entity_id");
      ar.task = task_from_name(a.at("task").get<std::string>());
      ar.class_id = a.at("class_id");
      ar.class_name = a.at("class_name");
      ar.bbox = rect_from(a.at("bbox"));
      ar.area = a.at("area");
      ar.text = a.value("text", "");
      m.annotations.push_back(std::move(ar));
    }
    m.images.push_back(std::move(r));
  }
  return m;
}

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error("invalid manifest " + path.string() + ": " + e.what());
  }
}

std::vector<AnnotationRecord> annotate_image(int image_id, const RenderPasses& passes,
                                             const std::vector<EntityLabel>& labels, const AnnotateOptions& opt) {
  std::map<int, Mask> filtered;
  std::vector<AnnotationRecord> out;
  for (const EntityLabel& l : labels) {
    const auto it = passes.entity_masks.find(l.entity_id);
    if (it == passes.entity_masks.end()) throw Error("no mask rendered for entity " + std::to_string(l.entity_id));
    auto f = filtered.find(l.entity_id);
    if (f == filtered.end()) f = filtered.emplace(l.entity_id, filter_components(it->second, opt.connectivity, opt.min_area)).first;
    const Mask& mask = f->second;
    const Rect box = nonzero_bounds(mask);
    if (box.empty()) continue;
    AnnotationRecord r;
    r.image_id = image_id;
    r.entity_id = l.entity_id;
    r.task = l.task;
    r.class_id = l.class_id;
    r.class_name = l.class_name;
    r.bbox = box;
    r.text = l.text;
    r.area = static_cast<long>(std::count(mask.data().begin(), mask.data().end(), 255));
    if (l.task == Task::damage) r.polygons = mask_to_polygons(mask, opt.connectivity);
    out.push_back(std::move(r));
  }
  return out;
}

json coco_json(const DatasetManifest& m, std::string_view split, Task task) {
  json images = json::array(), annotations = json::array(), categories = json::array();
  for (const ClassEntry& c : task == Task::damage ? damage_classes() : detection_classes())
    categories.push_back({{"id", c.id}, {"name", c.name}, {"supercategory", task == Task::damage ? "damage" : "object"}});
  const std::string prefix = std::string(split) + "/";
  std::map<int, int> image_ids;
  for (const ImageRecord& im : m.images) {
    if (im.split != split) continue;
    const int id = static_cast<int>(image_ids.size()) + 1;
    image_ids[im.id] = id;
    const std::string file = im.file.rfind(prefix, 0) == 0 ? im.file.substr(prefix.size()) : im.file;
    images.push_back({{"id", id},
                      {"file_name", file},
                      {"width", im.width},
                      {"height", im.height},
                      {"camera", im.camera},
                      {"scene", im.scene}});
  }
  int next = 1;
  for (const AnnotationRecord& a : m.annotations) {
    if (a.task != task) continue;
    const auto it = image_ids.find(a.image_id);
    if (it == image_ids.end()) continue;
    json r{{"id", next++},
           {"image_id", it->second},
           {"category_id", a.class_id},
           {"bbox", rect_json(a.bbox)},
           {"area", a.area},
           {"iscrowd", 0}};
    if (task == Task::damage) {
      json seg = json::array();
      for (const Polygon& p : a.polygons) {
        json flat = json::array();
        for (const auto& [x, y] : p) {
          flat.push_back(x);
          flat.push_back(y);
        }
        seg.push_back(std::move(flat));
      }
      r["segmentation"] = std::move(seg);
    }
    if (!a.text.empty()) r["text"] = a.text;
    annotations.push_back(std::move(r));
  }
  return {{"info", {{"description", "containerforge synthetic container dataset"}, {"version", "1.0"}}},
          {"images", std::move(images)},
          {"annotations", std::move(annotations)},
          {"categories", std::move(categories)}};
}

void write_coco(const fs::path& path, const DatasetManifest& m, std::string_view split, Task task) {
  write_text_file(path, coco_json(m, split, task).dump() + "\n");
}

void write_seg_png(const fs::path& path, const Image16& id_pass) {
  if (id_pass.channels() != 1) throw Error("id pass must be single-channel");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_png(path, id_pass);
}

std::vector<TextCrop> emit_text_crops(const Image8& beauty, const std::vector<AnnotationRecord>& annotations,
                                      const fs::path& text_dir, const std::string& stem) {
  std::vector<TextCrop> crops;
  int k = 0;
  for (const AnnotationRecord& a : annotations) {
    if (a.task != Task::detection || a.class_id != kTextClass) continue;
    if (a.bbox.empty()) {
      std::fprintf(stderr, "warning: skipping empty text box in %s\n", stem.c_str());
      continue;
    }
    const std::string file = stem + "_" + std::to_string(k++) + ".png";
    const fs::path path = text_dir / file;
    fs::create_directories(path.parent_path());
    write_png(path, crop(beauty, a.bbox));
    crops.push_back({file, a.text});
  }
  return crops;
}

void write_text_labels(const fs::path& path, const std::vector<TextCrop>& crops) {
  std::string s;
  for (const TextCrop& c : crops) s += c.file + "\t" + c.text + "\n";
  write_text_file(path, s);
}

DoorSplitCounts emit_door_split(const DatasetManifest& m, const fs::path& root, std::string_view split,
                                bool all_cameras) {
  const fs::path base = root / split / "door";
  fs::create_directories(base / "door");
  fs::create_directories(base / "no_door");
  DoorSplitCounts counts;
  for (const ImageRecord& im : m.images) {
    if (im.split != split) continue;
    const bool positive = im.camera == "Cr";
    if (!positive && im.camera != "Cl" && !all_cameras) continue;
    char name[64];
    std::snprintf(name, sizeof name, "%06d_%s.png", im.scene, im.camera.c_str());
    fs::copy_file(root / im.file, base / (positive ? "door" : "no_door") / name, fs::copy_options::overwrite_existing);
    ++(positive ? counts.door : counts.no_door);
  }
  return counts;
}

}  // namespace cforge
