#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "containerforge/image_io.hpp"
#include "containerforge/pipeline.hpp"

namespace cforge {

namespace fs = std::filesystem;
using nlohmann::json;

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult& ValidationReport::check(std::string_view name) const {
  for (const CheckResult& c : checks)
    if (c.name == name) return c;
  throw Error("no check named '" + std::string(name) + "'");
}

std::string ValidationReport::to_text() const {
  std::string out;
  for (const CheckResult& c : checks) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s %s  checked=%ld failures=%ld\n", c.name.c_str(), c.passed ? "PASS" : "FAIL",
                  c.checked, c.failures);
    out += buf;
    for (const std::string& m : c.messages) out += "    " + m + "\n";
  }
  return out;
}

namespace {

void fail(CheckResult& c, const std::string& msg) {
  c.passed = false;
  ++c.failures;
  if (c.messages.size() < 10) c.messages.push_back(msg);
}

std::optional<json> load_json(const fs::path& path, CheckResult& c) {
  std::ifstream in(path);
  if (!in) {
    fail(c, "missing " + path.generic_string());
    return std::nullopt;
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(c, "unreadable " + path.generic_string() + ": " + e.what());
    return std::nullopt;
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) lines.push_back(l);
  return lines;
}

long manifest_count(const DatasetManifest& m, std::string_view split, Task task) {
  std::map<int, const ImageRecord*> images;
  for (const ImageRecord& im : m.images) images[im.id] = &im;
  long n = 0;
  for (const AnnotationRecord& a : m.annotations) {
    const auto it = images.find(a.image_id);
    n += a.task == task && it != images.end() && it->second->split == split;
  }
  return n;
}

bool split_present(const DatasetManifest& m, std::string_view split) {
  return std::any_of(m.scenes.begin(), m.scenes.end(), [&](const SceneRecord& s) { return s.split == split; });
}

void check_images(const fs::path& root, const DatasetManifest& m, CheckResult& images, CheckResult& seg) {
  for (const ImageRecord& im : m.images) {
    ++images.checked;
    try {
      const Image8 img = read_png8(root / im.file);
      if (img.width() != im.width || img.height() != im.height || img.channels() != 3)
        fail(images, im.file + ": unexpected size or channel count");
    } catch (const Error& e) {
      fail(images, im.file + ": " + e.what());
    }
    ++seg.checked;
    try {
      const Image16 id = read_png16(root / im.seg_file);
      if (id.width() != im.width || id.height() != im.height || id.channels() != 1) {
        fail(seg, im.seg_file + ": unexpected size or channel count");
        continue;
      }
      for (auto v : id.data()) {
        if (v == 0) continue;
        const int c = decode_class(v), i = decode_instance(v);
        if (c < 1 || c > static_cast<int>(damage_classes().size()) || i < 1) {
          fail(seg, im.seg_file + ": invalid label " + std::to_string(v));
          break;
        }
      }
    } catch (const Error& e) {
      fail(seg, im.seg_file + ": " + e.what());
    }
  }
}

void check_detection(const fs::path& root, const DatasetManifest& m, std::string_view split, CheckResult& c,
                     CheckResult& counts) {
  const auto coco = load_json(root / split / "imdg" / "coco.json", c);
  if (!coco) return;
  std::map<int, std::string> file_of;
  for (const json& im : coco->at("images")) file_of[im.at("id").get<int>()] = im.at("file_name").get<std::string>();
  std::map<std::string, std::vector<const json*>> by_file;
  for (const json& a : coco->at("annotations")) by_file[file_of[a.at("image_id").get<int>()]].push_back(&a);

  long expected = 0;
  const std::string prefix = std::string(split) + "/";
  for (const ImageRecord& im : m.images) {
    if (im.split != split) continue;
    const std::string file = im.file.substr(prefix.size());
    const auto& anns = by_file[file];
    const auto lines = read_lines(root / im.yolo_file);
    ++c.checked;
    if (!fs::exists(root / im.yolo_file)) {
      fail(c, "missing " + im.yolo_file);
      continue;
    }
    if (lines.size() != anns.size()) {
      fail(c, im.yolo_file + ": " + std::to_string(lines.size()) + " lines, COCO has " + std::to_string(anns.size()));
      continue;
    }
    for (std::size_t k = 0; k < lines.size(); ++k) {
      try {
        const YoloBox y = parse_yolo_line(lines[k]);
        const auto px = denormalize(y, im.width, im.height);
        const json& b = anns[k]->at("bbox");
        bool match = y.class_id == anns[k]->at("category_id").get<int>();
        for (std::size_t i = 0; i < 4; ++i) match = match && std::abs(px[i] - b[i].get<double>()) <= 0.5;
        if (!match) fail(c, im.yolo_file + ":" + std::to_string(k + 1) + ": YOLO box disagrees with COCO");
      } catch (const Error& e) {
        fail(c, im.yolo_file + ":" + std::to_string(k + 1) + ": " + e.what());
      }
    }
  }
  expected = manifest_count(m, split, Task::detection);
  ++counts.checked;
  if (static_cast<long>(coco->at("annotations").size()) != expected)
    fail(counts, std::string(split) + "/imdg/coco.json: annotation count differs from manifest");
}

void check_damage(const fs::path& root, const DatasetManifest& m, std::string_view split, CheckResult& c,
                  CheckResult& counts) {
  const auto coco = load_json(root / split / "damage" / "coco.json", c);
  if (!coco) return;
  std::map<int, std::pair<int, int>> size_of;
  for (const json& im : coco->at("images"))
    size_of[im.at("id").get<int>()] = {im.at("width").get<int>(), im.at("height").get<int>()};
  for (const json& a : coco->at("annotations")) {
    ++c.checked;
    const std::string where = std::string(split) + "/damage/coco.json annotation " + std::to_string(a.at("id").get<int>());
    const auto it = size_of.find(a.at("image_id").get<int>());
    if (it == size_of.end()) {
      fail(c, where + ": unknown image");
      continue;
    }
    const auto [w, h] = it->second;
    std::vector<Polygon> polys;
    bool inside = true;
    for (const json& flat : a.at("segmentation")) {
      Polygon p;
      for (std::size_t k = 0; k + 1 < flat.size(); k += 2) {
        const int x = flat[k].get<int>(), y = flat[k + 1].get<int>();
        inside = inside && x >= 0 && y >= 0 && x <= w && y <= h;
        p.push_back({x, y});
      }
      if (p.size() < 3) inside = false;
      polys.push_back(std::move(p));
    }
    if (polys.empty() || !inside) {
      fail(c, where + ": missing or out-of-image polygon");
      continue;
    }
    const BBox pb = polygon_bounds(polys);
    const json& b = a.at("bbox");
    const int bb[4] = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
    if (std::abs(pb.x - bb[0]) > 1 || std::abs(pb.y - bb[1]) > 1 || std::abs(pb.w - bb[2]) > 1 ||
        std::abs(pb.h - bb[3]) > 1)
      fail(c, where + ": bbox differs from polygon bounds");
    if (a.at("area").get<long>() <= 0) fail(c, where + ": non-positive area");
  }
  const long expected = manifest_count(m, split, Task::damage);
  ++counts.checked;
  if (static_cast<long>(coco->at("annotations").size()) != expected)
    fail(counts, std::string(split) + "/damage/coco.json: annotation count differs from manifest");
}

void check_crops(const fs::path& root, const DatasetManifest& m, std::string_view split, CheckResult& c) {
  const fs::path text_dir = root / split / "text";
  std::map<std::string, std::string> labels;
  for (const std::string& l : read_lines(text_dir / "labels.txt")) {
    const auto tab = l.find('\t');
    if (tab == std::string::npos) {
      fail(c, "labels.txt: malformed line '" + l + "'");
      continue;
    }
    labels[l.substr(0, tab)] = l.substr(tab + 1);
  }
  std::set<std::string> listed;
  const std::string prefix = std::string(split) + "/text/";
  std::map<int, std::vector<const AnnotationRecord*>> texts;
  for (const AnnotationRecord& a : m.annotations)
    if (a.task == Task::detection && a.class_id == kTextClass) texts[a.image_id].push_back(&a);
  for (const ImageRecord& im : m.images) {
    if (im.split != split) continue;
    const auto& anns = texts[im.id];
    if (anns.size() != im.crops.size()) {
      fail(c, im.file + ": " + std::to_string(im.crops.size()) + " crops for " + std::to_string(anns.size()) + " texts");
      continue;
    }
    std::optional<Image8> beauty;
    for (std::size_t k = 0; k < im.crops.size(); ++k) {
      ++c.checked;
      const std::string rel = im.crops[k].substr(prefix.size());
      listed.insert(rel);
      const auto lab = labels.find(rel);
      if (lab == labels.end()) {
        fail(c, "crop " + rel + " has no label");
      } else if (lab->second != anns[k]->text) {
        fail(c, "crop " + rel + " label differs from the manifest");
      }
      if (!fs::exists(root / im.crops[k])) {
        fail(c, "missing crop " + rel);
        continue;
      }
      try {
        if (!beauty) beauty = read_png8(root / im.file);
        if (!(read_png8(root / im.crops[k]) == crop(*beauty, anns[k]->bbox)))
          fail(c, "crop " + rel + " differs from its image region");
      } catch (const Error& e) {
        fail(c, "crop " + rel + ": " + e.what());
      }
    }
  }
  for (const auto& [file, text] : labels)
    if (!listed.count(file)) fail(c, "labels.txt lists unknown crop " + file);
  if (fs::is_directory(text_dir))
    for (const auto& e : fs::recursive_directory_iterator(text_dir)) {
      if (!e.is_regular_file() || e.path().extension() != ".png") continue;
      const std::string rel = fs::relative(e.path(), text_dir).generic_string();
      if (!labels.count(rel)) fail(c, "crop " + rel + " is not listed in labels.txt");
    }
}

void check_door(const fs::path& root, const DatasetManifest& m, std::string_view split, CheckResult& c) {
  int door = 0, no_door = 0;
  for (const ImageRecord& im : m.images) {
    if (im.split != split) continue;
    if (im.camera == "Cr") ++door;
    else if (im.camera == "Cl" || m.door_all_cameras) ++no_door;
  }
  auto count = [](const fs::path& dir) {
    int n = 0;
    if (fs::is_directory(dir))
      for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
    return n;
  };
  ++c.checked;
  const int d = count(root / split / "door" / "door"), nd = count(root / split / "door" / "no_door");
  if (d != door || nd != no_door)
    fail(c, std::string(split) + "/door: " + std::to_string(d) + "/" + std::to_string(nd) + " files, expected " +
                std::to_string(door) + "/" + std::to_string(no_door));
}

}  // namespace

ValidationReport validate_dataset(const fs::path& root) {
  ValidationReport report;
  auto named = [](const char* name) {
    CheckResult c;
    c.name = name;
    return c;
  };
  CheckResult manifest = named("manifest"), images = named("images"), seg = named("seg_png"),
              yolo = named("coco_yolo"), damage = named("coco_damage"), counts = named("coco_counts"),
              crops = named("text_crops"), door = named("door_split");
  DatasetManifest m;
  ++manifest.checked;
  try {
    m = read_manifest(root / "manifest.json");
    if (!m.complete) fail(manifest, "manifest is marked incomplete");
    for (std::size_t i = 0; i < m.images.size(); ++i)
      if (m.images[i].id != static_cast<int>(i) + 1) fail(manifest, "image ids are not contiguous");
  } catch (const Error& e) {
    fail(manifest, e.what());
    report.checks = {manifest};
    return report;
  }
  check_images(root, m, images, seg);
  for (const char* s : kSplits) {
    if (!split_present(m, s)) continue;
    try {
      check_detection(root, m, s, yolo, counts);
    } catch (const json::exception& e) {
      fail(yolo, std::string(s) + "/imdg/coco.json: " + e.what());
    }
    try {
      check_damage(root, m, s, damage, counts);
    } catch (const json::exception& e) {
      fail(damage, std::string(s) + "/damage/coco.json: " + e.what());
    }
    check_crops(root, m, s, crops);
    check_door(root, m, s, door);
  }
  report.checks = {manifest, images, seg, yolo, damage, counts, crops, door};
  return report;
}

}  // namespace cforge
