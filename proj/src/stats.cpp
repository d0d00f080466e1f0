#include <cstdio>
#include <map>
#include <set>

#include "containerforge/pipeline.hpp"

namespace cforge {

using nlohmann::json;

const SplitStats& StatsReport::split(std::string_view name) const {
  for (const SplitStats& s : splits)
    if (s.split == name) return s;
  throw Error("no split named '" + std::string(name) + "'");
}

StatsReport compute_stats(const DatasetManifest& m) {
  StatsReport report;
  std::map<int, const ImageRecord*> images;
  for (const ImageRecord& im : m.images) images[im.id] = &im;

  for (const char* name : kSplits) {
    SplitStats s;
    s.split = name;
    for (const ClassEntry& c : damage_classes()) s.damage.push_back({c.id, c.name, 0, 0});
    for (const ClassEntry& c : detection_classes()) s.detection.push_back({c.id, c.name, 0, 0});
    auto damage_row = [&](int id) -> ClassCount& { return s.damage.at(static_cast<std::size_t>(id - 1)); };
    auto detection_row = [&](int id) -> ClassCount& { return s.detection.at(static_cast<std::size_t>(id)); };

    for (const SceneRecord& sc : m.scenes) {
      if (sc.split != name) continue;
      ++s.scenes;
      ++(sc.damages.empty() ? s.undamaged : s.damaged);
      for (const DamageSummary& d : sc.damages)
        for (ClassCount& row : s.damage)
          if (row.name == d.kind) ++row.instances;
    }
    for (const ImageRecord& im : m.images)
      if (im.split == name) ++s.images;

    std::set<std::pair<int, int>> container_scenes;
    std::set<std::tuple<int, int, int>> seen;  // (scene, entity, class)
    for (const AnnotationRecord& a : m.annotations) {
      const auto it = images.find(a.image_id);
      if (it == images.end() || it->second->split != name) continue;
      const int scene = it->second->scene;
      if (a.task == Task::damage) {
        if (a.class_id < 1 || a.class_id > static_cast<int>(s.damage.size())) continue;
        ++damage_row(a.class_id).annotations;
        if (a.class_id == 1 && container_scenes.insert({scene, a.entity_id}).second) ++damage_row(1).instances;
        s.damage_boxes.push_back({a.bbox.w, a.bbox.h});
      } else {
        if (a.class_id < 0 || a.class_id >= static_cast<int>(s.detection.size())) continue;
        ++detection_row(a.class_id).annotations;
        if (seen.insert({scene, a.entity_id, a.class_id}).second) ++detection_row(a.class_id).instances;
        s.detection_boxes.push_back({a.bbox.w, a.bbox.h});
      }
    }
    report.splits.push_back(std::move(s));
  }
  return report;
}

json StatsReport::to_json() const {
  json out = json::array();
  auto rows = [](const std::vector<ClassCount>& v) {
    json r = json::array();
    for (const ClassCount& c : v)
      r.push_back({{"id", c.id}, {"name", c.name}, {"instances", c.instances}, {"annotations", c.annotations}});
    return r;
  };
  for (const SplitStats& s : splits)
    out.push_back({{"split", s.split},
                   {"scenes", s.scenes},
                   {"images", s.images},
                   {"damaged", s.damaged},
                   {"undamaged", s.undamaged},
                   {"damage_classes", rows(s.damage)},
                   {"detection_classes", rows(s.detection)},
                   {"bbox_sizes", {{"damage", s.damage_boxes}, {"detection", s.detection_boxes}}}});
  return {{"splits", out}};
}

std::string StatsReport::to_text() const {
  std::string out;
  char buf[256];
  auto header = [&](const char* title) {
    out += title;
    out += "\n";
    std::snprintf(buf, sizeof buf, "%-14s", "");
    out += buf;
    for (const SplitStats& s : splits) {
      std::snprintf(buf, sizeof buf, " %16s", s.split.c_str());
      out += buf;
    }
    out += "\n";
  };
  auto line = [&](const std::string& label, auto value) {
    std::snprintf(buf, sizeof buf, "%-14s", label.c_str());
    out += buf;
    for (const SplitStats& s : splits) {
      std::snprintf(buf, sizeof buf, " %16s", value(s).c_str());
      out += buf;
    }
    out += "\n";
  };
  auto num = [](long v) { return std::to_string(v); };

  header("Scenes");
  line("no damage", [&](const SplitStats& s) { return num(s.undamaged); });
  line("damaged", [&](const SplitStats& s) { return num(s.damaged); });
  line("images", [&](const SplitStats& s) { return num(s.images); });
  out += "\n";
  header("Damage classes (instances / annotations)");
  for (std::size_t k = 0; k < damage_classes().size(); ++k)
    line(damage_classes()[k].name, [&](const SplitStats& s) {
      return num(s.damage[k].instances) + " / " + num(s.damage[k].annotations);
    });
  out += "\n";
  header("Detection classes (instances / annotations)");
  for (std::size_t k = 0; k < detection_classes().size(); ++k)
    line(detection_classes()[k].name, [&](const SplitStats& s) {
      return num(s.detection[k].instances) + " / " + num(s.detection[k].annotations);
    });
  return out;
}

}  // namespace cforge
