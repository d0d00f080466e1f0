#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "containerforge/annotate.hpp"
#include "containerforge/image_io.hpp"
#include "support.hpp"

using namespace cforge;
using cforge::testing::TempDir;

namespace {

Mask from_points(int w, int h, std::initializer_list<std::pair<int, int>> pts) {
  Mask m(w, h, 1);
  for (auto [x, y] : pts) m.at(x, y) = 255;
  return m;
}

Mask random_mask(Rng& rng, int w, int h) {
  Mask m(w, h, 1);
  const double density = rng.uniform(0.01, 0.2);
  for (auto& v : m.data()) v = rng.bernoulli(density) ? 255 : 0;
  const int blobs = static_cast<int>(rng.uniform_int(0, 3));
  for (int b = 0; b < blobs; ++b) {
    const double cx = rng.uniform(0, w), cy = rng.uniform(0, h), rx = rng.uniform(1, w / 4.0), ry = rng.uniform(1, h / 4.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if ((x - cx) * (x - cx) / (rx * rx) + (y - cy) * (y - cy) / (ry * ry) <= 1) m.at(x, y) = 255;
  }
  return m;
}

// Breadth-first labelling, then min/max over the pixels of every big enough component.
std::optional<Rect> brute_bbox(const Mask& m, int conn, int min_area) {
  const int w = m.width(), h = m.height();
  std::vector<int> seen(static_cast<std::size_t>(w * h), 0);
  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  for (int sy = 0; sy < h; ++sy)
    for (int sx = 0; sx < w; ++sx) {
      if (!m.at(sx, sy) || seen[static_cast<std::size_t>(sy * w + sx)]) continue;
      std::vector<std::pair<int, int>> comp;
      std::deque<std::pair<int, int>> q{{sx, sy}};
      seen[static_cast<std::size_t>(sy * w + sx)] = 1;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        comp.push_back({x, y});
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (conn == 4 && dx != 0 && dy != 0)) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !m.at(nx, ny)) continue;
            int& s = seen[static_cast<std::size_t>(ny * w + nx)];
            if (!s) {
              s = 1;
              q.push_back({nx, ny});
            }
          }
      }
      if (static_cast<int>(comp.size()) < min_area) continue;
      for (auto [x, y] : comp) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
  if (x1 < 0) return std::nullopt;
  return Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

bool inside_polygon(double px, double py, const Polygon& poly) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const double xi = poly[i][0], yi = poly[i][1], xj = poly[j][0], yj = poly[j][1];
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

}  // namespace

TEST(Cca, HandExample) {
  const Mask m = from_points(5, 5, {{1, 1}, {1, 2}, {3, 3}});
  const auto b = cca_bboxes(m, 4, 1);
  ASSERT_TRUE(b);
  EXPECT_EQ(*b, (Rect{1, 1, 3, 3}));
}

TEST(Cca, EmptyAndSingleton) {
  EXPECT_FALSE(cca_bboxes(Mask(8, 8, 1), 8, 1));
  Mask m(10, 10, 1);
  m.at(4, 7) = 255;
  EXPECT_EQ(*cca_bboxes(m, 8, 1), (Rect{4, 7, 1, 1}));
  EXPECT_FALSE(cca_bboxes(m, 8, 2));
}

TEST(Cca, MinAreaDropsSpecks) {
  Mask m(20, 20, 1);
  for (int y = 5; y < 9; ++y)
    for (int x = 5; x < 9; ++x) m.at(x, y) = 255;
  m.at(18, 1) = 255;
  EXPECT_EQ(*cca_bboxes(m, 8, 4), (Rect{5, 5, 4, 4}));
  EXPECT_EQ(*cca_bboxes(m, 8, 1), (Rect{5, 1, 14, 8}));
}

TEST(Cca, DiagonalNeighboursDependOnConnectivity) {
  const Mask m = from_points(4, 4, {{0, 0}, {1, 1}});
  EXPECT_EQ(connected_components(m, 8).size(), 1u);
  EXPECT_EQ(connected_components(m, 4).size(), 2u);
  EXPECT_EQ(*cca_bboxes(m, 8, 2), (Rect{0, 0, 2, 2}));
  EXPECT_FALSE(cca_bboxes(m, 4, 2));
}

TEST(Cca, RandomMasksMatchBruteForce) {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const int w = static_cast<int>(rng.uniform_int(1, 64)), h = static_cast<int>(rng.uniform_int(1, 48));
    const Mask m = random_mask(rng, w, h);
    for (int conn : {4, 8})
      for (int min_area : {1, 4, 9}) ASSERT_EQ(cca_bboxes(m, conn, min_area), brute_bbox(m, conn, min_area)) << i;
  }
}

TEST(Cca, ComponentAreasSumToSetPixels) {
  Rng rng(5);
  const Mask m = random_mask(rng, 50, 40);
  Image<std::int32_t> labels;
  long sum = 0;
  const auto comps = connected_components(m, 8, &labels);
  for (const Component& c : comps) sum += c.area;
  EXPECT_EQ(sum, std::count(m.data().begin(), m.data().end(), 255));
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const int l = labels.at(x, y);
      ASSERT_EQ(l != 0, m.at(x, y) != 0);
      if (l) { ASSERT_TRUE(comps[static_cast<std::size_t>(l - 1)].bbox.contains(x, y)); }
    }
}

TEST(Polygons, SquareHasFourCorners) {
  Mask m(5, 5, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) m.at(x, y) = 255;
  const auto polys = mask_to_polygons(m);
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0], (Polygon{{0, 0}, {3, 0}, {3, 3}, {0, 3}}));
}

TEST(Polygons, DisjointBlobsGiveTwoPolygons) {
  const Mask m = from_points(10, 10, {{1, 1}, {2, 1}, {7, 7}, {7, 8}});
  EXPECT_EQ(mask_to_polygons(m).size(), 2u);
  EXPECT_TRUE(mask_to_polygons(Mask(4, 4, 1)).empty());
}

TEST(Polygons, BoundsEqualComponentBoxes) {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const Mask m = random_mask(rng, 40, 30);
    for (int conn : {4, 8}) {
      const auto polys = mask_to_polygons(m, conn);
      const auto comps = connected_components(m, conn);
      ASSERT_EQ(polys.size(), comps.size());
      for (std::size_t k = 0; k < polys.size(); ++k) ASSERT_EQ(polygon_bounds({polys[k]}), comps[k].bbox);
    }
  }
}

TEST(Polygons, RerasterizationDiffersOnlyAtBoundary) {
  Rng rng(44);
  for (int i = 0; i < 40; ++i) {
    const int w = 48, h = 36;
    const Mask m = random_mask(rng, w, h);
    const auto polys = mask_to_polygons(m, 8);
    auto boundary_near = [&](int x, int y) {
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!m.contains(nx, ny) || !m.at(nx, ny)) continue;
          for (auto [ex, ey] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
            if (!m.contains(nx + ex, ny + ey) || !m.at(nx + ex, ny + ey)) return true;
        }
      return false;
    };
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        bool in = false;
        for (const Polygon& p : polys) in = in != inside_polygon(x + 0.5, y + 0.5, p);
        if (in != (m.at(x, y) != 0)) {
          ASSERT_TRUE(boundary_near(x, y)) << "mask " << i << " at " << x << "," << y;
        }
      }
  }
}

TEST(Yolo, HandExample) {
  EXPECT_EQ(encode_yolo_line(2, {64, 32, 128, 64}, 640, 640), "2 0.200000 0.100000 0.200000 0.100000");
  EXPECT_EQ(encode_yolo_line(5, {0, 0, 640, 480}, 640, 480), "5 0.500000 0.500000 1.000000 1.000000");
}

TEST(Yolo, RoundTripWithinHalfPixel) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const int W = static_cast<int>(rng.uniform_int(16, 4000)), H = static_cast<int>(rng.uniform_int(16, 4000));
    const int x = static_cast<int>(rng.uniform_int(0, W - 1)), y = static_cast<int>(rng.uniform_int(0, H - 1));
    const Rect b{x, y, static_cast<int>(rng.uniform_int(1, W - x)), static_cast<int>(rng.uniform_int(1, H - y))};
    const YoloBox yb = parse_yolo_line(encode_yolo_line(7, b, W, H));
    EXPECT_EQ(yb.class_id, 7);
    const auto d = denormalize(yb, W, H);
    ASSERT_NEAR(d[0], b.x, 0.5);
    ASSERT_NEAR(d[1], b.y, 0.5);
    ASSERT_NEAR(d[2], b.w, 0.5);
    ASSERT_NEAR(d[3], b.h, 0.5);
  }
}

TEST(Yolo, MalformedLinesThrow) {
  EXPECT_THROW(parse_yolo_line("2 0.1 0.2 0.3"), Error);
  EXPECT_THROW(parse_yolo_line("two 0.1 0.2 0.3 0.4"), Error);
  EXPECT_THROW(parse_yolo_line("2 0.1 0.2 0.3 0.4 extra"), Error);
}

TEST(ClassTables, ShapeAndIds) {
  ASSERT_EQ(damage_classes().size(), 5u);
  EXPECT_EQ(damage_classes()[0].name, "container");
  EXPECT_EQ(damage_classes()[4].name, "perforation");
  for (DamageKind k : kDamageKinds)
    EXPECT_EQ(damage_classes()[static_cast<std::size_t>(damage_class_id(k) - 1)].name, damage_name(k));
  ASSERT_EQ(detection_classes().size(), 28u);
  for (std::size_t i = 0; i < 28; ++i) EXPECT_EQ(detection_classes()[i].id, static_cast<int>(i));
  EXPECT_EQ(detection_classes().front().name, "text");
  EXPECT_EQ(detection_classes()[1].name, "C1.1");
  EXPECT_EQ(detection_classes()[26].name, "C9.1");
  EXPECT_EQ(detection_classes().back().name, "container");
}

TEST(Annotate, RecordsFollowFilteredMasks) {
  RenderPasses passes;
  Mask a(40, 30, 1), b(40, 30, 1), c(40, 30, 1);
  for (int y = 3; y < 12; ++y)
    for (int x = 5; x < 20; ++x) a.at(x, y) = 255;
  a.at(35, 25) = 255;  // speck below min_area
  c.at(1, 1) = 255;
  passes.entity_masks = {{1, a}, {2, b}, {3, c}};
  const std::vector<EntityLabel> labels{{1, Task::damage, 1, "container", ""},
                                        {1, Task::detection, 27, "container", ""},
                                        {2, Task::detection, 4, "C1.4", ""},
                                        {3, Task::detection, 0, "text", "ABCU1234560"}};
  const auto recs = annotate_image(9, passes, labels);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].bbox, (Rect{5, 3, 15, 9}));
  EXPECT_EQ(recs[0].area, 135);
  ASSERT_EQ(recs[0].polygons.size(), 1u);
  EXPECT_EQ(polygon_bounds(recs[0].polygons), recs[0].bbox);
  EXPECT_EQ(recs[1].task, Task::detection);
  EXPECT_TRUE(recs[1].polygons.empty());
  EXPECT_EQ(recs[1].image_id, 9);
  EXPECT_THROW(annotate_image(1, passes, {{5, Task::damage, 2, "axis", ""}}), Error);
}

TEST(Coco, EmptyManifestGivesEmptyArrays) {
  const DatasetManifest m;
  for (Task t : {Task::damage, Task::detection}) {
    const auto j = coco_json(m, "train", t);
    EXPECT_TRUE(j.at("images").empty());
    EXPECT_TRUE(j.at("annotations").empty());
    EXPECT_EQ(j.at("categories").size(), t == Task::damage ? 5u : 28u);
  }
}

TEST(Coco, IdsAreContiguousAndSegmentationMatchesBox) {
  DatasetManifest m;
  m.images.push_back({4, "val/images/A/000000.png", "A", 0, "val", 64, 48, "", "", {}});
  m.images.push_back({5, "train/images/A/000001.png", "A", 1, "train", 64, 48, "", "", {}});
  AnnotationRecord r;
  r.image_id = 4;
  r.task = Task::damage;
  r.class_id = 3;
  r.class_name = "concave";
  r.bbox = {2, 3, 4, 5};
  r.polygons = {{{2, 3}, {6, 3}, {6, 8}, {2, 8}}};
  r.area = 20;
  m.annotations = {r, r};
  m.annotations[1].image_id = 5;
  const auto j = coco_json(m, "val", Task::damage);
  ASSERT_EQ(j["images"].size(), 1u);
  EXPECT_EQ(j["images"][0]["id"], 1);
  EXPECT_EQ(j["images"][0]["file_name"], "images/A/000000.png");
  ASSERT_EQ(j["annotations"].size(), 1u);
  const auto& a = j["annotations"][0];
  EXPECT_EQ(a["id"], 1);
  EXPECT_EQ(a["image_id"], 1);
  EXPECT_EQ(a["bbox"], nlohmann::json({2, 3, 4, 5}));
  const auto seg = a["segmentation"][0];
  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  for (std::size_t k = 0; k < seg.size(); k += 2) {
    x0 = std::min(x0, seg[k].get<double>());
    x1 = std::max(x1, seg[k].get<double>());
    y0 = std::min(y0, seg[k + 1].get<double>());
    y1 = std::max(y1, seg[k + 1].get<double>());
  }
  EXPECT_NEAR(x0, 2, 1);
  EXPECT_NEAR(x1 - x0, 4, 1);
  EXPECT_NEAR(y0, 3, 1);
  EXPECT_NEAR(y1 - y0, 5, 1);
  EXPECT_FALSE(coco_json(m, "val", Task::detection)["annotations"].size());
}

TEST(SegPng, LosslessAndVoid) {
  TempDir dir("segpng");
  Image16 ids(32, 24, 1);
  ids.at(3, 4) = 307;
  ids.at(31, 23) = 9999;
  write_seg_png(dir / "a.png", ids);
  const Image16 back = read_png16(dir / "a.png");
  EXPECT_EQ(back, ids);
  EXPECT_EQ(decode_class(back.at(3, 4)), 3);
  EXPECT_EQ(decode_instance(back.at(3, 4)), 7);
  write_seg_png(dir / "void.png", Image16(8, 8, 1));
  const Image16 v = read_png16(dir / "void.png");
  EXPECT_TRUE(std::all_of(v.data().begin(), v.data().end(), [](auto p) { return p == 0; }));
}

TEST(TextCrops, CropsEqualBeautySubRectangles) {
  TempDir dir("crops");
  Image8 beauty(64, 48, 3);
  Rng rng(2);
  for (auto& v : beauty.data()) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  std::vector<AnnotationRecord> anns(3);
  anns[0].task = Task::detection;
  anns[0].class_id = kTextClass;
  anns[0].bbox = {3, 4, 20, 6};
  anns[0].text = "ABCU1234560";
  anns[1].task = Task::detection;
  anns[1].class_id = 5;
  anns[1].bbox = {1, 1, 4, 4};
  anns[2] = anns[0];
  anns[2].bbox = {40, 10, 5, 30};
  const auto crops = emit_text_crops(beauty, anns, dir.path(), "A/000003");
  ASSERT_EQ(crops.size(), 2u);
  EXPECT_EQ(crops[0].file, "A/000003_0.png");
  EXPECT_EQ(read_png8(dir / crops[0].file), crop(beauty, anns[0].bbox));
  EXPECT_EQ(read_png8(dir / crops[1].file), crop(beauty, anns[2].bbox));
  write_text_labels(dir / "labels.txt", crops);
  EXPECT_EQ(cforge::testing::slurp(dir / "labels.txt"), "A/000003_0.png\tABCU1234560\nA/000003_1.png\tABCU1234560\n");
}

TEST(DoorSplit, BalancedAndAllCameraCounts) {
  TempDir dir("door");
  DatasetManifest m;
  const Image8 tiny(4, 4, 3, 9);
  int id = 1;
  for (int s = 0; s < 10; ++s)
    for (const char* cam : kCameraNames) {
      char file[64];
      std::snprintf(file, sizeof file, "train/images/%s/%06d.png", cam, s);
      std::filesystem::create_directories((dir / file).parent_path());
      write_png(dir / file, tiny);
      m.images.push_back({id++, file, cam, s, "train", 4, 4, "", "", {}});
    }
  const auto pair = emit_door_split(m, dir.path(), "train", false);
  EXPECT_EQ(pair.door, 10);
  EXPECT_EQ(pair.no_door, 10);
  std::filesystem::remove_all(dir / "train/door");
  const auto all = emit_door_split(m, dir.path(), "train", true);
  EXPECT_EQ(all.door, 10);
  EXPECT_EQ(all.no_door, 30);
  auto count = [](const std::filesystem::path& p) {
    return std::distance(std::filesystem::directory_iterator(p), std::filesystem::directory_iterator{});
  };
  EXPECT_EQ(count(dir / "train/door/no_door"), 30);
  const auto none = emit_door_split(DatasetManifest{}, dir.path(), "val", false);
  EXPECT_EQ(none.door + none.no_door, 0);
  EXPECT_TRUE(std::filesystem::is_directory(dir / "val/door/door"));
  EXPECT_EQ(count(dir / "val/door/no_door"), 0);
}

TEST(Manifest, JsonRoundTrip) {
  DatasetManifest m;
  m.complete = true;
  m.door_all_cameras = true;
  m.config = {{"seed", 3}};
  m.scenes.push_back({0, "train", "CSQU3054383", "overcast", "#1e50a0", {{"axis", 1, "front", 0}}, 3, 2});
  m.images.push_back({1, "train/images/A/000000.png", "A", 0, "train", 64, 48, "train/damage/A/000000.png",
                      "train/imdg/A/000000.txt", {"train/text/A/000000_0.png"}});
  AnnotationRecord r;
  r.image_id = 1;
  r.entity_id = 1000;
  r.task = Task::detection;
  r.class_id = 0;
  r.class_name = "text";
  r.bbox = {1, 2, 3, 4};
  r.area = 9;
  r.text = "CSQU3054383";
  m.annotations.push_back(r);
  const DatasetManifest back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_EQ(back.annotations.at(0).text, "CSQU3054383");
  EXPECT_EQ(back.scenes.at(0).damages.at(0).kind, "axis");
  EXPECT_THROW(manifest_from_json(nlohmann::json{{"format", "other"}}), Error);
}
