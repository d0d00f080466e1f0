#include <gtest/gtest.h>

#include <sstream>

#include "containerforge/image_io.hpp"
#include "containerforge/pipeline.hpp"
#include "support.hpp"

using namespace cforge;
using cforge::testing::TempDir;
namespace fs = std::filesystem;

class ValidateFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    source_ = new TempDir("validate_src");
    GenerationConfig cfg = cforge::testing::small_config(3);
    cfg.texture.th_text_door = cfg.texture.th_text_nodoor = 1.0;
    cfg.output = source_->path() / "ds";
    RunOptions opt;
    opt.quiet = true;
    run_dataset(cfg, opt);
  }
  static void TearDownTestSuite() {
    delete source_;
    source_ = nullptr;
  }

  void SetUp() override {
    work_ = std::make_unique<TempDir>("validate");
    fs::copy(source_->path() / "ds", root(), fs::copy_options::recursive);
  }

  fs::path root() const { return work_->path() / "ds"; }

  static TempDir* source_;
  std::unique_ptr<TempDir> work_;
};

TempDir* ValidateFixture::source_ = nullptr;

TEST_F(ValidateFixture, FreshDatasetPasses) {
  const ValidationReport r = validate_dataset(root());
  EXPECT_TRUE(r.ok()) << r.to_text();
  for (const char* name : {"manifest", "images", "seg_png", "coco_yolo", "coco_damage", "coco_counts", "text_crops", "door_split"})
    EXPECT_GT(r.check(name).checked, 0) << name;
}

TEST_F(ValidateFixture, PerturbedYoloCentreIsOneMismatch) {
  const DatasetManifest m = read_manifest(root() / "manifest.json");
  fs::path target;
  for (const ImageRecord& im : m.images)
    if (!cforge::testing::slurp(root() / im.yolo_file).empty()) {
      target = root() / im.yolo_file;
      break;
    }
  ASSERT_FALSE(target.empty());
  std::istringstream in(cforge::testing::slurp(target));
  std::string line, out;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      YoloBox b = parse_yolo_line(line);
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", b.class_id, std::min(b.xc + 0.05, 0.99), b.yc, b.w, b.h);
      line = buf;
      first = false;
    }
    out += line + "\n";
  }
  cforge::testing::spit(target, out);
  const ValidationReport r = validate_dataset(root());
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.check("coco_yolo").passed);
  EXPECT_EQ(r.check("coco_yolo").failures, 1);
  for (const CheckResult& c : r.checks)
    if (c.name != "coco_yolo") {
      EXPECT_TRUE(c.passed) << c.name;
    }
}

TEST_F(ValidateFixture, DeletedCropIsNamed) {
  const DatasetManifest m = read_manifest(root() / "manifest.json");
  std::string crop;
  for (const ImageRecord& im : m.images)
    if (!im.crops.empty()) {
      crop = im.crops.front();
      break;
    }
  ASSERT_FALSE(crop.empty());
  fs::remove(root() / crop);
  const ValidationReport r = validate_dataset(root());
  const CheckResult& c = r.check("text_crops");
  EXPECT_FALSE(c.passed);
  bool named = false;
  for (const std::string& msg : c.messages) named |= msg.find(fs::path(crop).filename().string()) != std::string::npos;
  EXPECT_TRUE(named) << r.to_text();
}

TEST_F(ValidateFixture, AlteredCropPixelsFail) {
  const DatasetManifest m = read_manifest(root() / "manifest.json");
  std::string crop;
  for (const ImageRecord& im : m.images)
    if (!im.crops.empty()) crop = im.crops.front();
  ASSERT_FALSE(crop.empty());
  Image8 img = read_png8(root() / crop);
  img.at(0, 0, 0) ^= 0xff;
  write_png(root() / crop, img);
  EXPECT_FALSE(validate_dataset(root()).check("text_crops").passed);
}

TEST_F(ValidateFixture, CorruptImageIsReported) {
  const DatasetManifest m = read_manifest(root() / "manifest.json");
  cforge::testing::spit(root() / m.images.at(2).file, "not a png");
  const ValidationReport r = validate_dataset(root());
  EXPECT_FALSE(r.check("images").passed);
  EXPECT_EQ(r.check("images").failures, 1);
}

TEST_F(ValidateFixture, SegmentationWithUnknownCodeFails) {
  const DatasetManifest m = read_manifest(root() / "manifest.json");
  Image16 seg = read_png16(root() / m.images.at(0).seg_file);
  seg.at(0, 0) = 9999;
  write_png(root() / m.images.at(0).seg_file, seg);
  EXPECT_FALSE(validate_dataset(root()).check("seg_png").passed);
}

TEST_F(ValidateFixture, MissingDoorImageFails) {
  const fs::path door = root() / "train/door/door";
  ASSERT_TRUE(fs::is_directory(door));
  fs::remove(fs::directory_iterator(door)->path());
  EXPECT_FALSE(validate_dataset(root()).check("door_split").passed);
}

TEST_F(ValidateFixture, IncompleteManifestFails) {
  DatasetManifest m = read_manifest(root() / "manifest.json");
  m.complete = false;
  write_manifest(root() / "manifest.json", m);
  EXPECT_FALSE(validate_dataset(root()).check("manifest").passed);
}

TEST(Validate, MissingManifestIsAFailureNotACrash) {
  TempDir dir("validate_empty");
  const ValidationReport r = validate_dataset(dir.path());
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.check("manifest").passed);
}
