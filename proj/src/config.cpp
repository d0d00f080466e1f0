#include <fstream>
#include <limits>
#include <sstream>

#include "containerforge/config.hpp"

namespace cforge {

using nlohmann::json;

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string suggest_key(std::string_view key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = 4;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reads one JSON object, tracking the field path for messages.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string> keys) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "configuration" : path_, "expected an object");
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) != keys.end()) continue;
      std::string msg = "unknown key '" + field(k) + "'";
      const std::string s = suggest_key(k, keys);
      if (!s.empty()) msg += " (did you mean '" + s + "'?)";
      throw ConfigError(msg);
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) const { return j_.at(key); }
  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  void number(const char* key, double& out, double lo = -kInf, double hi = kInf) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    const double d = v.get<double>();
    if (!(d >= lo && d <= hi)) range(field(key), d, lo, hi);
    out = d;
  }

  void integer(const char* key, int& out, double lo = -kInf, double hi = kInf) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(field(key), "expected an integer");
    const auto d = v.get<std::int64_t>();
    if (!(d >= lo && d <= hi)) range(field(key), static_cast<double>(d), lo, hi);
    out = static_cast<int>(d);
  }

  void u64(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) fail(field(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) fail(field(key), "expected true or false");
    out = j_.at(key).get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) fail(field(key), "expected a string");
    out = j_.at(key).get<std::string>();
  }

  void strings(const char* key, std::vector<std::string>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(field(key), "expected an array of strings");
    std::vector<std::string> r;
    for (const json& e : v) {
      if (!e.is_string()) fail(field(key), "expected an array of strings");
      r.push_back(e.get<std::string>());
    }
    out = std::move(r);
  }

  void range_pair(const char* key, Range& out, double lo, double hi) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      fail(field(key), "expected [lo, hi]");
    const double a = v[0].get<double>(), b = v[1].get<double>();
    if (!(a >= lo && b <= hi && a <= b)) fail(field(key), "expected " + fmt(lo) + " <= lo <= hi <= " + fmt(hi));
    out = {a, b};
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
  }

 private:
  static std::string fmt(double d) {
    std::ostringstream s;
    s << d;
    return s.str();
  }
  [[noreturn]] static void range(const std::string& field, double v, double lo, double hi) {
    std::string bounds = lo == -kInf ? "<= " + fmt(hi) : hi == kInf ? ">= " + fmt(lo) : "in [" + fmt(lo) + ", " + fmt(hi) + "]";
    throw ConfigError(field + ": value " + fmt(v) + " out of range (must be " + bounds + ")");
  }

  const json& j_;
  std::string path_;
};

void read_texture(const ObjectReader& r, TextureConfig& t, std::string& art_dir) {
  r.number("th_brand_door", t.th_brand_door, 0, 1);
  r.number("th_brand_nodoor", t.th_brand_nodoor, 0, 1);
  r.number("th_text_door", t.th_text_door, 0, 1);
  r.number("th_text_nodoor", t.th_text_nodoor, 0, 1);
  r.number("p_vertical_text", t.p_vertical_text, 0, 1);
  if (r.has("marker_count_range")) {
    const json& v = r.raw("marker_count_range");
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
      ObjectReader::fail(r.field("marker_count_range"), "expected [min, max] integers");
    const int a = v[0].get<int>(), b = v[1].get<int>();
    if (a < 0 || b < a || b > 64) ObjectReader::fail(r.field("marker_count_range"), "expected 0 <= min <= max <= 64");
    t.marker_count_range = {a, b};
  }
  r.boolean("marker_quota", t.marker_quota);
  r.number("marker_size_m", t.marker_size_m, 0.01, 2.0);
  r.number("text_height_m", t.text_height_m, 0.01, 1.0);
  if (r.has("palette")) {
    const json& v = r.raw("palette");
    if (!v.is_array() || v.empty()) ObjectReader::fail(r.field("palette"), "expected a non-empty array of [r, g, b]");
    t.palette.clear();
    for (const json& c : v) {
      if (!c.is_array() || c.size() != 3) ObjectReader::fail(r.field("palette"), "expected [r, g, b] entries");
      std::array<std::uint8_t, 3> rgb{};
      for (std::size_t k = 0; k < 3; ++k) {
        if (!c[k].is_number_integer() || c[k].get<int>() < 0 || c[k].get<int>() > 255)
          ObjectReader::fail(r.field("palette"), "colour components must be integers in [0, 255]");
        rgb[k] = static_cast<std::uint8_t>(c[k].get<int>());
      }
      t.palette.push_back(rgb);
    }
  }
  r.range_pair("aging", t.aging, 0, 1);
  r.range_pair("dirt", t.dirt, 0, 1);
  r.range_pair("rust", t.rust, 0, 1);
  r.range_pair("tone_noise", t.tone_noise, 0, 1);
  r.strings("brands", t.brands);
  r.string("marker_art_dir", art_dir);
}

}  // namespace

GenerationConfig config_from_json(const json& j) {
  GenerationConfig c;
  const ObjectReader top(j, "",
                         {"seed", "scene_count", "output", "split", "test_scene_count", "p_damage", "max_damages",
                          "damage_retries", "damage_limits", "container", "texture", "camera", "atlas",
                          "environments", "exposure", "prop_obj", "door_all_cameras", "annotate"});
  top.u64("seed", c.master_seed);
  top.integer("scene_count", c.scene_count, 0, 1e7);
  if (top.has("output")) {
    std::string out;
    top.string("output", out);
    c.output = out;
  }
  top.integer("test_scene_count", c.test_scene_count, 0, 1e7);
  top.number("p_damage", c.p_damage, 0, 1);
  top.integer("max_damages", c.max_damages, 1, 99);
  top.integer("damage_retries", c.damage_retries, 1, 1000);
  top.number("exposure", c.exposure, 1e-6, 1e6);
  top.strings("environments", c.environments);
  top.string("prop_obj", c.prop_obj);
  top.boolean("door_all_cameras", c.door_all_cameras);

  if (top.has("split")) {
    const ObjectReader r(top.raw("split"), "split", {"train", "val"});
    r.number("train", c.train_fraction, 0, 1);
    r.number("val", c.val_fraction, 0, 1);
    if (r.has("train") != r.has("val")) {
      if (r.has("train")) c.val_fraction = 1 - c.train_fraction;
      else c.train_fraction = 1 - c.val_fraction;
    }
    if (std::abs(c.train_fraction + c.val_fraction - 1) > 1e-9) ObjectReader::fail("split", "train + val must equal 1");
  }
  if (top.has("damage_limits")) {
    const ObjectReader r(top.raw("damage_limits"), "damage_limits", {"axis", "concave", "dented", "perforation"});
    r.number("axis", c.damage_limits.axis, 0, 1);
    r.number("concave", c.damage_limits.concave, 0, 1);
    r.number("dented", c.damage_limits.dented, 0, 1);
    r.number("perforation", c.damage_limits.perforation, 0, 1);
  }
  if (top.has("container")) {
    const ObjectReader r(top.raw("container"), "container",
                         {"length_m", "width_m", "height_m", "corrugation_depth_m", "corrugation_pitch_m",
                          "subdivisions_per_meter", "has_door_geometry"});
    r.number("length_m", c.container.length_m, 0.5, 100);
    r.number("width_m", c.container.width_m, 0.5, 100);
    r.number("height_m", c.container.height_m, 0.5, 100);
    r.number("corrugation_depth_m", c.container.corrugation_depth_m, 0, 1);
    r.number("corrugation_pitch_m", c.container.corrugation_pitch_m, 0.01, 10);
    r.integer("subdivisions_per_meter", c.container.subdivisions_per_meter, 4, 200);
    r.boolean("has_door_geometry", c.container.has_door_geometry);
  }
  if (top.has("texture")) {
    const ObjectReader r(top.raw("texture"), "texture",
                         {"th_brand_door", "th_brand_nodoor", "th_text_door", "th_text_nodoor", "p_vertical_text",
                          "marker_count_range", "marker_quota", "marker_size_m", "text_height_m", "palette", "aging",
                          "dirt", "rust", "tone_noise", "brands", "marker_art_dir"});
    read_texture(r, c.texture, c.marker_art_dir);
  }
  if (top.has("camera")) {
    const ObjectReader r(top.raw("camera"), "camera",
                         {"width", "height", "sensor_width_mm", "focal_a_mm", "focal_b_mm", "focal_c_mm", "fill",
                          "elevation_a_deg", "elevation_b_deg", "elevation_c_deg", "jitter_m"});
    r.integer("width", c.rig.width, 16, 16384);
    r.integer("height", c.rig.height, 16, 16384);
    r.number("sensor_width_mm", c.rig.sensor_width_mm, 1, 1000);
    r.number("focal_a_mm", c.rig.focal_a_mm, 1, 2000);
    r.number("focal_b_mm", c.rig.focal_b_mm, 1, 2000);
    r.number("focal_c_mm", c.rig.focal_c_mm, 1, 2000);
    r.number("fill", c.rig.fill, 0.05, 1);
    r.number("elevation_a_deg", c.rig.elevation_a_deg, -79, 79);
    r.number("elevation_b_deg", c.rig.elevation_b_deg, -79, 79);
    r.number("elevation_c_deg", c.rig.elevation_c_deg, -79, 79);
    r.number("jitter_m", c.rig.jitter_m, 0, 10);
  }
  if (top.has("atlas")) {
    const ObjectReader r(top.raw("atlas"), "atlas", {"width", "height"});
    r.integer("width", c.atlas_width, 64, 16384);
    r.integer("height", c.atlas_height, 32, 16384);
  }
  if (top.has("annotate")) {
    const ObjectReader r(top.raw("annotate"), "annotate", {"connectivity", "min_area"});
    r.integer("connectivity", c.annotate.connectivity, 4, 8);
    if (c.annotate.connectivity != 4 && c.annotate.connectivity != 8)
      ObjectReader::fail("annotate.connectivity", "must be 4 or 8");
    r.integer("min_area", c.annotate.min_area, 1, 1e6);
  }
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

GenerationConfig parse_config_text(std::string_view text, std::string_view source) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Byte offset to line/column (1-based).
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (const auto k = what.find("syntax error"); k != std::string::npos) what = what.substr(k);
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
  return config_from_json(j);
}

GenerationConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

json config_to_json(const GenerationConfig& c) {
  const TextureConfig& t = c.texture;
  json palette = json::array();
  for (const auto& p : t.palette) palette.push_back({p[0], p[1], p[2]});
  auto pair = [](const Range& r) { return json::array({r.lo, r.hi}); };
  return {
      {"seed", c.master_seed},
      {"scene_count", c.scene_count},
      {"output", c.output.generic_string()},
      {"split", {{"train", c.train_fraction}, {"val", c.val_fraction}}},
      {"test_scene_count", c.test_scene_count},
      {"p_damage", c.p_damage},
      {"max_damages", c.max_damages},
      {"damage_retries", c.damage_retries},
      {"damage_limits",
       {{"axis", c.damage_limits.axis},
        {"concave", c.damage_limits.concave},
        {"dented", c.damage_limits.dented},
        {"perforation", c.damage_limits.perforation}}},
      {"container",
       {{"length_m", c.container.length_m},
        {"width_m", c.container.width_m},
        {"height_m", c.container.height_m},
        {"corrugation_depth_m", c.container.corrugation_depth_m},
        {"corrugation_pitch_m", c.container.corrugation_pitch_m},
        {"subdivisions_per_meter", c.container.subdivisions_per_meter},
        {"has_door_geometry", c.container.has_door_geometry}}},
      {"texture",
       {{"th_brand_door", t.th_brand_door},
        {"th_brand_nodoor", t.th_brand_nodoor},
        {"th_text_door", t.th_text_door},
        {"th_text_nodoor", t.th_text_nodoor},
        {"p_vertical_text", t.p_vertical_text},
        {"marker_count_range", {t.marker_count_range.first, t.marker_count_range.second}},
        {"marker_quota", t.marker_quota},
        {"marker_size_m", t.marker_size_m},
        {"text_height_m", t.text_height_m},
        {"palette", palette},
        {"aging", pair(t.aging)},
        {"dirt", pair(t.dirt)},
        {"rust", pair(t.rust)},
        {"tone_noise", pair(t.tone_noise)},
        {"brands", t.brands},
        {"marker_art_dir", c.marker_art_dir}}},
      {"camera",
       {{"width", c.rig.width},
        {"height", c.rig.height},
        {"sensor_width_mm", c.rig.sensor_width_mm},
        {"focal_a_mm", c.rig.focal_a_mm},
        {"focal_b_mm", c.rig.focal_b_mm},
        {"focal_c_mm", c.rig.focal_c_mm},
        {"fill", c.rig.fill},
        {"elevation_a_deg", c.rig.elevation_a_deg},
        {"elevation_b_deg", c.rig.elevation_b_deg},
        {"elevation_c_deg", c.rig.elevation_c_deg},
        {"jitter_m", c.rig.jitter_m}}},
      {"atlas", {{"width", c.atlas_width}, {"height", c.atlas_height}}},
      {"environments", c.environments},
      {"exposure", c.exposure},
      {"prop_obj", c.prop_obj},
      {"door_all_cameras", c.door_all_cameras},
      {"annotate", {{"connectivity", c.annotate.connectivity}, {"min_area", c.annotate.min_area}}},
  };
}

}  // namespace cforge
