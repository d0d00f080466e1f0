#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "containerforge/deform.hpp"

using namespace cforge;

namespace {

const ContainerMesh& pristine() {
  static const ContainerMesh m = layout_uv(build_container(ContainerSpec{}), 1024, 512);
  return m;
}

double moved(const ContainerMesh& a, const ContainerMesh& b, std::size_t v) { return length(b.vertices[v] - a.vertices[v]); }

// Independent geometry oracles.
bool inside(Vec2 p, const std::vector<Vec2>& poly) {
  int crossings = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    if ((a.y <= p.y && b.y > p.y) || (b.y <= p.y && a.y > p.y)) {
      const double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (x > p.x) ++crossings;
    }
  }
  return crossings % 2 == 1;
}

double dist_to_polyline(Vec2 p, const std::vector<Vec2>& line) {
  double best = 1e300;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 a = line[i], d = line[i + 1] - a;
    const double len2 = d.x * d.x + d.y * d.y;
    double t = len2 > 0 ? ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2 : 0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q{a.x + d.x * t - p.x, a.y + d.y * t - p.y};
    best = std::min(best, std::sqrt(q.x * q.x + q.y * q.y));
  }
  return best;
}

Vec2 centroid_st(const ContainerMesh& m, std::size_t f) {
  Vec2 c{};
  for (auto v : m.faces[f]) c = c + m.surface[v];
  return c * 0.25;
}

AxisParams top_front_axis(double depth) {
  const auto cells = grid_cells(pristine().spec);
  AxisParams p;
  p.edge_index = 0;
  p.depth_m = depth;
  p.extent_m = 0.2;
  p.center_m = pristine().spec.length_m / cells[0] * (cells[0] / 2);
  p.half_length_m = 0.6;
  return p;
}

ConcaveParams front_concave(double depth) {
  const auto cells = grid_cells(pristine().spec);
  ConcaveParams p;
  p.side = Side::front;
  p.center_uv = {static_cast<double>(cells[0] / 2) / cells[0], static_cast<double>(cells[2] / 2) / cells[2]};
  p.radius_m = 0.45;
  p.depth_m = depth;
  return p;
}

DentParams front_dent(double depth) {
  DentParams p;
  p.side = Side::front;
  p.spline.start_m = {1.0, 1.2};
  p.spline.length_m = 3.0;
  p.spline.segments = 4;
  p.spline.amplitude_m = 0.04;
  p.spline.band_half_width_m = 0.06;
  p.fold_depth_m = depth;
  return p;
}

PerforationParams front_hole(double depth) {
  PerforationParams p;
  p.side = Side::front;
  Rng rng(5);
  p.blob_uv = random_blob(rng, {0.3, 0.5}, 0.03, 0.07);
  p.drag_depth_m = depth;
  p.drag_radius_m = 0.12;
  return p;
}

}  // namespace

TEST(PlanDamages, ZeroProbabilityNeverDamages) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const DamagePlan p = plan_damages(rng, 0.0, 3);
    ASSERT_FALSE(p.damaged);
    ASSERT_TRUE(p.kinds.empty());
  }
}

TEST(PlanDamages, DamagedFractionNearFortyPercent) {
  Rng rng(2024);
  int damaged = 0;
  for (int i = 0; i < 10000; ++i) {
    const DamagePlan p = plan_damages(rng, 0.4, 2);
    damaged += p.damaged;
    ASSERT_EQ(p.damaged, !p.kinds.empty());
    ASSERT_LE(p.kinds.size(), 2u);
  }
  EXPECT_GE(damaged / 10000.0, 0.37);
  EXPECT_LE(damaged / 10000.0, 0.43);
}

TEST(PlanDamages, KindsAreUniform) {
  Rng rng(77);
  std::array<int, 4> counts{};
  int total = 0;
  while (total < 10000) {
    for (DamageKind k : plan_damages(rng, 0.4, 3).kinds) {
      ++counts[static_cast<std::size_t>(k)];
      if (++total == 10000) break;
    }
  }
  for (int c : counts) {
    EXPECT_GE(c / 10000.0, 0.225);
    EXPECT_LE(c / 10000.0, 0.275);
  }
}

TEST(PlanDamages, CountIsUniformUpToMax) {
  Rng rng(8);
  std::set<std::size_t> counts;
  for (int i = 0; i < 2000; ++i) counts.insert(plan_damages(rng, 1.0, 3).kinds.size());
  EXPECT_EQ(counts, (std::set<std::size_t>{1, 2, 3}));
}

TEST(PlanDamages, RejectsBadArguments) {
  Rng rng(1);
  EXPECT_THROW(plan_damages(rng, 1.5, 2), Error);
  EXPECT_THROW(plan_damages(rng, 0.4, 0), Error);
}

TEST(Deform, ZeroDepthIsIdentity) {
  const ContainerMesh& m = pristine();
  EXPECT_EQ(apply_axis(m, top_front_axis(0)).vertices, m.vertices);
  EXPECT_EQ(apply_concave(m, front_concave(0)).vertices, m.vertices);
  EXPECT_EQ(apply_dented(m, front_dent(0)).vertices, m.vertices);
  PerforationParams empty;
  const ContainerMesh p = apply_perforation(m, empty);
  EXPECT_EQ(p.vertices, m.vertices);
  EXPECT_EQ(p.faces, m.faces);
}

TEST(Deform, AxisCentreMovesFullDepth) {
  const ContainerMesh d = apply_axis(pristine(), top_front_axis(0.08));
  double peak = 0;
  for (std::size_t v = 0; v < d.vertices.size(); ++v) peak = std::max(peak, moved(pristine(), d, v));
  EXPECT_NEAR(peak, 0.08, 1e-9);
}

TEST(Deform, AxisLeavesVerticesOutsideSupport) {
  const ContainerMesh& m = pristine();
  const AxisParams p = top_front_axis(0.08);
  const ContainerMesh d = apply_axis(m, p);
  const EdgeGeometry e = edge_geometry(m.spec, p.edge_index);
  int inside_support = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const Side s = m.vertex_side[v];
    const bool on_edge_side = s == kBoxEdges[0].a || s == kBoxEdges[0].b;
    const Vec3 q = side_frame(m.spec, s).point(m.surface[v].x, m.surface[v].y) - e.start;
    const double along = dot(q, e.direction);
    const double across = length(q - e.direction * along);
    const bool in_support = on_edge_side && across < p.extent_m && std::abs(along - p.center_m) < p.half_length_m;
    if (!in_support) {
      ASSERT_EQ(moved(m, d, v), 0.0) << "vertex " << v;
    }
    inside_support += in_support;
  }
  EXPECT_GT(inside_support, 0);
}

TEST(Deform, AxisIsSmoothAcrossTheEdge) {
  // Welded copies of a vertex on the two sides of the edge move together.
  const ContainerMesh& m = pristine();
  const ContainerMesh d = apply_axis(m, top_front_axis(0.08));
  std::map<std::uint32_t, Vec3> by_weld;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const Vec3 delta = d.vertices[v] - m.vertices[v];
    auto [it, fresh] = by_weld.emplace(m.weld[v], delta);
    if (!fresh) { ASSERT_NEAR(length(it->second - delta), 0.0, 1e-12); }
  }
}

TEST(Deform, AxisRejectsExcessiveDepth) {
  EXPECT_THROW(apply_axis(pristine(), top_front_axis(0.5)), Error);
  Rng rng(1);
  EXPECT_THROW(apply_axis(pristine(), 0, 0.5, 0.2, rng), Error);
}

TEST(Deform, ConcaveEndpointsAndMonotoneFalloff) {
  const ContainerMesh& m = pristine();
  const ConcaveParams p = front_concave(0.07);
  const ContainerMesh d = apply_concave(m, p);
  const SideFrame f = side_frame(m.spec, Side::front);
  const Vec2 c{p.center_uv.x * f.width, p.center_uv.y * f.height};
  std::vector<std::pair<double, double>> samples;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (m.vertex_side[v] != Side::front) {
      ASSERT_EQ(moved(m, d, v), 0.0);
      continue;
    }
    const double r = length(m.surface[v] - c);
    samples.push_back({r, moved(m, d, v)});
    if (r >= p.radius_m) { ASSERT_EQ(moved(m, d, v), 0.0); }
    if (r < 1e-9) { EXPECT_NEAR(moved(m, d, v), p.depth_m, 1e-12); }
  }
  std::sort(samples.begin(), samples.end());
  EXPECT_LT(samples.front().first, 1e-9);
  // Monotone non-increasing over the first 100 distinct radii and beyond.
  for (std::size_t i = 1; i < samples.size(); ++i)
    ASSERT_LE(samples[i].second, samples[i - 1].second + 1e-12) << "r=" << samples[i].first;
}

TEST(Deform, ConcaveRejectsBoundaryOverlap) {
  ConcaveParams p = front_concave(0.05);
  p.center_uv = {0.02, 0.5};
  EXPECT_THROW(apply_concave(pristine(), p), Error);
}

TEST(Deform, DentAffectsOnlyTheBand) {
  const ContainerMesh& m = pristine();
  const DentParams p = front_dent(0.025);
  const ContainerMesh d = apply_dented(m, p);
  const auto line = p.spline.polyline();
  int affected = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (moved(m, d, v) == 0.0) continue;
    ++affected;
    ASSERT_EQ(m.vertex_side[v], Side::front);
    ASSERT_LE(dist_to_polyline(m.surface[v], line), p.spline.band_half_width_m);
  }
  EXPECT_GT(affected, 0);
}

TEST(Deform, DentRegionIsElongated) {
  const ContainerMesh& m = pristine();
  const ContainerMesh d = apply_dented(m, front_dent(0.025));
  const RegionMesh r = extract_damage_region(m, d, DamageKind::Dented);
  ASSERT_FALSE(r.empty());
  double x0 = 1e9, x1 = -1e9, z0 = 1e9, z1 = -1e9;
  for (const Vec3& v : r.vertices) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    z0 = std::min(z0, v.z);
    z1 = std::max(z1, v.z);
  }
  EXPECT_GT((x1 - x0) / (z1 - z0), 3.0);
}

TEST(Deform, DentRejectsSplineOutsideSide) {
  DentParams p = front_dent(0.02);
  p.spline.start_m = {4.0, 1.0};
  EXPECT_THROW(apply_dented(pristine(), p), Error);
}

TEST(Deform, PerforationRemovesEnclosedFaces) {
  const ContainerMesh& m = pristine();
  const PerforationParams p = front_hole(0.03);
  const ContainerMesh d = apply_perforation(m, p);
  const SideFrame f = side_frame(m.spec, Side::front);
  std::vector<Vec2> blob;
  for (Vec2 q : p.blob_uv) blob.push_back({q.x * f.width, q.y * f.height});
  std::set<std::uint32_t> expected;
  for (std::size_t i = 0; i < m.faces.size(); ++i)
    if (m.side_tag[i] == Side::front && inside(centroid_st(m, i), blob)) expected.insert(m.face_id[i]);
  ASSERT_FALSE(expected.empty());
  EXPECT_EQ(m.faces.size() - d.faces.size(), expected.size());
  const std::set<std::uint32_t> kept(d.face_id.begin(), d.face_id.end());
  for (auto id : m.face_id) EXPECT_EQ(kept.count(id) == 0, expected.count(id) == 1) << "face " << id;
  EXPECT_FALSE(is_watertight(d));
}

TEST(Deform, PerforationTooSmallIsReported) {
  PerforationParams p;
  p.side = Side::front;
  p.blob_uv = {{0.5, 0.5}, {0.5001, 0.5}, {0.5, 0.5001}};
  EXPECT_THROW(apply_perforation(pristine(), p), Error);
}

TEST(DamageRegion, PristineAgainstItselfIsEmpty) {
  for (DamageKind k : kDamageKinds) EXPECT_TRUE(extract_damage_region(pristine(), pristine(), k).empty());
}

TEST(DamageRegion, SingleMovedVertexGivesIncidentFaces) {
  const ContainerMesh& m = pristine();
  ContainerMesh d = m;
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < m.faces.size(); ++i)
    if (m.side_tag[i] == Side::back && i % 50 == 7) {
      v = m.faces[i][2];
      break;
    }
  d.vertices[v] += Vec3{0, 0, 2e-3};
  const RegionMesh r = extract_damage_region(m, d, DamageKind::Concave, 1e-3);
  std::vector<std::uint32_t> expected;
  for (std::size_t i = 0; i < m.faces.size(); ++i)
    if (std::find(m.faces[i].begin(), m.faces[i].end(), v) != m.faces[i].end()) expected.push_back(m.face_id[i]);
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(r.source_faces, expected);
  EXPECT_FALSE(expected.empty());
}

TEST(DamageRegion, ConcaveRegionMatchesDisplacementScan) {
  const ContainerMesh& m = pristine();
  const ContainerMesh d = apply_concave(m, front_concave(0.06));
  const RegionMesh r = extract_damage_region(m, d, DamageKind::Concave, 1e-3);
  const std::set<std::uint32_t> got(r.source_faces.begin(), r.source_faces.end());
  for (std::size_t i = 0; i < m.faces.size(); ++i) {
    double lo = 1e9, hi = 0;
    for (auto v : m.faces[i]) {
      lo = std::min(lo, moved(m, d, v));
      hi = std::max(hi, moved(m, d, v));
    }
    if (lo > 1e-3) {
      ASSERT_TRUE(got.count(m.face_id[i])) << i;
    }
    if (hi <= 1e-3) {
      ASSERT_FALSE(got.count(m.face_id[i])) << i;
    }
  }
}

TEST(DamageRegion, PerforationIncludesHoleBorder) {
  const ContainerMesh& m = pristine();
  const ContainerMesh d = apply_perforation(m, front_hole(0.0));
  const RegionMesh r = extract_damage_region(m, d, DamageKind::Perforation);
  EXPECT_FALSE(r.empty());
  EXPECT_THROW(extract_damage_region(m, d, DamageKind::Concave), Error);
}

TEST(DamageRegion, RegionVerticesLieOnDeformedSurface) {
  const ContainerMesh& m = pristine();
  const ContainerMesh d = apply_dented(m, front_dent(0.02));
  const RegionMesh r = extract_damage_region(m, d, DamageKind::Dented);
  for (const Vec3& p : r.vertices) {
    const bool found = std::any_of(d.vertices.begin(), d.vertices.end(), [&](const Vec3& q) { return length(p - q) < 1e-12; });
    ASSERT_TRUE(found);
  }
}

TEST(DamageRegion, TopologyMismatchIsAnError) {
  ContainerSpec spec;
  spec.length_m = 12.192;
  const ContainerMesh other = layout_uv(build_container(spec), 1024, 512);
  EXPECT_THROW(extract_damage_region(pristine(), other, DamageKind::Axis), Error);
}

TEST(Deform, DisjointDamagesCommute) {
  const ContainerMesh& m = pristine();
  ConcaveParams back = front_concave(0.05);
  back.side = Side::back;
  const ContainerMesh ab = apply_concave(apply_dented(m, front_dent(0.02)), back);
  const ContainerMesh ba = apply_dented(apply_concave(m, back), front_dent(0.02));
  for (std::size_t v = 0; v < m.vertices.size(); ++v) ASSERT_NEAR(length(ab.vertices[v] - ba.vertices[v]), 0.0, 1e-9);
}

TEST(Deform, SampledDamagesPushInwardAndYieldRegions) {
  const ContainerMesh& m = pristine();
  const ContainerSpec& s = m.spec;
  const double c = s.corrugation_depth_m;
  for (DamageKind k : kDamageKinds)
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      Rng rng(seed * 31 + static_cast<std::uint64_t>(k));
      const DamageParams p = sample_damage(k, m, rng);
      ASSERT_EQ(kind_of(p), k);
      const ContainerMesh d = apply_damage(m, p);
      for (const Vec3& v : d.vertices) {
        ASSERT_GE(v.x, -c);
        ASSERT_GE(v.y, -c);
        ASSERT_GE(v.z, -c);
        ASSERT_LE(v.x, s.length_m + c);
        ASSERT_LE(v.y, s.width_m + c);
        ASSERT_LE(v.z, s.height_m + c);
      }
      EXPECT_FALSE(extract_damage_region(m, d, k).empty()) << damage_name(k) << " seed " << seed;
    }
}

TEST(Deform, RecordDamageTracksRemovedFaces) {
  const ContainerMesh& m = pristine();
  ContainerMesh current = m;
  const DamageInstance a = record_damage(m, current, front_hole(0.02), 1);
  EXPECT_EQ(a.removed_faces, m.faces.size() - current.faces.size());
  EXPECT_FALSE(a.affected_vertices.empty());
  EXPECT_FALSE(a.region.empty());
  EXPECT_EQ(a.instance_id, 1);
  EXPECT_EQ(a.kind, DamageKind::Perforation);
  const std::size_t before = current.faces.size();
  const DamageInstance b = record_damage(m, current, front_concave(0.05), 2);
  EXPECT_EQ(current.faces.size(), before);
  EXPECT_FALSE(b.region.empty());
}
