#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "ba_oracle.hpp"
#include "linesfm/chain.hpp"
#include "linesfm/synthetic.hpp"
#include "test_util.hpp"

namespace linesfm {
namespace {

using namespace synthetic;
using testing::TestIntrinsics;

double DistanceToEdge(const SceneSegment& e, const Vec3& X) {
  return (X - e.start).cross(e.end - e.start).norm() / (e.end - e.start).norm();
}

SceneSpec UnitBox() {
  SceneSpec spec;
  spec.boxes.push_back(BoxSpec{});
  return spec;
}

// --- generate_scene

TEST(GenerateScene, UnitBoxEdgesAndFaces) {
  const Scene s = GenerateScene(UnitBox(), 0);
  ASSERT_EQ(s.segments.size(), 12u);
  ASSERT_EQ(s.faces.size(), 6u);
  for (const auto& e : s.segments) {
    EXPECT_NEAR((e.end - e.start).norm(), 1.0, 1e-12);
    // Endpoints are box corners.
    for (const Vec3& p : {e.start, e.end}) {
      for (int a = 0; a < 3; ++a) EXPECT_TRUE(std::abs(p(a)) < 1e-12 || std::abs(p(a) - 1) < 1e-12);
    }
  }
  double area = 0;
  for (const auto& f : s.faces) area += f.Area();
  EXPECT_NEAR(area, 6.0, 1e-12);
}

TEST(GenerateScene, EdgesLieOnTheirFaces) {
  SceneSpec spec = CourtyardSpec(3, 0, false);
  const Scene s = GenerateScene(spec, 0);
  ASSERT_EQ(s.segments.size(), 36u);
  for (const auto& e : s.segments) {
    for (int fi : e.faces) {
      const Face& f = s.faces[fi];
      for (const Vec3& p : {e.start, e.end, Vec3(0.5 * (e.start + e.end))}) {
        const Vec3 rel = p - f.origin;
        EXPECT_NEAR(rel.dot(f.normal), 0.0, 1e-12);
        const double u = rel.dot(f.edge_u) / f.edge_u.squaredNorm();
        const double v = rel.dot(f.edge_v) / f.edge_v.squaredNorm();
        EXPECT_GE(u, -1e-12);
        EXPECT_LE(u, 1 + 1e-12);
        EXPECT_GE(v, -1e-12);
        EXPECT_LE(v, 1 + 1e-12);
        // On the boundary: u or v at 0 or 1.
        EXPECT_TRUE(std::min({std::abs(u), std::abs(u - 1), std::abs(v), std::abs(v - 1)}) < 1e-9);
      }
    }
  }
}

TEST(GenerateScene, NormalsPointOutOfBoxesAndIntoRooms) {
  SceneSpec spec = UnitBox();
  BoxSpec room;
  room.min = Vec3(-5, -5, 0);
  room.max = Vec3(5, 5, 3);
  room.room = true;
  spec.boxes.push_back(room);
  const Scene s = GenerateScene(spec, 0);
  for (int i = 0; i < 6; ++i) {
    const Face& f = s.faces[i];
    EXPECT_GT(f.normal.dot(f.At(0.5, 0.5) - Vec3(0.5, 0.5, 0.5)), 0);
  }
  for (int i = 6; i < 12; ++i) {
    const Face& f = s.faces[i];
    EXPECT_LT(f.normal.dot(f.At(0.5, 0.5) - Vec3(0, 0, 1.5)), 0);
  }
}

TEST(GenerateScene, TwoBoxes) {
  SceneSpec spec = UnitBox();
  BoxSpec b;
  b.min = Vec3(3, 0, 0);
  b.max = Vec3(4, 2, 1);
  b.yaw = 0.4;
  spec.boxes.push_back(b);
  EXPECT_EQ(GenerateScene(spec, 0).segments.size(), 24u);
}

TEST(GenerateScene, FeatureCountAndPlacement) {
  SceneSpec spec = CourtyardSpec(4, 137);
  const Scene s = GenerateScene(spec, 11);
  ASSERT_EQ(s.points.size(), 137u);
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const ScenePoint& p = s.points[k];
    EXPECT_EQ(p.id, static_cast<int>(k));
    const Face& f = s.faces[p.face];
    EXPECT_NEAR((p.position - f.origin).dot(f.normal), 0.0, 1e-12);
    EXPECT_LT(std::abs(f.normal.z()), 0.5);
  }
}

TEST(GenerateScene, DeterministicPerSeed) {
  const SceneSpec spec = CourtyardSpec(4, 50);
  const Scene a = GenerateScene(spec, 3);
  const Scene b = GenerateScene(spec, 3);
  const Scene c = GenerateScene(spec, 4);
  ASSERT_EQ(a.points.size(), b.points.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].position, b.points[i].position);
    differs |= a.points[i].position != c.points[i].position;
  }
  EXPECT_TRUE(differs);
}

TEST(GenerateScene, InvalidSpecs) {
  SceneSpec flat;
  flat.boxes.push_back(BoxSpec{Vec3(0, 0, 0), Vec3(1, 1, 0)});
  EXPECT_THROW(GenerateScene(flat, 0), Error);
  SceneSpec no_faces;
  no_faces.num_points = 3;
  EXPECT_THROW(GenerateScene(no_faces, 0), Error);
  EXPECT_THROW(CourtyardSpec(0, 0), Error);
}

TEST(GenerateScene, AllGeometryFinite) {
  const Scene s = GenerateScene(CourtyardSpec(6, 100), 1);
  for (const auto& e : s.segments) EXPECT_TRUE(e.start.allFinite() && e.end.allFinite());
  for (const auto& f : s.faces) EXPECT_TRUE(f.origin.allFinite() && f.normal.allFinite());
}

// --- simulate_lidar

Scene WallAt(double z) {
  // Large fronto-parallel face at camera-frame depth z, facing the camera.
  Scene s;
  Face f;
  f.origin = Vec3(-100, -100, z);
  f.edge_u = Vec3(200, 0, 0);
  f.edge_v = Vec3(0, 200, 0);
  f.normal = Vec3(0, 0, -1);
  f.id = 0;
  s.faces.push_back(f);
  return s;
}

TEST(SimulateLidar, FrontoParallelRangesAnalytic) {
  const Scene s = WallAt(5.0);
  LidarSpec spec;
  spec.rings = 8;
  spec.points_per_ring = 64;
  const LidarScan scan = SimulateLidar(s, Pose::Identity(), spec, 0.0, 0);
  ASSERT_FALSE(scan.points.empty());
  EXPECT_EQ(scan.points.size(), scan.rings.size());
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Vec3& p = scan.points[i];
    // Angle between the ray and the wall normal: range = 5 / cos(angle).
    const double cos_angle = p.normalized().z();
    EXPECT_NEAR(p.norm(), 5.0 / cos_angle, 1e-9);
    EXPECT_NEAR(p.z(), 5.0, 1e-9);
  }
  // Forward half of every ring hits the wall (cos > 0 for |azimuth| < 90°).
  EXPECT_EQ(scan.points.size(), 8u * 31u);
}

TEST(SimulateLidar, EmptySceneEmptyScan) {
  const LidarScan scan = SimulateLidar(Scene{}, Pose::Identity(), LidarSpec{}, 0.01, 1);
  EXPECT_TRUE(scan.points.empty());
  EXPECT_TRUE(scan.rings.empty());
}

TEST(SimulateLidar, RangeNoiseStatistics) {
  const Scene s = WallAt(5.0);
  LidarSpec spec;
  spec.rings = 40;
  spec.points_per_ring = 600;
  const LidarScan clean = SimulateLidar(s, Pose::Identity(), spec, 0.0, 0);
  const LidarScan noisy = SimulateLidar(s, Pose::Identity(), spec, 0.01, 7);
  ASSERT_EQ(clean.points.size(), noisy.points.size());
  ASSERT_GE(clean.points.size(), 10000u);
  double sum = 0, sum2 = 0;
  const double n = static_cast<double>(clean.points.size());
  for (std::size_t i = 0; i < clean.points.size(); ++i) {
    const double r = noisy.points[i].norm() - clean.points[i].norm();
    EXPECT_LT((noisy.points[i].normalized() - clean.points[i].normalized()).norm(), 1e-12);
    sum += r;
    sum2 += r * r;
  }
  const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  EXPECT_GE(sd, 0.008);
  EXPECT_LE(sd, 0.012);
}

TEST(SimulateLidar, DeterministicPerSeed) {
  const Scene s = GenerateScene(CourtyardSpec(4, 0), 0);
  const Pose P = OrbitTrajectory(1, Vec3(0, 0, 0.8), 8, 1.6, 0)[0];
  LidarSpec spec;
  spec.rings = 16;
  spec.points_per_ring = 256;
  const LidarScan a = SimulateLidar(s, P, spec, 0.02, 5);
  const LidarScan b = SimulateLidar(s, P, spec, 0.02, 5);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
  EXPECT_EQ(a.rings, b.rings);
}

TEST(SimulateLidar, HitsLieOnSceneFaces) {
  const Scene s = GenerateScene(CourtyardSpec(4, 0), 0);
  const Pose P = OrbitTrajectory(1, Vec3(0, 0, 0.8), 8, 1.6, 0)[0];
  LidarSpec spec;
  spec.rings = 16;
  spec.points_per_ring = 256;
  const LidarScan scan = SimulateLidar(s, P, spec, 0.0, 0);
  ASSERT_GT(scan.points.size(), 500u);
  const Pose to_world = P.Inverse();
  for (const Vec3& p : scan.points) {
    const Vec3 X = to_world.Apply(p);
    double best = 1e9;
    for (const auto& f : s.faces) best = std::min(best, std::abs((X - f.origin).dot(f.normal)));
    EXPECT_LT(best, 1e-9);
  }
}

TEST(SimulateLidar, RingsAreOrderedAndElevationsUniform) {
  LidarSpec spec;
  spec.rings = 5;
  spec.points_per_ring = 8;
  for (int r = 0; r < spec.rings; ++r) {
    const double e = -std::asin(LidarRayDirection(spec, r, 0).y());
    EXPECT_NEAR(e, spec.fov_down + (spec.fov_up - spec.fov_down) * r / 4.0, 1e-12);
    for (int k = 0; k < spec.points_per_ring; ++k) EXPECT_NEAR(LidarRayDirection(spec, r, k).norm(), 1.0, 1e-12);
  }
  const LidarScan scan = SimulateLidar(WallAt(3.0), Pose::Identity(), spec, 0.0, 0);
  EXPECT_TRUE(std::is_sorted(scan.rings.begin(), scan.rings.end()));
}

TEST(SimulateLidar, InvalidArguments) {
  LidarSpec spec;
  spec.rings = 0;
  EXPECT_THROW(SimulateLidar(Scene{}, Pose::Identity(), spec, 0.0, 0), Error);
  EXPECT_THROW(SimulateLidar(Scene{}, Pose::Identity(), LidarSpec{}, -0.1, 0), Error);
}

// --- simulate_observations

TEST(SimulateObservations, EdgeBehindCameraAbsent) {
  Scene s;
  SceneSegment e;
  e.start = Vec3(-1, 0, -3);
  e.end = Vec3(1, 0, -3);
  e.id = 0;
  s.segments.push_back(e);
  ScenePoint p;
  p.position = Vec3(0, 0, -2);
  p.id = 0;
  s.points.push_back(p);
  const Observations o = SimulateObservations(s, Pose::Identity(), TestIntrinsics(), 0.0, 0);
  EXPECT_TRUE(o.segments.empty());
  EXPECT_TRUE(o.points.empty());
}

TEST(SimulateObservations, NoiselessMatchesProjectPoint) {
  const chain::SyntheticSetup setup;
  const Scene s = GenerateScene(CourtyardSpec(setup.boxes, setup.num_points), 0);
  const Pose P = OrbitTrajectory(1, setup.look_at, setup.orbit_radius, setup.orbit_height, 0)[0];
  const Observations o = SimulateObservations(s, P, setup.K, 0.0, 0);
  ASSERT_GT(o.segments.size(), 10u);
  ASSERT_GT(o.points.size(), 5u);
  for (const auto& obs : o.segments) {
    const Pose to_world = P.Inverse();
    EXPECT_LT((obs.segment.start - ProjectPoint(setup.K, P, to_world.Apply(obs.camera_start))).norm(), 1e-9);
    EXPECT_LT((obs.segment.end - ProjectPoint(setup.K, P, to_world.Apply(obs.camera_end))).norm(), 1e-9);
    // Visible portion lies on the ground-truth edge.
    const auto& e = s.segments[obs.gt_id];
    EXPECT_LT(DistanceToEdge(e, to_world.Apply(obs.camera_start)), 1e-9);
    EXPECT_LT(DistanceToEdge(e, to_world.Apply(obs.camera_end)), 1e-9);
    EXPECT_TRUE(setup.K.Contains(obs.segment.start));
    EXPECT_TRUE(setup.K.Contains(obs.segment.end));
  }
  for (const auto& obs : o.points) {
    EXPECT_LT((obs.pixel - ProjectPoint(setup.K, P, s.points[obs.gt_id].position)).norm(), 1e-9);
    EXPECT_NEAR(obs.depth, P.Apply(s.points[obs.gt_id].position).z(), 1e-12);
  }
}

TEST(SimulateObservations, BackFacingEdgesHidden) {
  // Looking at a box face-on: the four edges of the far face are back-facing
  // on both adjacent faces and must not be reported.
  const Scene s = GenerateScene(UnitBox(), 0);
  const Pose P = Pose::LookAt(Vec3(0.5, -4, 0.5), Vec3(0.5, 0.5, 0.5), Vec3(0, 0, 1));
  const Observations o = SimulateObservations(s, P, TestIntrinsics(), 0.0, 0, ObservationOptions{1.0});
  std::set<int> seen;
  for (const auto& obs : o.segments) seen.insert(obs.gt_id);
  for (const auto& e : s.segments) {
    const bool far_face = e.start.y() > 0.5 && e.end.y() > 0.5;
    if (far_face) EXPECT_FALSE(seen.count(e.id)) << e.id;
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(SimulateObservations, OccludedPortionTrimmed) {
  // A unit box in front of a long edge hides its middle; the longest visible
  // run is reported.
  SceneSpec spec;
  spec.boxes.push_back(BoxSpec{Vec3(-0.5, 1.0, -0.5), Vec3(0.5, 2.0, 0.5)});
  Scene s = GenerateScene(spec, 0);
  SceneSegment far;
  far.start = Vec3(-3, 6, 0);
  far.end = Vec3(1.5, 6, 0);
  far.id = static_cast<int>(s.segments.size());
  s.segments.push_back(far);
  const Pose P = Pose::LookAt(Vec3(0, -3, 0), Vec3(0, 6, 0), Vec3(0, 0, 1));
  ObservationOptions opt;
  opt.occlusion_samples = 101;
  const Observations o = SimulateObservations(s, P, TestIntrinsics(), 0.0, 0, opt);
  const SegmentObservation* found = nullptr;
  for (const auto& obs : o.segments) {
    if (obs.gt_id == far.id) found = &obs;
  }
  ASSERT_NE(found, nullptr);
  const Pose to_world = P.Inverse();
  const Vec3 a = to_world.Apply(found->camera_start);
  const Vec3 b = to_world.Apply(found->camera_end);
  // The box's shadow on y = 6 spans x in [-0.5, 0.5] * 9/4; the left run is longer.
  EXPECT_NEAR(std::min(a.x(), b.x()), -3.0, 1e-9);
  EXPECT_LT(std::max(a.x(), b.x()), -0.5 * 9.0 / 4.0 + 1e-9);
  EXPECT_GT(std::max(a.x(), b.x()), -0.5 * 9.0 / 4.0 - 0.05);
}

TEST(SimulateObservations, LabelsConsistentAcrossViews) {
  const chain::SyntheticDataset d = chain::MakeSyntheticDataset(chain::SyntheticSetup{});
  for (std::size_t v = 0; v < d.observations.size(); ++v) {
    for (const auto& obs : d.observations[v].segments) {
      const auto& e = d.scene.segments[obs.gt_id];
      const Pose to_world = d.gt_poses[v].Inverse();
      EXPECT_LT(DistanceToEdge(e, to_world.Apply(obs.camera_start)), 1e-9);
      EXPECT_LT(DistanceToEdge(e, to_world.Apply(obs.camera_end)), 1e-9);
    }
  }
}

TEST(SimulateObservations, PixelNoiseStatistics) {
  const chain::SyntheticSetup setup;
  const Scene s = GenerateScene(CourtyardSpec(setup.boxes, 400), 0);
  std::vector<double> dx;
  for (const Pose& P : OrbitTrajectory(10, setup.look_at, 8, 1.6, 2.0)) {
    const Observations clean = SimulateObservations(s, P, setup.K, 0.0, 0);
    const Observations noisy = SimulateObservations(s, P, setup.K, 0.5, 3);
    ASSERT_EQ(clean.segments.size(), noisy.segments.size());
    for (std::size_t i = 0; i < clean.segments.size(); ++i) {
      const Vec2 d = noisy.segments[i].segment.start - clean.segments[i].segment.start;
      dx.push_back(d.x());
      dx.push_back(d.y());
    }
  }
  ASSERT_GT(dx.size(), 400u);
  double s2 = 0;
  for (double v : dx) s2 += v * v;
  const double sd = std::sqrt(s2 / dx.size());
  EXPECT_NEAR(sd, 0.5, 0.1);
}

TEST(SimulateObservations, InvalidArguments) {
  EXPECT_THROW(SimulateObservations(Scene{}, Pose::Identity(), TestIntrinsics(), -1.0, 0), Error);
  ObservationOptions opt;
  opt.occlusion_samples = 1;
  EXPECT_THROW(SimulateObservations(Scene{}, Pose::Identity(), TestIntrinsics(), 0.0, 0, opt), Error);
}

// --- perturb_trajectory

std::vector<Pose> Orbit() { return OrbitTrajectory(10, Vec3(0, 0, 0.8), 8.0, 1.6, 2.0); }

TEST(PerturbTrajectory, ZeroNoiseIdentical) {
  const auto poses = Orbit();
  const auto out = PerturbTrajectory(poses, NoiseSpec{0, 0, 0.5, 0.01, 42});
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_EQ(out[i].R(), poses[i].R());
    EXPECT_EQ(out[i].translation(), poses[i].translation());
  }
}

TEST(PerturbTrajectory, Deterministic) {
  const NoiseSpec n{0.5, 5.0 * std::numbers::pi / 180.0, 0, 0, 9};
  const auto a = PerturbTrajectory(Orbit(), n);
  const auto b = PerturbTrajectory(Orbit(), n);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].R(), b[i].R());
    EXPECT_EQ(a[i].translation(), b[i].translation());
  }
}

TEST(PerturbTrajectory, HalfMeterFiveDegreeStatistics) {
  // Sigma_T = 0.5 m per axis on the center, Sigma_R = 5 degrees on the angle.
  const double sigma_T = 0.5;
  const double sigma_R = 5.0 * std::numbers::pi / 180.0;
  const std::vector<Pose> poses(2000, Pose::LookAt(Vec3(3, 1, 2), Vec3(0, 0, 0), Vec3(0, 0, 1)));
  const auto out = PerturbTrajectory(poses, NoiseSpec{sigma_T, sigma_R, 0, 0, 1});
  double t2 = 0, r2 = 0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    t2 += (out[i].Center() - poses[i].Center()).squaredNorm();
    r2 += LogSO3(out[i].R() * poses[i].R().transpose()).squaredNorm();
    EXPECT_NEAR((out[i].R() * out[i].R().transpose() - Mat3::Identity()).norm(), 0.0, 1e-12);
  }
  const double n = static_cast<double>(poses.size());
  // E||dc||^2 = 3 sigma_T^2 and E angle^2 = sigma_R^2.
  EXPECT_NEAR(std::sqrt(t2 / (3 * n)), sigma_T, 0.03);
  EXPECT_NEAR(std::sqrt(r2 / n), sigma_R, 0.05 * sigma_R);
}

TEST(PerturbTrajectory, NegativeNoiseRejected) {
  EXPECT_THROW(PerturbTrajectory(Orbit(), NoiseSpec{-0.1, 0, 0, 0, 0}), Error);
  EXPECT_THROW(PerturbTrajectory(Orbit(), NoiseSpec{0, 0, 0, -1, 0}), Error);
}

// --- helpers

TEST(OrbitTrajectory, LooksAtCenter) {
  const Vec3 c(0, 0, 0.8);
  for (const Pose& P : OrbitTrajectory(7, c, 8.0, 1.6, 2.0)) {
    const Vec3 Xc = P.Apply(c);
    EXPECT_NEAR(Xc.x(), 0.0, 1e-12);
    EXPECT_NEAR(Xc.y(), 0.0, 1e-12);
    EXPECT_GT(Xc.z(), 0.0);
    EXPECT_NEAR(P.Center().z(), 1.6, 1e-12);
    EXPECT_NEAR(P.Center().head<2>().norm(), 8.0, 1e-12);
  }
}

TEST(CastRay, NearestHit) {
  const Scene s = GenerateScene(UnitBox(), 0);
  const auto hit = CastRay(s, Vec3(0.5, -2, 0.5), Vec3(0, 1, 0));
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(hit->t, 2.0, 1e-12);
  EXPECT_LT(std::abs(s.faces[hit->face].normal.y() + 1), 1e-12);
  EXPECT_FALSE(CastRay(s, Vec3(0.5, -2, 0.5), Vec3(0, -1, 0)).has_value());
}

TEST(SampleSceneSurface, CoversFaces) {
  const Scene s = GenerateScene(UnitBox(), 0);
  const auto pts = SampleSceneSurface(s, 0.25);
  EXPECT_EQ(pts.size(), 6u * 25u);
  EXPECT_THROW(SampleSceneSurface(s, 0.0), Error);
}

TEST(ToWorldSegment, InvertsTheObservationPose) {
  const Pose P = Pose::LookAt(Vec3(2, -3, 1), Vec3(0, 0, 0), Vec3(0, 0, 1));
  SegmentObservation obs;
  obs.camera_start = P.Apply(Vec3(1, 0, 0));
  obs.camera_end = P.Apply(Vec3(0, 1, 0));
  obs.segment = Segment2D(Vec2(1, 2), Vec2(30, 40));
  const Segment3D s = ToWorldSegment(obs, P, 4);
  EXPECT_LT((s.start - Vec3(1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((s.end - Vec3(0, 1, 0)).norm(), 1e-12);
  EXPECT_EQ(s.view_id, 4);
  ASSERT_TRUE(s.seg2d.has_value());
}

TEST(Rendering, FacesShadedAndWireframeOnEdges) {
  const chain::SyntheticSetup setup;
  const Scene s = GenerateScene(CourtyardSpec(setup.boxes, 0), 0);
  const Pose P = OrbitTrajectory(1, setup.look_at, 8, 1.6, 0)[0];
  const GrayImage img = RenderImage(s, setup.K, P, 0);
  EXPECT_EQ(img.width, setup.K.width);
  // Principal ray hits some face: its shade, not background.
  EXPECT_GT(img.at(320, 240), 0);
  const GrayImage wire = RenderWireframe(s.segments, setup.K, P);
  const auto& e = s.segments[0];
  const Vec2 mid = ProjectPoint(setup.K, P, 0.5 * (e.start + e.end));
  if (setup.K.Contains(mid)) EXPECT_GT(wire.at(static_cast<int>(std::lround(mid.x())), static_cast<int>(std::lround(mid.y()))), 100);
}

// --- full chain on noiseless data

TEST(SyntheticChain, NoiselessRoundTripRecoversPoses) {
  const chain::SyntheticDataset d = chain::MakeSyntheticDataset(chain::SyntheticSetup{});
  const auto segments = chain::BypassSegments(d);
  chain::ChainOptions opt;
  opt.solver.max_iters = 50;
  const auto points = chain::InitialPoints(d, d.init_poses);
  const chain::ChainResult r = chain::RunLineChain(segments, d.K, d.init_poses, points, opt);
  const auto e = testing::GaugeAlignedErrors(r.optimized.problem.poses, d.gt_poses);
  EXPECT_LT(e.translation, 1e-6);
  EXPECT_LT(e.rotation, 1e-6);
  EXPECT_LT(r.optimized.report.final_cost, 1e-10);
}

}  // namespace
}  // namespace linesfm
