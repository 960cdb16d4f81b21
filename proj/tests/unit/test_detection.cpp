#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "linesfm/detection.hpp"
#include "linesfm/synthetic.hpp"
#include "test_util.hpp"

namespace linesfm {
namespace {

constexpr double kDeg = M_PI / 180.0;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

double LineAngle(const Vec2& a, const Vec2& b) {
  return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized()))));
}

// ---- 2D detector ----------------------------------------------------------

TEST(DetectSegments2D, ConstantImageIsEmpty) {
  EXPECT_TRUE(DetectSegments2D(GrayImage(64, 64, 128)).empty());
}

TEST(DetectSegments2D, TooSmall) {
  EXPECT_EQ(CodeOf([] { DetectSegments2D(GrayImage(15, 64, 0)); }), ErrorCode::kImageTooSmall);
}

TEST(DetectSegments2D, StepEdge) {
  GrayImage img(100, 100, 0);
  for (int y = 0; y < 100; ++y) {
    for (int x = 50; x < 100; ++x) img.at(x, y) = 255;
  }
  const auto segs = DetectSegments2D(img);
  ASSERT_EQ(segs.size(), 1u);
  const Segment2D& s = segs[0];
  EXPECT_LT(LineAngle(s.end - s.start, Vec2(0, 1)), 1.0 * kDeg);
  EXPECT_GE(s.Length(), 80.0);
  // The edge lies between pixel columns 49 and 50.
  EXPECT_NEAR(s.Midpoint().x(), 49.5, 1.0);
}

TEST(DetectSegments2D, WireframeEdges) {
  const CameraIntrinsics K = testing::TestIntrinsics();
  const Pose P = Pose::LookAt(Vec3(0, -6, 1.5), Vec3(0, 0, 1), Vec3(0, 0, 1));
  std::vector<synthetic::SceneSegment> edges = {
      {Vec3(-2, 0, 0), Vec3(2, 0, 0), 0, {}},      {Vec3(-2, 0, 2), Vec3(2, 0.5, 2), 1, {}},
      {Vec3(-1.5, 0, 0.2), Vec3(-1.5, 0, 1.8), 2, {}}, {Vec3(1.0, 1, 0), Vec3(1.6, 1, 1.8), 3, {}},
      {Vec3(-0.8, -1, 0.4), Vec3(0.5, -1, 1.4), 4, {}}};
  const auto segs = DetectSegments2D(synthetic::RenderWireframe(edges, K, P, 1.5));
  int found = 0;
  for (const auto& e : edges) {
    const Vec2 a = ProjectPoint(K, P, e.start);
    const Vec2 b = ProjectPoint(K, P, e.end);
    const Line2D gt = Line2D::FromCoefficients(Vec3(a.x(), a.y(), 1).cross(Vec3(b.x(), b.y(), 1)));
    for (const auto& s : segs) {
      const double rms =
          std::sqrt(0.5 * (std::pow(PointLineDistance2D(s.start, gt), 2) + std::pow(PointLineDistance2D(s.end, gt), 2)));
      // Overlap: the detected midpoint lies on the finite ground-truth segment.
      const bool overlaps = Segment2D(a, b).DistanceTo(s.Midpoint()) < 2.0;
      if (rms < 2.0 && overlaps && LineAngle(s.end - s.start, b - a) < 2.0 * kDeg) {
        ++found;
        break;
      }
    }
  }
  EXPECT_GE(found, 4);
}

// ---- LIDAR edge points ----------------------------------------------------

LidarScan RingFrom(const std::vector<Vec3>& pts) {
  LidarScan s;
  s.points = pts;
  s.rings.assign(pts.size(), 0);
  s.num_rings = 1;
  return s;
}

// Oracle: smoothness straight from its definition.
double BruteSmoothness(const std::vector<Vec3>& ring, int i, int w) {
  Vec3 sum = Vec3::Zero();
  int count = 0;
  for (int j = i - w; j <= i + w; ++j) {
    if (j == i) continue;
    sum += ring[j] - ring[i];
    ++count;
  }
  return sum.norm() / (count * ring[i].norm());
}

TEST(Smoothness, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 0.05);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec3> ring;
    for (int k = 0; k < 1000; ++k) {
      const double a = -1.0 + 2.0 * k / 1000.0;
      const double r = 5.0 + std::sin(3 * a) + n(rng);
      ring.emplace_back(r * std::sin(a), 0.1, r * std::cos(a));
    }
    const auto c = ComputeSmoothness(RingFrom(ring), 5);
    for (int i = 0; i < 1000; ++i) {
      if (i < 5 || i >= 995) {
        EXPECT_TRUE(std::isnan(c[i]));
      } else {
        EXPECT_DOUBLE_EQ(c[i], BruteSmoothness(ring, i, 5));
      }
    }
  }
}

TEST(ExtractEdgePoints, CollinearRingIsFlat) {
  std::vector<Vec3> ring;
  for (int k = 0; k < 50; ++k) ring.emplace_back(-2.5 + 0.1 * k, 0.0, 5.0);
  const auto c = ComputeSmoothness(RingFrom(ring), 5);
  for (int i = 5; i < 45; ++i) EXPECT_NEAR(c[i], 0.0, 1e-12);
  EXPECT_TRUE(ExtractEdgePoints(RingFrom(ring), DetectionConfig{}).empty());
}

TEST(ExtractEdgePoints, CornerIsRingMaximum) {
  // Two walls meeting at 90 degrees at (0, 0, 4).
  std::vector<Vec3> ring;
  for (int k = 20; k >= 1; --k) ring.emplace_back(-0.1 * k, 0.0, 4.0 - 0.1 * k);
  ring.emplace_back(0.0, 0.0, 4.0);
  for (int k = 1; k <= 20; ++k) ring.emplace_back(0.1 * k, 0.0, 4.0 - 0.1 * k);
  const int corner = 20;
  const auto c = ComputeSmoothness(RingFrom(ring), 5);
  int argmax = -1;
  for (int i = 5; i < 36; ++i) {
    EXPECT_DOUBLE_EQ(c[i], BruteSmoothness(ring, i, 5));
    if (argmax < 0 || c[i] > c[argmax]) argmax = i;
  }
  EXPECT_EQ(argmax, corner);
  bool emitted = false;
  for (const auto& e : ExtractEdgePoints(RingFrom(ring), DetectionConfig{})) {
    emitted |= (e.position - ring[corner]).norm() < 1e-12;
    EXPECT_GE(e.smoothness, 0.0);
  }
  EXPECT_TRUE(emitted);
}

TEST(ExtractEdgePoints, RangeSpikeExcluded) {
  std::vector<Vec3> ring;
  for (int k = 0; k < 31; ++k) ring.emplace_back(-1.5 + 0.1 * k, 0.0, 5.0);
  ring[15].z() = 8.0;
  const auto c = ComputeSmoothness(RingFrom(ring), 5);
  EXPECT_GT(c[15], DetectionConfig{}.smoothness_threshold);
  for (const auto& e : ExtractEdgePoints(RingFrom(ring), DetectionConfig{})) {
    EXPECT_GT((e.position - ring[15]).norm(), 1e-9);
  }
}

TEST(ExtractEdgePoints, RingTooShort) {
  std::vector<Vec3> ring(10, Vec3(0, 0, 5));
  EXPECT_EQ(CodeOf([&] { ExtractEdgePoints(RingFrom(ring), DetectionConfig{}); }), ErrorCode::kRingTooShort);
}

// ---- association of edge points to 2D segments ---------------------------

TEST(AssociateEdges, DistanceAndVisibility) {
  const CameraIntrinsics K = testing::TestIntrinsics();
  const Pose P = Pose::Identity();
  const DetectionConfig cfg;
  const Segment2D seg(Vec2(300, 240), Vec2(400, 240));
  auto back_project = [&](const Vec2& px, double z) {
    return Vec3((px.x() - K.cx) / K.fx * z, (px.y() - K.cy) / K.fy * z, z);
  };
  const EdgePoint on{back_project(seg.Midpoint(), 5.0), 1.0};
  const EdgePoint far{back_project(seg.Midpoint() + Vec2(0, 10), 5.0), 1.0};
  const EdgePoint beyond{back_project(Vec2(410, 240), 5.0), 1.0};
  const EdgePoint behind{Vec3(on.position.x(), on.position.y(), -5.0), 1.0};
  EXPECT_EQ(AssociateEdgesToSegment(seg, {on}, K, P, cfg).size(), 1u);
  EXPECT_TRUE(AssociateEdgesToSegment(seg, {far}, K, P, cfg).empty());
  // Past the segment end by more than the radius, although on its infinite line.
  EXPECT_TRUE(AssociateEdgesToSegment(seg, {beyond}, K, P, cfg).empty());
  EXPECT_TRUE(AssociateEdgesToSegment(seg, {behind}, K, P, cfg).empty());
}

// ---- RANSAC ---------------------------------------------------------------

TEST(FitLineRansac, ExactCollinear) {
  const Vec3 d = Vec3(1, 2, -0.5).normalized();
  std::vector<Vec3> pts;
  for (int k = 0; k < 10; ++k) pts.push_back(Vec3(0.3, -1, 2) + 0.37 * k * d);
  const auto r = FitLineRansac(pts, DetectionConfig{});
  EXPECT_EQ(r.inliers.size(), 10u);
  EXPECT_LT(r.line.d().cross(d).norm(), 1e-9);
}

struct LineTrial {
  std::vector<Vec3> points;
  Vec3 direction;
};

LineTrial MakeLineTrial(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  LineTrial t;
  t.direction = testing::RandomUnit(rng);
  const Vec3 origin(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
  for (int k = 0; k < 70; ++k) {
    t.points.push_back(origin + u(rng) * t.direction + Vec3(noise(rng), noise(rng), noise(rng)));
  }
  for (int k = 0; k < 30; ++k) t.points.emplace_back(u(rng), u(rng), u(rng));
  std::shuffle(t.points.begin(), t.points.end(), rng);
  return t;
}

TEST(FitLineRansac, InliersAndOutliers) {
  const LineTrial t = MakeLineTrial(99);
  DetectionConfig cfg;
  cfg.rng_seed = 7;
  const auto r = FitLineRansac(t.points, cfg);
  EXPECT_LT(std::asin(std::min(1.0, r.line.d().cross(t.direction).norm())), 0.5 * kDeg);
  EXPECT_GE(r.inliers.size(), 60u);
}

TEST(FitLineRansac, DeterministicForSeed) {
  const LineTrial t = MakeLineTrial(5);
  DetectionConfig cfg;
  cfg.rng_seed = 42;
  const auto a = FitLineRansac(t.points, cfg);
  const auto b = FitLineRansac(t.points, cfg);
  EXPECT_EQ(a.inliers, b.inliers);
  EXPECT_EQ(a.line.AsVector(), b.line.AsVector());
}

TEST(FitLineRansac, Errors) {
  std::vector<Vec3> five;
  for (int k = 0; k < 5; ++k) five.emplace_back(k, 0, 0);
  EXPECT_EQ(CodeOf([&] { FitLineRansac(five, DetectionConfig{}); }), ErrorCode::kNoConsensus);
  EXPECT_EQ(CodeOf([] { FitLineRansac({Vec3::Zero()}, DetectionConfig{}); }), ErrorCode::kNotEnoughPoints);
}

// ---- reprojection check ---------------------------------------------------

TEST(ValidateReprojection, Rules) {
  const CameraIntrinsics K = testing::TestIntrinsics();
  const Pose P = Pose::Identity();
  const Segment2D seg(Vec2(250, 200), Vec2(420, 260));
  auto ray = [&](const Vec2& px) { return Vec3((px.x() - K.cx) / K.fx, (px.y() - K.cy) / K.fy, 1.0); };
  DetectionConfig cfg;
  for (double depth : {0.5, 3.0, 40.0}) {
    const PluckerLine L = PluckerFromEndpoints(depth * ray(seg.start), 1.7 * depth * ray(seg.end));
    EXPECT_TRUE(ValidateReprojection(L, seg, K, P, cfg));
  }
  cfg.reproj_angle_tol = 2.0 * kDeg;
  const PluckerLine L = PluckerFromEndpoints(4.0 * ray(seg.start), 4.0 * ray(seg.end));
  const Pose roll(ExpSO3(Vec3(0, 0, 10.0 * kDeg)), Vec3::Zero());
  EXPECT_FALSE(ValidateReprojection(L.Transformed(roll), seg, K, P, cfg));
  const Vec2 n = Vec2(-(seg.end - seg.start).y(), (seg.end - seg.start).x()).normalized() * 10.0;
  const PluckerLine shifted = PluckerFromEndpoints(4.0 * ray(seg.start + n), 4.0 * ray(seg.end + n));
  EXPECT_FALSE(ValidateReprojection(shifted, seg, K, P, cfg));
  const PluckerLine through_center = PluckerFromEndpoints(Vec3::Zero(), ray(seg.start));
  EXPECT_FALSE(ValidateReprojection(through_center, seg, K, P, cfg));
}

// ---- full per-view pipeline -----------------------------------------------

struct BoxView {
  synthetic::Scene scene;
  std::vector<PluckerLine> gt_lines;  // box edges, then the ground plane border
  CameraIntrinsics K;
  Pose pose;
  Pose lidar_to_camera;
  LidarScan scan;
  DetectionConfig cfg;
};

// Dense scanner rolled 45 degrees against the camera, so that its rings cross
// horizontal and vertical edges alike.
BoxView MakeBoxView(bool stripes) {
  synthetic::SceneSpec spec;
  spec.boxes.push_back({Vec3(-1.2, -0.8, 0.0), Vec3(1.2, 0.8, 1.6), 0.5, false});
  spec.ground_plane = true;
  BoxView v;
  v.scene = synthetic::GenerateScene(spec, 1);
  if (stripes) {
    for (auto& f : v.scene.faces) {
      if (f.id < 6 && std::abs(f.normal.z()) < 0.5) f.stripes = {{0.45, 0.55}};
    }
  }
  for (const auto& e : v.scene.segments) v.gt_lines.push_back(PluckerFromEndpoints(e.start, e.end));
  const double h = spec.ground_half_extent;
  for (const Vec3& c : {Vec3(-h, -h, 0), Vec3(h, h, 0)}) {
    v.gt_lines.push_back(PluckerLine(Vec3::UnitX(), c.cross(Vec3::UnitX())));
    v.gt_lines.push_back(PluckerLine(Vec3::UnitY(), c.cross(Vec3::UnitY())));
  }
  v.K = testing::TestIntrinsics();
  v.pose = Pose::LookAt(Vec3(3.5, -2.5, 2.5), Vec3(0, 0, 0.8), Vec3(0, 0, 1));
  v.lidar_to_camera = Pose(ExpSO3(Vec3(0, 0, M_PI / 4)), Vec3::Zero());
  synthetic::LidarSpec lidar;
  lidar.rings = 128;
  lidar.points_per_ring = 4096;
  v.scan = synthetic::SimulateLidar(v.scene, v.lidar_to_camera.Inverse() * v.pose, lidar, 0.0, 3);
  // The smoothness of a corner scales with the angular step of the rings.
  v.cfg.smoothness_threshold = 0.0015;
  return v;
}

std::vector<Segment3D> Detect(const BoxView& v, const GrayImage& image) {
  return BuildViewSegments(image, v.scan, v.K, v.pose, v.cfg, 0, v.lidar_to_camera);
}

// RMS of the endpoints' distances to the nearest ground-truth edge line, and
// that line's index.
std::pair<double, int> EndpointRms(const Segment3D& s, const BoxView& v) {
  double best = std::numeric_limits<double>::infinity();
  int id = -1;
  for (std::size_t i = 0; i < v.gt_lines.size(); ++i) {
    const PluckerLine& gt = v.gt_lines[i];
    const double rms = std::sqrt(0.5 * (std::pow(gt.Distance(s.start), 2) + std::pow(gt.Distance(s.end), 2)));
    if (rms < best) {
      best = rms;
      id = static_cast<int>(i);
    }
  }
  return {best, id};
}

TEST(BuildViewSegments, BoxScene) {
  const BoxView v = MakeBoxView(false);
  // Nine of the twelve box edges are visible.
  EXPECT_EQ(synthetic::SimulateObservations(v.scene, v.pose, v.K, 0.0, 1).segments.size(), 9u);
  std::set<int> edges;
  for (const auto& s : Detect(v, synthetic::RenderImage(v.scene, v.K, v.pose))) {
    const auto [rms, id] = EndpointRms(s, v);
    EXPECT_LT(rms, 0.03);
    if (id < static_cast<int>(v.scene.segments.size())) edges.insert(id);
    ASSERT_TRUE(s.seg2d.has_value());
    EXPECT_TRUE(ValidateReprojection(PluckerFromEndpoints(s.start, s.end), *s.seg2d, v.K, v.pose, v.cfg));
    EXPECT_EQ(s.view_id, 0);
  }
  EXPECT_GE(edges.size(), 7u);
}

TEST(BuildViewSegments, PaintedStripeYieldsNothing) {
  const BoxView v = MakeBoxView(true);
  const GrayImage image = synthetic::RenderImage(v.scene, v.K, v.pose);
  const auto lines2d = DetectSegments2D(image);
  // The stripe borders are detected in the image...
  int stripe_lines = 0;
  for (const auto& s : lines2d) {
    bool near_edge = false;
    for (const auto& e : v.scene.segments) {
      const Vec3 a = v.pose.Apply(e.start);
      const Vec3 b = v.pose.Apply(e.end);
      if (a.z() <= 0.1 || b.z() <= 0.1) continue;
      const Segment2D gt(ProjectPoint(v.K, v.pose, e.start), ProjectPoint(v.K, v.pose, e.end));
      near_edge |= gt.DistanceTo(s.start) < 5 && gt.DistanceTo(s.end) < 5;
    }
    stripe_lines += !near_edge;
  }
  EXPECT_GT(stripe_lines, 0);
  // ...but none survives as a 3D segment. Stripe borders lie at least 0.7 m from every
  // edge; edges cut by a stripe may come out as shorter, slightly less accurate pieces.
  for (const auto& s : Detect(v, image)) EXPECT_LT(EndpointRms(s, v).first, 0.1);
}

TEST(BuildViewSegments, EmptyScan) {
  const BoxView v = MakeBoxView(false);
  EXPECT_TRUE(BuildViewSegments(synthetic::RenderImage(v.scene, v.K, v.pose), LidarScan{}, v.K, v.pose, v.cfg, 0)
                  .empty());
}

// ---- merging --------------------------------------------------------------

TEST(MergeCollinear, Span) {
  const Vec3 d = Vec3(1, 1, 0).normalized();
  const std::vector<Segment3D> segs{{Vec3::Zero(), d, 0}, {0.8 * d, 2.0 * d, 0}};
  const auto out = MergeCollinearSegments(segs, DetectionConfig{});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].Length(), 2.0, 1e-12);
  EXPECT_LT(std::min(out[0].start.norm(), out[0].end.norm()), 1e-12);
}

TEST(MergeCollinear, PerpendicularAndParallelUnchanged) {
  const DetectionConfig cfg;
  const std::vector<Segment3D> perp{{Vec3::Zero(), Vec3(1, 0, 0), 0}, {Vec3::Zero(), Vec3(0, 1, 0), 0}};
  EXPECT_EQ(MergeCollinearSegments(perp, cfg).size(), 2u);
  const std::vector<Segment3D> par{{Vec3::Zero(), Vec3(1, 0, 0), 0}, {Vec3(0, 0.5, 0), Vec3(1, 0.5, 0), 0}};
  EXPECT_EQ(MergeCollinearSegments(par, cfg).size(), 2u);
}

TEST(MergeCollinear, Idempotent) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::normal_distribution<double> jitter(0.0, 0.005);
  const DetectionConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Segment3D> segs;
    for (int line = 0; line < 4; ++line) {
      const Vec3 o = testing::RandomVec3(rng, 2.0);
      const Vec3 d = testing::RandomUnit(rng);
      for (int k = 0; k < 4; ++k) {
        const double a = u(rng);
        const Vec3 j(jitter(rng), jitter(rng), jitter(rng));
        segs.emplace_back(o + a * d + j, o + (a + 0.3 + u(rng) * 0.2) * d + j, 0);
      }
    }
    const auto once = MergeCollinearSegments(segs, cfg);
    const auto twice = MergeCollinearSegments(once, cfg);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      EXPECT_LT((once[i].start - twice[i].start).norm(), 1e-12);
      EXPECT_LT((once[i].end - twice[i].end).norm(), 1e-12);
    }
  }
}

}  // namespace
}  // namespace linesfm
