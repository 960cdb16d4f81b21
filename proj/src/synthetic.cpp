#include "linesfm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace linesfm::synthetic {

namespace {

std::uint8_t FaceShade(int id) { return static_cast<std::uint8_t>(60 + (37 * id) % 160); }

void AddBox(const BoxSpec& box, Scene* scene) {
  const Vec3 center = 0.5 * (box.min + box.max);
  const Vec3 half = 0.5 * (box.max - box.min);
  if (!(half.array() > 0).all()) Throw(ErrorCode::kInvalidArgument, "box extents must be positive");
  const Mat3 R = Eigen::AngleAxisd(box.yaw, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 axes = R * half.asDiagonal();  // column a = rotated half-extent along axis a
  const int base = static_cast<int>(scene->faces.size());
  auto face_index = [base](int axis, int side) { return base + 2 * axis + (side > 0 ? 1 : 0); };

  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const int c = (a + 2) % 3;
    for (int side : {-1, 1}) {
      Face f;
      f.origin = center + side * axes.col(a) - axes.col(b) - axes.col(c);
      f.edge_u = 2.0 * axes.col(b);
      f.edge_v = 2.0 * axes.col(c);
      f.normal = (box.room ? -side : side) * R.col(a);
      f.id = face_index(a, side);
      f.shade = FaceShade(f.id);
      scene->faces.push_back(f);
    }
  }
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const int c = (a + 2) % 3;
    for (int sb : {-1, 1}) {
      for (int sc : {-1, 1}) {
        SceneSegment s;
        const Vec3 mid = center + sb * axes.col(b) + sc * axes.col(c);
        s.start = mid - axes.col(a);
        s.end = mid + axes.col(a);
        s.id = static_cast<int>(scene->segments.size());
        s.faces = {face_index(b, sb), face_index(c, sc)};
        scene->segments.push_back(s);
      }
    }
  }
}

bool FrontFacing(const Face& f, const Vec3& eye) { return f.normal.dot(eye - f.origin) > 0; }

bool Occluded(const Scene& scene, const Vec3& eye, const Vec3& X) {
  const Vec3 ray = X - eye;
  const double dist = ray.norm();
  const auto hit = CastRay(scene, eye, ray / dist);
  return hit && hit->t < dist - 1e-7 * std::max(1.0, dist);
}

}  // namespace

SceneSpec CourtyardSpec(int count, int num_points, bool ground_plane) {
  if (count < 1) Throw(ErrorCode::kInvalidArgument, "need at least one box");
  SceneSpec spec;
  spec.ground_plane = ground_plane;
  spec.num_points = num_points;
  const double ring = count == 1 ? 0.0 : 3.0;
  for (int k = 0; k < count; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / count;
    const Vec3 center(ring * std::cos(phi), ring * std::sin(phi), 0.0);
    const Vec3 half(0.6 + 0.1 * (k % 3), 0.5 + 0.15 * (k % 2), 0.0);
    const double height = 1.2 + 0.3 * (k % 3);
    BoxSpec box;
    box.min = center - half;
    box.max = center + half + Vec3(0, 0, height);
    box.yaw = 0.35 * k;
    spec.boxes.push_back(box);
  }
  return spec;
}

Scene GenerateScene(const SceneSpec& spec, std::uint64_t seed) {
  if (spec.num_points < 0) Throw(ErrorCode::kInvalidArgument, "point count must be non-negative");
  Scene scene;
  for (const auto& box : spec.boxes) AddBox(box, &scene);
  if (spec.ground_plane) {
    const double h = spec.ground_half_extent;
    Face g;
    g.origin = Vec3(-h, -h, 0.0);
    g.edge_u = Vec3(2 * h, 0, 0);
    g.edge_v = Vec3(0, 2 * h, 0);
    g.normal = Vec3::UnitZ();
    g.id = static_cast<int>(scene.faces.size());
    g.shade = 30;
    scene.faces.push_back(g);
  }

  // Features are scattered over vertical box faces by area, away from the
  // face borders.
  std::vector<int> candidates;
  std::vector<double> areas;
  const int box_faces = static_cast<int>(spec.boxes.size()) * 6;
  for (int i = 0; i < box_faces; ++i) {
    if (std::abs(scene.faces[i].normal.z()) < 0.5) {
      candidates.push_back(i);
      areas.push_back(scene.faces[i].Area());
    }
  }
  if (spec.num_points > 0 && candidates.empty()) {
    Throw(ErrorCode::kInvalidArgument, "scene has no faces to place point features on");
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int k = 0; k < spec.num_points; ++k) {
    const int face = candidates[pick(rng)];
    const double u = unit(rng);
    const double v = unit(rng);
    scene.points.push_back(ScenePoint{scene.faces[face].At(u, v), k, face});
  }
  return scene;
}

std::vector<Pose> OrbitTrajectory(int views, const Vec3& center, double radius, double height, double arc_rad,
                                  double start_angle) {
  if (views < 1) Throw(ErrorCode::kInvalidArgument, "need at least one view");
  std::vector<Pose> poses;
  for (int i = 0; i < views; ++i) {
    const double phi = start_angle + (views == 1 ? 0.0 : arc_rad * i / (views - 1));
    const Vec3 eye(center.x() + radius * std::cos(phi), center.y() + radius * std::sin(phi), height);
    poses.push_back(Pose::LookAt(eye, center, Vec3::UnitZ()));
  }
  return poses;
}

std::optional<Hit> CastRay(const Scene& scene, const Vec3& origin, const Vec3& direction, double t_min) {
  std::optional<Hit> best;
  for (const auto& f : scene.faces) {
    const double denom = f.normal.dot(direction);
    if (std::abs(denom) < 1e-15) continue;
    const double t = f.normal.dot(f.origin - origin) / denom;
    if (!(t > t_min) || (best && t >= best->t)) continue;
    const Vec3 rel = origin + t * direction - f.origin;
    const double u = rel.dot(f.edge_u) / f.edge_u.squaredNorm();
    const double v = rel.dot(f.edge_v) / f.edge_v.squaredNorm();
    constexpr double kEps = 1e-12;
    if (u < -kEps || u > 1 + kEps || v < -kEps || v > 1 + kEps) continue;
    best = Hit{t, f.id};
  }
  return best;
}

Vec3 LidarRayDirection(const LidarSpec& spec, int ring, int k) {
  const double e =
      spec.rings == 1 ? 0.0 : spec.fov_down + (spec.fov_up - spec.fov_down) * ring / (spec.rings - 1);
  const double a = 2.0 * std::numbers::pi * k / spec.points_per_ring;
  return Vec3(std::cos(e) * std::sin(a), -std::sin(e), std::cos(e) * std::cos(a));
}

LidarScan SimulateLidar(const Scene& scene, const Pose& pose, const LidarSpec& spec, double lidar_sigma,
                        std::uint64_t seed) {
  if (spec.rings < 1 || spec.points_per_ring < 1) Throw(ErrorCode::kInvalidArgument, "bad LIDAR resolution");
  if (!(lidar_sigma >= 0)) Throw(ErrorCode::kInvalidArgument, "lidar_sigma must be non-negative");
  const Mat3 R_wc = pose.R().transpose();
  const Vec3 eye = pose.Center();
  const std::size_t n = static_cast<std::size_t>(spec.rings) * spec.points_per_ring;
  std::vector<double> range(n, -1.0);
  ParallelFor(static_cast<std::size_t>(spec.rings), [&](std::size_t r) {
    for (int k = 0; k < spec.points_per_ring; ++k) {
      const Vec3 d = LidarRayDirection(spec, static_cast<int>(r), k);
      const auto hit = CastRay(scene, eye, R_wc * d);
      if (hit && hit->t <= spec.max_range) range[r * spec.points_per_ring + k] = hit->t;
    }
  });

  LidarScan scan;
  scan.num_rings = spec.rings;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int r = 0; r < spec.rings; ++r) {
    for (int k = 0; k < spec.points_per_ring; ++k) {
      const double rho = range[static_cast<std::size_t>(r) * spec.points_per_ring + k];
      if (rho < 0) continue;
      const double noisy = lidar_sigma > 0 ? rho + lidar_sigma * noise(rng) : rho;
      scan.points.push_back(LidarRayDirection(spec, r, k) * noisy);
      scan.rings.push_back(r);
    }
  }
  return scan;
}

GrayImage RenderImage(const Scene& scene, const CameraIntrinsics& K, const Pose& pose, std::uint8_t background) {
  K.Validate();
  GrayImage image(K.width, K.height, background);
  const Mat3 R_wc = pose.R().transpose();
  const Vec3 eye = pose.Center();
  // 2x2 supersampling softens staircase edges.
  constexpr int kSub = 2;
  ParallelFor(static_cast<std::size_t>(K.height), [&](std::size_t yi) {
    const int y = static_cast<int>(yi);
    for (int x = 0; x < K.width; ++x) {
      double sum = 0.0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = x - 0.5 + (sx + 0.5) / kSub;
          const double py = y - 0.5 + (sy + 0.5) / kSub;
          const Vec3 d = R_wc * Vec3((px - K.cx) / K.fx, (py - K.cy) / K.fy, 1.0);
          const auto hit = CastRay(scene, eye, d);
          if (!hit) {
            sum += background;
            continue;
          }
          const Face& f = scene.faces[hit->face];
          std::uint8_t shade = f.shade;
          if (!f.stripes.empty()) {
            const Vec3 rel = eye + hit->t * d - f.origin;
            const double v = rel.dot(f.edge_v) / f.edge_v.squaredNorm();
            for (const auto& [lo, hi] : f.stripes) {
              if (v >= lo && v <= hi) shade = f.stripe_shade;
            }
          }
          sum += shade;
        }
      }
      image.at(x, y) = static_cast<std::uint8_t>(std::lround(sum / (kSub * kSub)));
    }
  });
  return image;
}

GrayImage RenderWireframe(const std::vector<SceneSegment>& segments, const CameraIntrinsics& K, const Pose& pose,
                          double thickness) {
  K.Validate();
  GrayImage image(K.width, K.height, 0);
  constexpr double kNear = 0.1;
  for (const auto& s : segments) {
    Vec3 a = pose.Apply(s.start);
    Vec3 b = pose.Apply(s.end);
    if (a.z() < kNear && b.z() < kNear) continue;
    if (a.z() < kNear) a = a + (b - a) * ((kNear - a.z()) / (b.z() - a.z()));
    if (b.z() < kNear) b = b + (a - b) * ((kNear - b.z()) / (a.z() - b.z()));
    const Vec2 p(K.fx * a.x() / a.z() + K.cx, K.fy * a.y() / a.z() + K.cy);
    const Vec2 q(K.fx * b.x() / b.z() + K.cx, K.fy * b.y() / b.z() + K.cy);
    const double r = 0.5 * thickness;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(p.x(), q.x()) - r)));
    const int x1 = std::min(K.width - 1, static_cast<int>(std::ceil(std::max(p.x(), q.x()) + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(p.y(), q.y()) - r)));
    const int y1 = std::min(K.height - 1, static_cast<int>(std::ceil(std::max(p.y(), q.y()) + r)));
    const Vec2 dir = q - p;
    const double len2 = dir.squaredNorm();
    // Coverage from 4x4 subsamples per pixel.
    constexpr int kSub = 4;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int covered = 0;
        for (int sy = 0; sy < kSub; ++sy) {
          for (int sx = 0; sx < kSub; ++sx) {
            const Vec2 c(x - 0.5 + (sx + 0.5) / kSub, y - 0.5 + (sy + 0.5) / kSub);
            const double t = len2 > 0 ? std::clamp((c - p).dot(dir) / len2, 0.0, 1.0) : 0.0;
            covered += (c - (p + t * dir)).norm() <= r;
          }
        }
        const int value = (255 * covered + kSub * kSub / 2) / (kSub * kSub);
        image.at(x, y) = static_cast<std::uint8_t>(std::max<int>(image.at(x, y), value));
      }
    }
  }
  return image;
}

Observations SimulateObservations(const Scene& scene, const Pose& pose, const CameraIntrinsics& K, double pixel_sigma,
                                  std::uint64_t seed, const ObservationOptions& options) {
  K.Validate();
  if (!(pixel_sigma >= 0)) Throw(ErrorCode::kInvalidArgument, "pixel_sigma must be non-negative");
  if (options.occlusion_samples < 2) Throw(ErrorCode::kInvalidArgument, "need at least 2 occlusion samples");
  const Vec3 eye = pose.Center();
  const double W = K.width - 1;
  const double H = K.height - 1;
  // Frustum as half-spaces g(X_c) >= 0, linear in the camera-frame point.
  auto planes = [&](const Vec3& X) {
    return std::array<double, 5>{X.z() - options.near, K.fx * X.x() + K.cx * X.z(),
                                 (W - K.cx) * X.z() - K.fx * X.x(), K.fy * X.y() + K.cy * X.z(),
                                 (H - K.cy) * X.z() - K.fy * X.y()};
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto jitter = [&](const Vec2& x) {
    if (pixel_sigma == 0) return x;
    const double dx = noise(rng);
    const double dy = noise(rng);
    return Vec2(x.x() + pixel_sigma * dx, x.y() + pixel_sigma * dy);
  };

  Observations out;
  for (const auto& s : scene.segments) {
    bool facing = s.faces[0] < 0 && s.faces[1] < 0;
    for (int f : s.faces) {
      if (f >= 0 && FrontFacing(scene.faces[f], eye)) facing = true;
    }
    if (!facing) continue;
    const Vec3 a = pose.Apply(s.start);
    const Vec3 b = pose.Apply(s.end);
    const auto ga = planes(a);
    const auto gb = planes(b);
    double t0 = 0.0;
    double t1 = 1.0;
    for (std::size_t i = 0; i < ga.size() && t0 <= t1; ++i) {
      if (ga[i] < 0 && gb[i] < 0) {
        t0 = 2.0;
      } else if (ga[i] < 0) {
        t0 = std::max(t0, ga[i] / (ga[i] - gb[i]));
      } else if (gb[i] < 0) {
        t1 = std::min(t1, ga[i] / (ga[i] - gb[i]));
      }
    }
    if (!(t0 < t1)) continue;

    const int n = options.occlusion_samples;
    int best_lo = -1;
    int best_len = 0;
    for (int i = 0, run = 0; i < n; ++i) {
      const double t = t0 + (t1 - t0) * i / (n - 1);
      const bool visible = !Occluded(scene, eye, s.start + t * (s.end - s.start));
      run = visible ? run + 1 : 0;
      if (run > best_len) {
        best_len = run;
        best_lo = i - run + 1;
      }
    }
    if (best_len < 2) continue;
    const double ta = t0 + (t1 - t0) * best_lo / (n - 1);
    const double tb = t0 + (t1 - t0) * (best_lo + best_len - 1) / (n - 1);
    const Vec3 Xa = s.start + ta * (s.end - s.start);
    const Vec3 Xb = s.start + tb * (s.end - s.start);
    const Vec2 pa = ProjectPoint(K, pose, Xa);
    const Vec2 pb = ProjectPoint(K, pose, Xb);
    if ((pb - pa).norm() < options.min_segment_pixels) continue;
    SegmentObservation obs;
    obs.gt_id = s.id;
    obs.segment = Segment2D(jitter(pa), jitter(pb));
    obs.camera_start = pose.Apply(Xa);
    obs.camera_end = pose.Apply(Xb);
    out.segments.push_back(obs);
  }

  for (const auto& p : scene.points) {
    if (p.face >= 0 && !FrontFacing(scene.faces[p.face], eye)) continue;
    const Vec3 Xc = pose.Apply(p.position);
    if (Xc.z() < options.near) continue;
    const Vec2 px = ProjectPoint(K, pose, p.position);
    if (!K.Contains(px)) continue;
    if (Occluded(scene, eye, p.position)) continue;
    out.points.push_back(PointObservationGT{p.id, jitter(px), Xc.z()});
  }
  return out;
}

void NoiseSpec::Validate() const {
  if (!(sigma_T >= 0) || !(sigma_R >= 0) || !(pixel_sigma >= 0) || !(lidar_sigma >= 0)) {
    Throw(ErrorCode::kInvalidArgument, "noise standard deviations must be non-negative");
  }
}

std::vector<Pose> PerturbTrajectory(const std::vector<Pose>& poses, const NoiseSpec& noise) {
  noise.Validate();
  if (noise.sigma_T == 0 && noise.sigma_R == 0) return poses;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Pose> out;
  out.reserve(poses.size());
  for (const auto& P : poses) {
    const Vec3 dc(normal(rng), normal(rng), normal(rng));
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    const double angle = noise.sigma_R * normal(rng);
    axis.normalize();
    const Mat3 R_wc = ExpSO3(angle * axis) * P.R().transpose();
    out.push_back(Pose::FromCenter(R_wc, P.Center() + noise.sigma_T * dc));
  }
  return out;
}

std::vector<Vec3> SampleSceneSurface(const Scene& scene, double spacing) {
  if (!(spacing > 0)) Throw(ErrorCode::kInvalidArgument, "spacing must be positive");
  std::vector<Vec3> out;
  for (const auto& f : scene.faces) {
    const int nu = std::max(1, static_cast<int>(std::ceil(f.edge_u.norm() / spacing)));
    const int nv = std::max(1, static_cast<int>(std::ceil(f.edge_v.norm() / spacing)));
    for (int i = 0; i <= nu; ++i) {
      for (int j = 0; j <= nv; ++j) out.push_back(f.At(static_cast<double>(i) / nu, static_cast<double>(j) / nv));
    }
  }
  return out;
}

Segment3D ToWorldSegment(const SegmentObservation& obs, const Pose& estimated_pose, int view_id) {
  const Pose to_world = estimated_pose.Inverse();
  Segment3D s(to_world.Apply(obs.camera_start), to_world.Apply(obs.camera_end), view_id);
  s.seg2d = obs.segment;
  return s;
}

}  // namespace linesfm::synthetic
