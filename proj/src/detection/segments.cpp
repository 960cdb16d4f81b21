#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "linesfm/detection.hpp"

namespace linesfm {

void LidarScan::Validate() const {
  if (points.size() != rings.size()) Throw(ErrorCode::kInvalidArgument, "scan points/rings size mismatch");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (rings[i] < 0 || rings[i] >= num_rings) Throw(ErrorCode::kInvalidArgument, "ring index out of range");
    if (!points[i].allFinite()) Throw(ErrorCode::kInvalidArgument, "non-finite scan point");
  }
}

void DetectionConfig::Validate() const {
  const bool ok = smoothness_window > 0 && smoothness_threshold > 0 && discontinuity_jump > 0 &&
                  pixel_radius > 0 && ransac_iters > 0 && ransac_inlier_dist > 0 && min_inliers > 0 &&
                  reproj_angle_tol > 0 && reproj_dist_tol > 0 && merge_angle_tol > 0 && merge_line_dist > 0;
  if (!ok) Throw(ErrorCode::kInvalidArgument, "detection thresholds must be positive");
}

namespace {

std::vector<std::vector<int>> GroupByRing(const LidarScan& scan) {
  std::vector<std::vector<int>> rings(static_cast<std::size_t>(std::max(scan.num_rings, 0)));
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    rings.at(static_cast<std::size_t>(scan.rings[i])).push_back(static_cast<int>(i));
  }
  return rings;
}

// Principal direction through the centroid of `points`; sign follows
// (last - first) so the result is independent of eigen-solver sign choices.
PluckerLine FitPrincipalLine(const std::vector<Vec3>& points) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points) scatter += (p - centroid) * (p - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  Vec3 d = es.eigenvectors().col(2);
  if (d.dot(points.back() - points.front()) < 0) d = -d;
  return PluckerLine(d, centroid.cross(d));
}

double AcuteAngle(const Vec3& a, const Vec3& b) {
  const double c = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return std::acos(c);
}

}  // namespace

std::vector<double> ComputeSmoothness(const LidarScan& scan, int window) {
  std::vector<double> smoothness(scan.points.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& ring : GroupByRing(scan)) {
    const int n = static_cast<int>(ring.size());
    for (int k = window; k + window < n; ++k) {
      const Vec3& pi = scan.points[ring[k]];
      Vec3 sum = Vec3::Zero();
      for (int j = k - window; j <= k + window; ++j) {
        if (j != k) sum += scan.points[ring[j]] - pi;
      }
      smoothness[ring[k]] = sum.norm() / (2.0 * window * pi.norm());
    }
  }
  return smoothness;
}

std::vector<EdgePoint> ExtractEdgePoints(const LidarScan& scan, const DetectionConfig& cfg) {
  scan.Validate();
  const int w = cfg.smoothness_window;
  const auto rings = GroupByRing(scan);
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (!rings[r].empty() && static_cast<int>(rings[r].size()) < 2 * w + 1) {
      Throw(ErrorCode::kRingTooShort, "ring " + std::to_string(r) + " has " + std::to_string(rings[r].size()) +
                                          " points, need " + std::to_string(2 * w + 1));
    }
  }
  const std::vector<double> smoothness = ComputeSmoothness(scan, w);
  std::vector<EdgePoint> edges;
  for (const auto& ring : rings) {
    const int n = static_cast<int>(ring.size());
    // Candidates above threshold that are not on the far side of a range
    // jump inside their window.
    std::vector<double> score(n, -1.0);
    for (int k = w; k + w < n; ++k) {
      const double c = smoothness[ring[k]];
      if (!(c > cfg.smoothness_threshold)) continue;
      bool occluded = false;
      for (int j = k - w; j < k + w && !occluded; ++j) {
        const double r0 = scan.points[ring[j]].norm();
        const double r1 = scan.points[ring[j + 1]].norm();
        if (std::abs(r1 - r0) <= cfg.discontinuity_jump) continue;
        occluded = k <= j ? r0 > r1 : r1 > r0;
      }
      if (!occluded) score[k] = c;
    }
    for (int k = w; k + w < n; ++k) {
      if (score[k] < 0) continue;
      bool keep = true;
      if (cfg.non_max_suppression) {
        for (int j = k - w; j <= k + w && keep; ++j) {
          if (j != k) keep = j < k ? score[k] > score[j] : score[k] >= score[j];
        }
      }
      if (keep) edges.push_back(EdgePoint{scan.points[ring[k]], score[k]});
    }
  }
  return edges;
}

std::vector<EdgePoint> AssociateEdgesToSegment(const Segment2D& seg, const std::vector<EdgePoint>& edges,
                                               const CameraIntrinsics& K, const Pose& P,
                                               const DetectionConfig& cfg) {
  std::vector<EdgePoint> out;
  for (const auto& e : edges) {
    const Vec3 Xc = P.Apply(e.position);
    if (!(Xc.z() > kDefaultMinDepth)) continue;
    const Vec2 px(K.fx * Xc.x() / Xc.z() + K.cx, K.fy * Xc.y() / Xc.z() + K.cy);
    if (seg.DistanceTo(px) <= cfg.pixel_radius) out.push_back(e);
  }
  return out;
}

RansacLineResult FitLineRansac(const std::vector<Vec3>& points, const DetectionConfig& cfg) {
  const int n = static_cast<int>(points.size());
  if (n < 2) Throw(ErrorCode::kNotEnoughPoints, "RANSAC line fit needs at least 2 points");
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  std::vector<int> best;
  std::vector<int> current;
  for (int iter = 0; iter < cfg.ransac_iters; ++iter) {
    const int i = pick(rng);
    int j = pick(rng);
    if (i == j) j = (j + 1) % n;
    const Vec3 v = points[j] - points[i];
    if (v.norm() < 1e-12) continue;
    const PluckerLine line = PluckerFromEndpoints(points[i], points[j]);
    current.clear();
    for (int k = 0; k < n; ++k) {
      if (line.Distance(points[k]) < cfg.ransac_inlier_dist) current.push_back(k);
    }
    if (current.size() > best.size()) best.swap(current);
  }
  if (static_cast<int>(best.size()) < cfg.min_inliers || best.size() < 2) {
    Throw(ErrorCode::kNoConsensus, "best model has " + std::to_string(best.size()) + " inliers, need " +
                                       std::to_string(cfg.min_inliers));
  }
  std::vector<Vec3> inlier_points;
  inlier_points.reserve(best.size());
  for (int k : best) inlier_points.push_back(points[k]);
  return RansacLineResult{FitPrincipalLine(inlier_points), best};
}

bool ValidateReprojection(const PluckerLine& L, const Segment2D& seg, const CameraIntrinsics& K,
                          const Pose& P, const DetectionConfig& cfg) {
  Line2D projected;
  try {
    projected = ProjectInfiniteLine(K, P, L);
  } catch (const Error&) {
    return false;
  }
  const Vec2 dir = projected.Direction();
  const double c = std::min(1.0, std::abs(dir.dot(seg.Direction())));
  if (!(std::acos(c) < cfg.reproj_angle_tol)) return false;
  return PointLineDistance2D(seg.start, projected) < cfg.reproj_dist_tol &&
         PointLineDistance2D(seg.end, projected) < cfg.reproj_dist_tol;
}

std::vector<Segment3D> BuildViewSegmentsFrom2D(const std::vector<Segment2D>& segments2d,
                                               const LidarScan& scan, const CameraIntrinsics& K,
                                               const Pose& P, const DetectionConfig& cfg, int view_id,
                                               const Pose& lidar_to_camera) {
  cfg.Validate();
  if (scan.points.empty() || segments2d.empty()) return {};

  // Rings too short for a smoothness window carry no edge information.
  LidarScan usable;
  usable.num_rings = scan.num_rings;
  usable.pose_id = scan.pose_id;
  {
    std::vector<int> counts(static_cast<std::size_t>(scan.num_rings), 0);
    for (int r : scan.rings) ++counts.at(static_cast<std::size_t>(r));
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      if (counts[scan.rings[i]] >= 2 * cfg.smoothness_window + 1) {
        usable.points.push_back(scan.points[i]);
        usable.rings.push_back(scan.rings[i]);
      }
    }
  }
  const Pose camera_to_world = P.Inverse();
  std::vector<EdgePoint> edges = ExtractEdgePoints(usable, cfg);
  for (auto& e : edges) e.position = camera_to_world.Apply(lidar_to_camera.Apply(e.position));

  // Nearest qualifying segment only.
  std::vector<std::vector<Vec3>> support(segments2d.size());
  for (const auto& e : edges) {
    const Vec3 Xc = P.Apply(e.position);
    if (!(Xc.z() > kDefaultMinDepth)) continue;
    const Vec2 px(K.fx * Xc.x() / Xc.z() + K.cx, K.fy * Xc.y() / Xc.z() + K.cy);
    int best = -1;
    double best_dist = cfg.pixel_radius;
    for (std::size_t s = 0; s < segments2d.size(); ++s) {
      const double d = segments2d[s].DistanceTo(px);
      if (d <= best_dist) {
        best_dist = d;
        best = static_cast<int>(s);
      }
    }
    if (best >= 0) support[best].push_back(e.position);
  }

  std::vector<Segment3D> segments;
  for (std::size_t s = 0; s < segments2d.size(); ++s) {
    if (static_cast<int>(support[s].size()) < cfg.min_inliers) continue;
    DetectionConfig local = cfg;
    local.rng_seed = cfg.rng_seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(view_id) * 65537u + s + 1));
    RansacLineResult fit;
    try {
      fit = FitLineRansac(support[s], local);
    } catch (const Error& err) {
      spdlog::debug("view {} segment {}: {}", view_id, s, err.what());
      continue;
    }
    if (!ValidateReprojection(fit.line, segments2d[s], K, P, cfg)) continue;
    const Vec3 p0 = fit.line.ClosestPointToOrigin();
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    for (int k : fit.inliers) {
      const double t = fit.line.d().dot(support[s][k] - p0);
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
    }
    if (!(t_max - t_min > 1e-9)) continue;
    Segment3D seg(p0 + t_min * fit.line.d(), p0 + t_max * fit.line.d(), view_id);
    seg.seg2d = segments2d[s];
    segments.push_back(std::move(seg));
  }

  std::vector<Segment3D> merged = MergeCollinearSegments(segments, cfg);
  std::vector<Segment3D> out;
  for (auto& seg : merged) {
    const PluckerLine line = PluckerFromEndpoints(seg.start, seg.end);
    if (seg.seg2d && !ValidateReprojection(line, *seg.seg2d, K, P, cfg)) continue;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<Segment3D> BuildViewSegments(const GrayImage& image, const LidarScan& scan,
                                         const CameraIntrinsics& K, const Pose& P,
                                         const DetectionConfig& cfg, int view_id,
                                         const Pose& lidar_to_camera, const LsdConfig& lsd) {
  if (scan.points.empty()) return {};
  return BuildViewSegmentsFrom2D(DetectSegments2D(image, lsd), scan, K, P, cfg, view_id, lidar_to_camera);
}

namespace {

bool ShouldMerge(const Segment3D& a, const Segment3D& b, const DetectionConfig& cfg) {
  if (!(AcuteAngle(a.end - a.start, b.end - b.start) < cfg.merge_angle_tol)) return false;
  const PluckerLine la = PluckerFromEndpoints(a.start, a.end);
  const PluckerLine lb = PluckerFromEndpoints(b.start, b.end);
  const double dist = std::max({la.Distance(b.start), la.Distance(b.end), lb.Distance(a.start), lb.Distance(a.end)});
  return dist < cfg.merge_line_dist;
}

Segment3D MergeGroup(const std::vector<const Segment3D*>& group) {
  const Segment3D* ref = *std::max_element(group.begin(), group.end(), [](const Segment3D* x, const Segment3D* y) {
    return x->Length() < y->Length();
  });
  const Vec3 d = ref->Direction();
  double t_min = 0.0;
  double t_max = 0.0;
  for (const Segment3D* s : group) {
    for (const Vec3& p : {s->start, s->end}) {
      const double t = d.dot(p - ref->start);
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
    }
  }
  Segment3D out(ref->start + t_min * d, ref->start + t_max * d, ref->view_id);

  if (ref->seg2d) {
    const Vec2 o = ref->seg2d->start;
    const Vec2 d2 = ref->seg2d->Direction();
    double u_min = 0.0;
    double u_max = 0.0;
    bool any = false;
    for (const Segment3D* s : group) {
      if (!s->seg2d) continue;
      any = true;
      for (const Vec2& p : {s->seg2d->start, s->seg2d->end}) {
        const double u = d2.dot(p - o);
        u_min = std::min(u_min, u);
        u_max = std::max(u_max, u);
      }
    }
    if (any) out.seg2d = Segment2D(o + u_min * d2, o + u_max * d2);
  }
  return out;
}

}  // namespace

std::vector<Segment3D> MergeCollinearSegments(const std::vector<Segment3D>& segments,
                                              const DetectionConfig& cfg) {
  std::vector<Segment3D> current = segments;
  while (true) {
    const std::size_t n = current.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    bool merged_any = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (ShouldMerge(current[i], current[j], cfg)) {
          const std::size_t ri = find(i);
          const std::size_t rj = find(j);
          if (ri != rj) {
            parent[std::max(ri, rj)] = std::min(ri, rj);
            merged_any = true;
          }
        }
      }
    }
    if (!merged_any) return current;

    std::map<std::size_t, std::vector<const Segment3D*>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(&current[i]);
    std::vector<Segment3D> next;
    next.reserve(groups.size());
    for (const auto& [root, members] : groups) {
      next.push_back(members.size() == 1 ? *members.front() : MergeGroup(members));
    }
    current = std::move(next);
  }
}

}  // namespace linesfm
