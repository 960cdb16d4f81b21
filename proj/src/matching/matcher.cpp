#include <algorithm>
#include <cmath>
#include <limits>

#include "linesfm/matching.hpp"

namespace linesfm {

void MatchThresholds::Validate() const {
  if (!(t_theta > 0 && t_dP > 0 && t_dO > 0 && t_LBD > 0)) {
    Throw(ErrorCode::kInvalidArgument, "match thresholds must be strictly positive");
  }
  if (alpha_theta < 0 || alpha_dist < 0 || alpha_ortho < 0 || alpha_lbd < 0 || fov_margin < 0) {
    Throw(ErrorCode::kInvalidArgument, "match weights must be non-negative");
  }
}

namespace {

const Pose& PoseOf(const std::vector<Pose>& poses, int view) {
  if (view < 0 || view >= static_cast<int>(poses.size())) {
    Throw(ErrorCode::kMissingPose, "no pose for view " + std::to_string(view));
  }
  return poses[view];
}

std::pair<Vec2, Vec2> ProjectSegment(const Segment3D& l, int view, const CameraIntrinsics& K,
                                     const std::vector<Pose>& poses) {
  const Pose& P = PoseOf(poses, view);
  return {ProjectPoint(K, P, l.start), ProjectPoint(K, P, l.end)};
}

}  // namespace

double Angle2D(const Segment3D& l, const Segment3D& l2, int view, const CameraIntrinsics& K,
               const std::vector<Pose>& poses) {
  const auto [a0, a1] = ProjectSegment(l, view, K, poses);
  const auto [b0, b1] = ProjectSegment(l2, view, K, poses);
  const Vec2 da = a1 - a0;
  const Vec2 db = b1 - b0;
  if (da.norm() < 1e-12 || db.norm() < 1e-12) return std::numbers::pi / 2.0;
  const double c = std::min(1.0, std::abs(da.normalized().dot(db.normalized())));
  return std::acos(c);
}

double DistPixel(const Segment3D& l, const Segment3D& l2, int view, const CameraIntrinsics& K,
                 const std::vector<Pose>& poses) {
  const auto [a0, a1] = ProjectSegment(l, view, K, poses);
  const auto [b0, b1] = ProjectSegment(l2, view, K, poses);
  const double straight = 0.5 * ((a0 - b0).norm() + (a1 - b1).norm());
  const double swapped = 0.5 * ((a0 - b1).norm() + (a1 - b0).norm());
  return std::min(straight, swapped);
}

double DistOrtho(const Segment3D& l, const Segment3D& l2) {
  const Vec3 v = l.Midpoint() - l2.Midpoint();
  const Vec3 d = l.Direction();
  return (v - d * d.dot(v)).norm();
}

double MatchScore(const MatchComponents& c, const MatchThresholds& t) {
  return t.alpha_theta * c.angle / t.t_theta + t.alpha_dist * c.pixel / t.t_dP + t.alpha_ortho * c.ortho / t.t_dO +
         t.alpha_lbd * c.descriptor / t.t_LBD;
}

bool PassesThresholds(const MatchComponents& c, const MatchThresholds& t) {
  return c.angle < t.t_theta && c.pixel < t.t_dP && c.ortho < t.t_dO && c.descriptor < t.t_LBD;
}

bool InFieldOfView(const Segment3D& l, int view, const CameraIntrinsics& K, const std::vector<Pose>& poses,
                   double margin_fraction) {
  const Pose& P = PoseOf(poses, view);
  for (const Vec3& X : {l.start, l.end}) {
    const Vec3 Xc = P.Apply(X);
    if (!(Xc.z() > kDefaultMinDepth)) return false;
    const Vec2 px(K.fx * Xc.x() / Xc.z() + K.cx, K.fy * Xc.y() / Xc.z() + K.cy);
    if (!K.Contains(px, margin_fraction)) return false;
  }
  return true;
}

std::vector<PairwiseMatch> FindMatches(int view, int index, const std::vector<std::vector<Segment3D>>& all_views,
                                       const MatchThresholds& thresholds, const CameraIntrinsics& K,
                                       const std::vector<Pose>& poses) {
  const Segment3D& l = all_views.at(view).at(index);
  std::vector<PairwiseMatch> matches;
  for (int j = 0; j < static_cast<int>(all_views.size()); ++j) {
    if (j == view || all_views[j].empty()) continue;
    if (!InFieldOfView(l, j, K, poses, thresholds.fov_margin)) continue;
    double best_score = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int k = 0; k < static_cast<int>(all_views[j].size()); ++k) {
      const Segment3D& cand = all_views[j][k];
      MatchComponents c;
      try {
        c.angle = Angle2D(l, cand, j, K, poses);
        c.pixel = DistPixel(l, cand, j, K, poses);
      } catch (const Error&) {
        continue;
      }
      c.ortho = DistOrtho(l, cand);
      if (l.descriptor && cand.descriptor) c.descriptor = DescriptorDistance(*l.descriptor, *cand.descriptor);
      if (!PassesThresholds(c, thresholds)) continue;
      const double s = MatchScore(c, thresholds);
      if (s < best_score) {
        best_score = s;
        best = k;
      }
    }
    if (best >= 0) matches.push_back(PairwiseMatch{{view, index}, {j, best}, best_score});
  }
  return matches;
}

std::vector<PairwiseMatch> FindAllMatches(const std::vector<std::vector<Segment3D>>& all_views,
                                          const MatchThresholds& thresholds, const CameraIntrinsics& K,
                                          const std::vector<Pose>& poses) {
  thresholds.Validate();
  std::vector<SegmentRef> refs;
  for (int v = 0; v < static_cast<int>(all_views.size()); ++v) {
    for (int i = 0; i < static_cast<int>(all_views[v].size()); ++i) refs.push_back({v, i});
  }
  std::vector<std::vector<PairwiseMatch>> per_segment(refs.size());
  ParallelFor(refs.size(), [&](std::size_t r) {
    per_segment[r] = FindMatches(refs[r].view, refs[r].index, all_views, thresholds, K, poses);
  });
  std::vector<PairwiseMatch> out;
  for (auto& m : per_segment) out.insert(out.end(), m.begin(), m.end());
  return out;
}

}  // namespace linesfm
