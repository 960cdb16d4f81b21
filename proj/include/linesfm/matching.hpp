#pragma once

#include <compare>
#include <vector>

#include "linesfm/geometry.hpp"
#include "linesfm/image.hpp"

namespace linesfm {

struct SegmentRef {
  int view = -1;
  int index = -1;
  auto operator<=>(const SegmentRef&) const = default;
};

struct MatchThresholds {
  double t_theta = 0.087;  // radians
  double t_dP = 10.0;      // pixels
  double t_dO = 0.15;      // meters
  double t_LBD = 0.5;      // descriptor distance
  // Optional per-component multipliers on the normalized score terms.
  double alpha_theta = 1.0;
  double alpha_dist = 1.0;
  double alpha_ortho = 1.0;
  double alpha_lbd = 1.0;
  // Image bounds inflation for the field-of-view test.
  double fov_margin = 0.1;

  void Validate() const;
};

struct PairwiseMatch {
  SegmentRef a;
  SegmentRef b;
  double score = 0.0;
};

// Band geometry of the descriptor.
inline constexpr int kLbdBands = 9;
inline constexpr int kLbdBandWidth = 7;
inline constexpr int kLbdDims = kLbdBands * 8;

Eigen::VectorXd ComputeLbd(const GrayImage& image, const Segment2D& seg);
double DescriptorDistance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Pairwise similarity components, evaluated in view j. `poses` is indexed by view id.
double Angle2D(const Segment3D& l, const Segment3D& l2, int view, const CameraIntrinsics& K,
               const std::vector<Pose>& poses);
double DistPixel(const Segment3D& l, const Segment3D& l2, int view, const CameraIntrinsics& K,
                 const std::vector<Pose>& poses);
double DistOrtho(const Segment3D& l, const Segment3D& l2);

struct MatchComponents {
  double angle = 0.0;
  double pixel = 0.0;
  double ortho = 0.0;
  double descriptor = 0.0;
};

// Normalized score; NaN-free only for components that pass their thresholds.
double MatchScore(const MatchComponents& c, const MatchThresholds& t);
bool PassesThresholds(const MatchComponents& c, const MatchThresholds& t);

bool InFieldOfView(const Segment3D& l, int view, const CameraIntrinsics& K, const std::vector<Pose>& poses,
                   double margin_fraction);

// Best candidate per other view for segment all_views[view][index]. The
// descriptor term is dropped when either segment has no descriptor.
std::vector<PairwiseMatch> FindMatches(int view, int index, const std::vector<std::vector<Segment3D>>& all_views,
                                       const MatchThresholds& thresholds, const CameraIntrinsics& K,
                                       const std::vector<Pose>& poses);

// FindMatches for every segment; deterministic (view, index) order.
std::vector<PairwiseMatch> FindAllMatches(const std::vector<std::vector<Segment3D>>& all_views,
                                          const MatchThresholds& thresholds, const CameraIntrinsics& K,
                                          const std::vector<Pose>& poses);

}  // namespace linesfm
