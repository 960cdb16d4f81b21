#pragma once

#include <vector>

#include "linesfm/geometry.hpp"

namespace linesfm {

struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 Apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
};

// Least-squares (similarity or rigid) transform mapping src onto dst.
Similarity UmeyamaAlign(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, bool with_scale);

enum class Alignment { kNone, kSim3, kSE3 };

// Mean distance between camera centers after optional alignment of the
// estimate onto the ground truth.
double AvgLocalizationError(const std::vector<Pose>& est, const std::vector<Pose>& gt, Alignment align);

// Applies a similarity to a trajectory of world-to-camera poses.
std::vector<Pose> TransformTrajectory(const std::vector<Pose>& poses, const Similarity& s);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

PrecisionRecall PrecisionRecallFscore(const std::vector<Vec3>& cloud, const std::vector<Vec3>& gt_cloud,
                                      double threshold);

}  // namespace linesfm
