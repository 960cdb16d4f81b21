#pragma once

#include <cstdint>
#include <vector>

#include "linesfm/geometry.hpp"
#include "linesfm/image.hpp"

namespace linesfm {

struct LidarScan {
  std::vector<Vec3> points;  // sensor frame, meters
  std::vector<int> rings;    // per-point scanline index, azimuth-ordered within a ring
  int num_rings = 0;
  int pose_id = -1;

  void Validate() const;
};

struct EdgePoint {
  Vec3 position = Vec3::Zero();
  double smoothness = 0.0;
};

struct DetectionConfig {
  int smoothness_window = 5;
  // The score is range-normalized, so a 90 degree corner scores about twice
  // the ring's angular step.
  double smoothness_threshold = 0.003;
  // Keep only points whose score is maximal within their window.
  bool non_max_suppression = true;
  // Range jump between consecutive ring points that marks an occlusion boundary.
  double discontinuity_jump = 0.5;
  double pixel_radius = 4.0;
  int ransac_iters = 200;
  double ransac_inlier_dist = 0.05;
  int min_inliers = 6;
  double reproj_angle_tol = 0.035;
  double reproj_dist_tol = 3.0;
  double merge_angle_tol = 0.017;
  double merge_line_dist = 0.05;
  std::uint64_t rng_seed = 0;

  void Validate() const;
};

struct LsdConfig {
  double angle_tolerance_deg = 22.5;
  double gradient_quantization = 2.0;
  double min_length = 20.0;
  double max_width = 3.0;
  int min_region_size = 10;
};

struct RansacLineResult {
  PluckerLine line;
  std::vector<int> inliers;
};

// Region-growing line segment detector on 8-bit grayscale images.
std::vector<Segment2D> DetectSegments2D(const GrayImage& image, const LsdConfig& cfg = {});

// Per-ring smoothness score for every point whose window fits in its ring
// (NaN for points too close to the ring ends).
std::vector<double> ComputeSmoothness(const LidarScan& scan, int window);

std::vector<EdgePoint> ExtractEdgePoints(const LidarScan& scan, const DetectionConfig& cfg);

// Edge points must be in the world frame.
std::vector<EdgePoint> AssociateEdgesToSegment(const Segment2D& seg, const std::vector<EdgePoint>& edges,
                                               const CameraIntrinsics& K, const Pose& P,
                                               const DetectionConfig& cfg);

RansacLineResult FitLineRansac(const std::vector<Vec3>& points, const DetectionConfig& cfg);

bool ValidateReprojection(const PluckerLine& L, const Segment2D& seg, const CameraIntrinsics& K,
                          const Pose& P, const DetectionConfig& cfg);

// Full per-view detector. `lidar_to_camera` maps scan points into the camera
// frame; P maps world to camera. Output segments are in the world frame.
std::vector<Segment3D> BuildViewSegments(const GrayImage& image, const LidarScan& scan,
                                         const CameraIntrinsics& K, const Pose& P,
                                         const DetectionConfig& cfg, int view_id,
                                         const Pose& lidar_to_camera = Pose::Identity(),
                                         const LsdConfig& lsd = {});

// Same pipeline with externally supplied 2D segments (detector bypass).
std::vector<Segment3D> BuildViewSegmentsFrom2D(const std::vector<Segment2D>& segments2d,
                                               const LidarScan& scan, const CameraIntrinsics& K,
                                               const Pose& P, const DetectionConfig& cfg, int view_id,
                                               const Pose& lidar_to_camera = Pose::Identity());

std::vector<Segment3D> MergeCollinearSegments(const std::vector<Segment3D>& segments,
                                              const DetectionConfig& cfg);

}  // namespace linesfm
