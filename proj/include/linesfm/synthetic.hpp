#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "linesfm/detection.hpp"
#include "linesfm/geometry.hpp"
#include "linesfm/image.hpp"

namespace linesfm::synthetic {

// Rectangular face spanned by origin + u*edge_u + v*edge_v, u, v in [0, 1].
// `normal` points to the visible side.
struct Face {
  Vec3 origin = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
  int id = -1;
  std::uint8_t shade = 128;
  // Painted bands along v (texture only, no geometry).
  std::vector<std::pair<double, double>> stripes;
  std::uint8_t stripe_shade = 255;

  double Area() const { return edge_u.cross(edge_v).norm(); }
  Vec3 At(double u, double v) const { return origin + u * edge_u + v * edge_v; }
};

struct SceneSegment {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  int id = -1;
  std::array<int, 2> faces{-1, -1};
};

struct ScenePoint {
  Vec3 position = Vec3::Zero();
  int id = -1;
  int face = -1;
};

struct Scene {
  std::vector<SceneSegment> segments;
  std::vector<Face> faces;
  std::vector<ScenePoint> points;
};

struct BoxSpec {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  double yaw = 0.0;   // radians about +z through the box center
  bool room = false;  // faces visible from inside
};

struct SceneSpec {
  std::vector<BoxSpec> boxes;
  bool ground_plane = false;
  double ground_half_extent = 15.0;
  int num_points = 0;
};

// Box layout used by the tests and the synth stage: `count` boxes on a ring
// around the origin, standing on an optional ground plane.
SceneSpec CourtyardSpec(int count, int num_points, bool ground_plane = true);

Scene GenerateScene(const SceneSpec& spec, std::uint64_t seed);

// Cameras on a horizontal arc around `center`, all looking at it.
std::vector<Pose> OrbitTrajectory(int views, const Vec3& center, double radius, double height, double arc_rad,
                                  double start_angle = 0.0);

struct Hit {
  double t = 0.0;
  int face = -1;
};
std::optional<Hit> CastRay(const Scene& scene, const Vec3& origin, const Vec3& direction, double t_min = 1e-9);

struct LidarSpec {
  int rings = 64;
  int points_per_ring = 1024;
  double fov_up = 0.3927;     // radians
  double fov_down = -0.3927;  // radians
  double max_range = 100.0;
};

// Scan in the sensor frame, which coincides with the camera frame of `pose`
// (x right, y down, z forward; rings sweep azimuth about the y axis).
LidarScan SimulateLidar(const Scene& scene, const Pose& pose, const LidarSpec& spec, double lidar_sigma,
                        std::uint64_t seed);

// Unit ray direction (camera frame) of ring r, azimuth sample k.
Vec3 LidarRayDirection(const LidarSpec& spec, int ring, int k);

GrayImage RenderImage(const Scene& scene, const CameraIntrinsics& K, const Pose& pose, std::uint8_t background = 0);
GrayImage RenderWireframe(const std::vector<SceneSegment>& segments, const CameraIntrinsics& K, const Pose& pose,
                          double thickness = 1.0);

struct SegmentObservation {
  int gt_id = -1;
  Segment2D segment;       // possibly noisy pixel endpoints
  Vec3 camera_start;       // visible 3D portion, camera frame
  Vec3 camera_end;
};

struct PointObservationGT {
  int gt_id = -1;
  Vec2 pixel = Vec2::Zero();
  double depth = 0.0;  // camera-frame z
};

struct Observations {
  std::vector<SegmentObservation> segments;
  std::vector<PointObservationGT> points;
};

struct ObservationOptions {
  double min_segment_pixels = 20.0;
  double near = 0.1;
  int occlusion_samples = 21;
};

Observations SimulateObservations(const Scene& scene, const Pose& pose, const CameraIntrinsics& K, double pixel_sigma,
                                  std::uint64_t seed, const ObservationOptions& options = {});

struct NoiseSpec {
  double sigma_T = 0.0;  // meters, per axis on the camera center
  double sigma_R = 0.0;  // radians, rotation angle
  double pixel_sigma = 0.0;
  double lidar_sigma = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

std::vector<Pose> PerturbTrajectory(const std::vector<Pose>& poses, const NoiseSpec& noise);

// Regular samples over every face, for reconstruction ground truth.
std::vector<Vec3> SampleSceneSurface(const Scene& scene, double spacing);

// Segment3D in the world frame from a camera-frame observation placed with
// the (possibly noisy) estimate of that view's pose.
Segment3D ToWorldSegment(const SegmentObservation& obs, const Pose& estimated_pose, int view_id);

}  // namespace linesfm::synthetic
