#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "linesfm/detection.hpp"
#include "linesfm/geometry.hpp"
#include "linesfm/image.hpp"

namespace linesfm {

struct Voxel {
  Vec3 point = Vec3::Zero();  // centroid of the binned points
  int count = 0;
};

struct VoxelGrid {
  using Key = std::array<std::int64_t, 3>;

  double voxel_size = 0.1;
  std::map<Key, Voxel> voxels;

  Key KeyOf(const Vec3& p) const;
  std::size_t TotalCount() const;
};

enum class DepthSource : std::uint8_t { kEmpty = 0, kFeature = 1, kLidar = 2 };

struct DepthMap {
  FloatImage depth;     // meters along the optical axis, 0 = empty
  GrayImage source;     // DepthSource per pixel

  DepthMap() = default;
  DepthMap(int width, int height) : depth(width, height, 0.0f), source(width, height, 0) {}
  int width() const { return depth.width; }
  int height() const { return depth.height; }
  DepthSource SourceAt(int x, int y) const { return static_cast<DepthSource>(source.at(x, y)); }
  void Set(int x, int y, double z, DepthSource s) {
    depth.at(x, y) = static_cast<float>(z);
    source.at(x, y) = static_cast<std::uint8_t>(s);
  }
  void Clear(int x, int y) { Set(x, y, 0.0, DepthSource::kEmpty); }
};

struct FeatureDepth {
  Vec2 pixel = Vec2::Zero();
  double depth = 0.0;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<int> counts;  // optional, parallel to points
};

// Scans are in the sensor frame; scan i uses poses[scan.pose_id] (or poses[i]
// when pose_id < 0).
VoxelGrid RegisterAndDownsample(const std::vector<LidarScan>& scans, const std::vector<Pose>& poses, double voxel_size,
                                const Pose& lidar_to_camera = Pose::Identity());

DepthMap InitDepthMap(const VoxelGrid& grid, const std::vector<FeatureDepth>& features, const CameraIntrinsics& K,
                      const Pose& P);

DepthMap OcclusionFilter(const DepthMap& dm, int radius = 5, double rel_tol = 0.2);

struct FusionConfig {
  int min_consistent = 2;
  double rel_tol = 0.05;
  double merge_voxel = 0.05;  // <= 0 disables duplicate merging
};

PointCloud FuseDepthMaps(const std::vector<DepthMap>& maps, const CameraIntrinsics& K, const std::vector<Pose>& poses,
                         const FusionConfig& cfg = {});

std::vector<Vec3> SampleSegmentVertices(const std::vector<Segment3D>& segments, double spacing = 0.1);

}  // namespace linesfm
