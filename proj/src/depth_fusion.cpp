#include "linesfm/depth_fusion.hpp"

#include <cmath>

namespace linesfm {

VoxelGrid::Key VoxelGrid::KeyOf(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

std::size_t VoxelGrid::TotalCount() const {
  std::size_t total = 0;
  for (const auto& [key, v] : voxels) total += static_cast<std::size_t>(v.count);
  return total;
}

VoxelGrid RegisterAndDownsample(const std::vector<LidarScan>& scans, const std::vector<Pose>& poses, double voxel_size,
                                const Pose& lidar_to_camera) {
  if (!(voxel_size > 0)) Throw(ErrorCode::kInvalidArgument, "voxel size must be positive");
  VoxelGrid grid;
  grid.voxel_size = voxel_size;

  // Per-scan shards merged with commutative sums, so the result does not
  // depend on scheduling.
  std::vector<std::map<VoxelGrid::Key, std::pair<Vec3, int>>> shards(scans.size());
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const int pose_index = scans[i].pose_id >= 0 ? scans[i].pose_id : static_cast<int>(i);
    if (pose_index >= static_cast<int>(poses.size())) {
      Throw(ErrorCode::kMissingPose, "scan " + std::to_string(i) + " has no pose");
    }
  }
  ParallelFor(scans.size(), [&](std::size_t i) {
    const int pose_index = scans[i].pose_id >= 0 ? scans[i].pose_id : static_cast<int>(i);
    const Pose sensor_to_world = poses[pose_index].Inverse() * lidar_to_camera;
    for (const Vec3& p : scans[i].points) {
      const Vec3 w = sensor_to_world.Apply(p);
      auto& cell = shards[i][grid.KeyOf(w)];
      if (cell.second == 0) cell.first.setZero();
      cell.first += w;
      ++cell.second;
    }
  });
  std::map<VoxelGrid::Key, std::pair<Vec3, int>> merged;
  for (const auto& shard : shards) {
    for (const auto& [key, cell] : shard) {
      auto& m = merged[key];
      if (m.second == 0) m.first.setZero();
      m.first += cell.first;
      m.second += cell.second;
    }
  }
  for (const auto& [key, cell] : merged) {
    grid.voxels[key] = Voxel{cell.first / cell.second, cell.second};
  }
  return grid;
}

DepthMap InitDepthMap(const VoxelGrid& grid, const std::vector<FeatureDepth>& features, const CameraIntrinsics& K,
                      const Pose& P) {
  DepthMap dm(K.width, K.height);
  for (const auto& [key, voxel] : grid.voxels) {
    const Vec3 Xc = P.Apply(voxel.point);
    if (!(Xc.z() > kDefaultMinDepth)) continue;
    const int x = static_cast<int>(std::lround(K.fx * Xc.x() / Xc.z() + K.cx));
    const int y = static_cast<int>(std::lround(K.fy * Xc.y() / Xc.z() + K.cy));
    if (!dm.depth.InBounds(x, y)) continue;
    const float current = dm.depth.at(x, y);
    if (current == 0.0f || Xc.z() < current) dm.Set(x, y, Xc.z(), DepthSource::kLidar);
  }
  for (const auto& f : features) {
    if (!(f.depth > 0)) Throw(ErrorCode::kInvalidArgument, "feature depth must be positive");
    const int x = static_cast<int>(std::lround(f.pixel.x()));
    const int y = static_cast<int>(std::lround(f.pixel.y()));
    if (!dm.depth.InBounds(x, y)) continue;
    dm.Set(x, y, f.depth, DepthSource::kFeature);
  }
  return dm;
}

DepthMap OcclusionFilter(const DepthMap& dm, int radius, double rel_tol) {
  DepthMap out = dm;
  for (int y = 0; y < dm.height(); ++y) {
    for (int x = 0; x < dm.width(); ++x) {
      if (dm.SourceAt(x, y) != DepthSource::kLidar) continue;
      double sum = 0.0;
      int n = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx;
          const int ny = y + dy;
          if (!dm.depth.InBounds(nx, ny) || dm.SourceAt(nx, ny) == DepthSource::kEmpty) continue;
          sum += dm.depth.at(nx, ny);
          ++n;
        }
      }
      if (n == 0) continue;
      const double mean = sum / n;
      if (std::abs(dm.depth.at(x, y) - mean) / mean > rel_tol) out.Clear(x, y);
    }
  }
  return out;
}

PointCloud FuseDepthMaps(const std::vector<DepthMap>& maps, const CameraIntrinsics& K, const std::vector<Pose>& poses,
                         const FusionConfig& cfg) {
  if (maps.size() > poses.size()) Throw(ErrorCode::kMissingPose, "one pose per depth map required");
  std::vector<std::vector<Vec3>> kept(maps.size());
  ParallelFor(maps.size(), [&](std::size_t i) {
    const Pose to_world = poses[i].Inverse();
    const DepthMap& dm = maps[i];
    for (int y = 0; y < dm.height(); ++y) {
      for (int x = 0; x < dm.width(); ++x) {
        const double z = dm.depth.at(x, y);
        if (!(z > 0)) continue;
        const Vec3 Xc((x - K.cx) / K.fx * z, (y - K.cy) / K.fy * z, z);
        const Vec3 X = to_world.Apply(Xc);
        int consistent = 1;
        for (std::size_t j = 0; j < maps.size() && consistent < cfg.min_consistent; ++j) {
          if (j == i) continue;
          const Vec3 Xj = poses[j].Apply(X);
          if (!(Xj.z() > kDefaultMinDepth)) continue;
          const int u = static_cast<int>(std::lround(K.fx * Xj.x() / Xj.z() + K.cx));
          const int v = static_cast<int>(std::lround(K.fy * Xj.y() / Xj.z() + K.cy));
          if (!maps[j].depth.InBounds(u, v)) continue;
          const double dj = maps[j].depth.at(u, v);
          if (dj > 0 && std::abs(Xj.z() - dj) / dj <= cfg.rel_tol) ++consistent;
        }
        if (consistent >= cfg.min_consistent) kept[i].push_back(X);
      }
    }
  });

  PointCloud cloud;
  if (cfg.merge_voxel <= 0) {
    for (const auto& v : kept) cloud.points.insert(cloud.points.end(), v.begin(), v.end());
    cloud.counts.assign(cloud.points.size(), 1);
    return cloud;
  }
  VoxelGrid merge;
  merge.voxel_size = cfg.merge_voxel;
  std::map<VoxelGrid::Key, std::pair<Vec3, int>> cells;
  for (const auto& v : kept) {
    for (const Vec3& X : v) {
      auto& c = cells[merge.KeyOf(X)];
      if (c.second == 0) c.first.setZero();
      c.first += X;
      ++c.second;
    }
  }
  for (const auto& [key, c] : cells) {
    cloud.points.push_back(c.first / c.second);
    cloud.counts.push_back(c.second);
  }
  return cloud;
}

std::vector<Vec3> SampleSegmentVertices(const std::vector<Segment3D>& segments, double spacing) {
  if (!(spacing > 0)) Throw(ErrorCode::kInvalidArgument, "sampling spacing must be positive");
  std::vector<Vec3> out;
  for (const auto& s : segments) {
    const double length = s.Length();
    const int intervals = std::max(1, static_cast<int>(std::ceil(length / spacing - 1e-9)));
    for (int k = 0; k <= intervals; ++k) {
      out.push_back(s.start + (s.end - s.start) * (static_cast<double>(k) / intervals));
    }
  }
  return out;
}

}  // namespace linesfm
