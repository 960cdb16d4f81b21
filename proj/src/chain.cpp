#include "linesfm/chain.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

namespace linesfm::chain {

namespace {

std::uint64_t ViewSeed(std::uint64_t seed, int view, std::uint64_t salt) {
  std::uint64_t h = seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(view) + 1)) ^ (salt << 32);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

}  // namespace

SyntheticDataset MakeSyntheticDataset(const SyntheticSetup& setup) {
  setup.noise.Validate();
  SyntheticDataset data;
  data.K = setup.K;
  data.scene = synthetic::GenerateScene(synthetic::CourtyardSpec(setup.boxes, setup.num_points, setup.ground_plane),
                                        setup.scene_seed);
  data.gt_poses = synthetic::OrbitTrajectory(setup.views, setup.look_at, setup.orbit_radius, setup.orbit_height,
                                             setup.orbit_arc);
  data.init_poses = synthetic::PerturbTrajectory(data.gt_poses, setup.noise);
  data.observations.resize(data.gt_poses.size());
  ParallelFor(data.gt_poses.size(), [&](std::size_t v) {
    data.observations[v] = synthetic::SimulateObservations(data.scene, data.gt_poses[v], data.K,
                                                           setup.noise.pixel_sigma,
                                                           ViewSeed(setup.noise.seed, static_cast<int>(v), 1));
  });
  return data;
}

std::vector<std::vector<Segment3D>> BypassSegments(const SyntheticDataset& data) {
  std::vector<std::vector<Segment3D>> out(data.observations.size());
  for (std::size_t v = 0; v < data.observations.size(); ++v) {
    for (const auto& obs : data.observations[v].segments) {
      out[v].push_back(synthetic::ToWorldSegment(obs, data.init_poses[v], static_cast<int>(v)));
    }
  }
  return out;
}

std::vector<PointTrack> PointTracks(const std::vector<synthetic::Observations>& observations) {
  std::map<int, PointTrack> tracks;
  for (std::size_t v = 0; v < observations.size(); ++v) {
    for (const auto& p : observations[v].points) {
      PointTrack& t = tracks[p.gt_id];
      if (t.observations.empty()) {
        t.id = p.gt_id;
        t.first_depth = p.depth;
      }
      t.observations.push_back(PointObservation{static_cast<int>(v), p.pixel});
    }
  }
  std::vector<PointTrack> out;
  for (auto& [id, t] : tracks) out.push_back(std::move(t));
  return out;
}

std::vector<PointLandmark> PointsFromTracks(const std::vector<PointTrack>& tracks, const CameraIntrinsics& K,
                                            const std::vector<Pose>& poses, PointInit mode) {
  std::vector<PointLandmark> out;
  for (const auto& t : tracks) {
    if (t.observations.size() < 2) continue;
    PointLandmark X;
    if (mode == PointInit::kTriangulate) {
      X.position = TriangulatePoint(t.observations, K, poses);
    } else {
      const PointObservation& o = t.observations.front();
      const Vec3 ray((o.pixel.x() - K.cx) / K.fx, (o.pixel.y() - K.cy) / K.fy, 1.0);
      X.position = poses.at(o.view).Inverse().Apply(t.first_depth * ray);
    }
    X.observations = t.observations;
    out.push_back(std::move(X));
  }
  return out;
}

std::vector<PointLandmark> InitialPoints(const SyntheticDataset& data, const std::vector<Pose>& poses,
                                         PointInit mode) {
  return PointsFromTracks(PointTracks(data.observations), data.K, poses, mode);
}

std::vector<LineCluster> AssociateSegments(const std::vector<PairwiseMatch>& matches,
                                           const std::vector<std::vector<Segment3D>>& segments,
                                           const ClusterOptions& options) {
  std::vector<SegmentRef> nodes;
  for (std::size_t v = 0; v < segments.size(); ++v) {
    for (std::size_t i = 0; i < segments[v].size(); ++i) nodes.push_back({static_cast<int>(v), static_cast<int>(i)});
  }
  auto clusters = ClearCluster(BuildAssociationGraph(matches, nodes), options);
  for (auto& c : clusters) {
    try {
      c.initial_line = InitLandmarkLine(c, segments);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateCluster) throw;
      spdlog::debug("cluster {} has no stable line: {}", c.id, e.what());
    }
  }
  return clusters;
}

BAProblem AssembleProblem(const std::vector<Pose>& poses, const CameraIntrinsics& K,
                          const std::vector<LineCluster>& clusters, const std::vector<std::vector<Segment3D>>& segments,
                          const std::vector<PointLandmark>& points, double lambda_R, double lambda_L) {
  BAProblem p;
  p.poses = poses;
  p.K = K;
  p.points = points;
  p.lambda_R = lambda_R;
  p.lambda_L = lambda_L;
  std::vector<LineCluster> usable;
  for (const auto& c : clusters) {
    if (c.initial_line && c.observations.size() >= 2) usable.push_back(c);
  }
  AddLineLandmarks(p, usable, segments);
  return p;
}

std::vector<std::vector<Segment3D>> ReplaceSegments(const std::vector<std::vector<Segment3D>>& segments,
                                                    const std::vector<Pose>& from, const std::vector<Pose>& to) {
  auto out = segments;
  for (std::size_t v = 0; v < out.size(); ++v) {
    const Pose M = to.at(v).Inverse() * from.at(v);
    for (auto& s : out[v]) {
      s.start = M.Apply(s.start);
      s.end = M.Apply(s.end);
    }
  }
  return out;
}

double LidarScaleRatio(const BAProblem& optimized, const std::vector<std::vector<Segment3D>>& segments,
                       const std::vector<Pose>& placement, const std::vector<LineCluster>& clusters) {
  std::map<int, const LineCluster*> by_id;
  for (const auto& c : clusters) by_id[c.id] = &c;
  std::vector<double> ratios;
  for (const auto& L : optimized.lines) {
    const auto it = by_id.find(L.cluster_id);
    if (it == by_id.end()) continue;
    const PluckerLine world = OrthonormalToPlucker(L.line);
    for (const auto& ref : it->second->observations) {
      const Segment3D& s = segments.at(ref.view).at(ref.index);
      const Vec3 mid = placement.at(ref.view).Apply(s.Midpoint());  // LIDAR, camera frame
      const double r_lidar = mid.norm();
      if (!(r_lidar > 0)) continue;
      const Vec3 u = mid / r_lidar;
      const PluckerLine Lc = world.Transformed(optimized.poses.at(ref.view));
      // Closest approach between the ray t*u and the line p0 + s*d.
      const Vec3 p0 = Lc.ClosestPointToOrigin();
      const Vec3& d = Lc.d();
      const double b = u.dot(d);
      const double denom = 1.0 - b * b;
      if (denom < 1e-6) continue;
      const double t = (u.dot(p0) - b * d.dot(p0)) / denom;
      if (t > 0) ratios.push_back(r_lidar / t);
    }
  }
  if (ratios.empty()) return 1.0;
  auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2);
  std::nth_element(ratios.begin(), mid, ratios.end());
  return *mid;
}

ChainResult RunLineChain(const std::vector<std::vector<Segment3D>>& segments, const CameraIntrinsics& K,
                         const std::vector<Pose>& init_poses, const std::vector<PointLandmark>& points,
                         const ChainOptions& options, const std::vector<LineCluster>* first_clusters) {
  if (options.reassociation_rounds < 0) Throw(ErrorCode::kInvalidArgument, "reassociation_rounds must be >= 0");
  ChainResult r;
  std::vector<Pose> poses = init_poses;
  std::vector<PointLandmark> current_points = points;
  for (int round = 0; round <= options.reassociation_rounds; ++round) {
    const MatchThresholds& th = round == 0 ? options.thresholds : options.refine_thresholds;
    r.segments = ReplaceSegments(segments, init_poses, poses);
    if (round == 0 && first_clusters) {
      r.matches.clear();
      r.clusters = *first_clusters;
    } else {
      r.matches = FindAllMatches(r.segments, th, K, poses);
      r.clusters = AssociateSegments(r.matches, r.segments, options.clustering);
    }
    r.initial = AssembleProblem(poses, K, r.clusters, r.segments, current_points, options.lambda_R, options.lambda_L);
    r.optimized = Optimize(r.initial, options.solver);
    if (options.lidar_scale_gauge && !r.optimized.problem.lines.empty()) {
      const double scale = LidarScaleRatio(r.optimized.problem, r.segments, poses, r.clusters);
      ScaleAboutCamera(r.optimized.problem, *r.optimized.problem.gauge.begin(), scale);
      spdlog::debug("round {}: LIDAR scale gauge {}", round, scale);
    }
    spdlog::debug("round {}: {} matches, {} lines, cost {} -> {}", round, r.matches.size(), r.initial.lines.size(),
                  r.optimized.report.initial_cost, r.optimized.report.final_cost);
    poses = r.optimized.problem.poses;
    current_points = r.optimized.problem.points;
  }
  return r;
}

}  // namespace linesfm::chain
