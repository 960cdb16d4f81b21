#pragma once

#include <cstdint>
#include <vector>

#include "linesfm/association.hpp"
#include "linesfm/line_ba.hpp"
#include "linesfm/matching.hpp"
#include "linesfm/synthetic.hpp"

// In-memory composition of the stages, shared by the CLI stages and tests.
namespace linesfm::chain {

struct SyntheticSetup {
  int boxes = 4;
  int num_points = 40;
  bool ground_plane = true;
  int views = 10;
  double orbit_radius = 8.0;
  double orbit_height = 1.6;
  double orbit_arc = 2.0;  // radians
  Vec3 look_at = Vec3(0.0, 0.0, 0.8);
  CameraIntrinsics K{500.0, 500.0, 319.5, 239.5, 640, 480};
  synthetic::NoiseSpec noise;
  std::uint64_t scene_seed = 0;
};

struct SyntheticDataset {
  synthetic::Scene scene;
  CameraIntrinsics K;
  std::vector<Pose> gt_poses;
  std::vector<Pose> init_poses;
  std::vector<synthetic::Observations> observations;
};

// Observation noise uses noise.seed; the scene uses scene_seed.
SyntheticDataset MakeSyntheticDataset(const SyntheticSetup& setup);

// Detector bypass: every observed segment placed in the world with the
// initial pose of its view.
std::vector<std::vector<Segment3D>> BypassSegments(const SyntheticDataset& data);

enum class PointInit { kLidarDepth, kTriangulate };

struct PointTrack {
  int id = -1;
  std::vector<PointObservation> observations;  // sorted by view
  double first_depth = 0.0;                    // measured depth in the first observing view
};

// Tracks keyed by ground-truth feature id, in id order.
std::vector<PointTrack> PointTracks(const std::vector<synthetic::Observations>& observations);

// Tracks with fewer than two observations are skipped.
std::vector<PointLandmark> PointsFromTracks(const std::vector<PointTrack>& tracks, const CameraIntrinsics& K,
                                            const std::vector<Pose>& poses, PointInit mode = PointInit::kLidarDepth);

// Point tracks from ground-truth feature ids; features seen in fewer than two
// views are skipped. kLidarDepth back-projects the first observation with its
// measured depth, kTriangulate runs DLT over all observations.
std::vector<PointLandmark> InitialPoints(const SyntheticDataset& data, const std::vector<Pose>& poses,
                                         PointInit mode = PointInit::kLidarDepth);

struct ChainOptions {
  MatchThresholds thresholds;
  SolverConfig solver;
  double lambda_R = 1.0;
  double lambda_L = 1.0;
  // Extra match/associate/optimize rounds. Each round re-places the segments
  // with the poses refined by the previous one and uses `refine_thresholds`.
  int reassociation_rounds = 0;
  MatchThresholds refine_thresholds;
  ClusterOptions clustering;
  // After each optimization, rescale about the first gauge camera so that
  // reconstructed line depths agree with the LIDAR segments (median ratio).
  bool lidar_scale_gauge = true;
};

struct ChainResult {
  std::vector<std::vector<Segment3D>> segments;  // as placed in the last round
  std::vector<PairwiseMatch> matches;
  std::vector<LineCluster> clusters;  // lines set where the cluster is non-degenerate
  BAProblem initial;
  OptimizeResult optimized;
};

// Moves world-frame segments from the frames of `from` to those of `to`
// (segments[v] is rigidly attached to view v).
std::vector<std::vector<Segment3D>> ReplaceSegments(const std::vector<std::vector<Segment3D>>& segments,
                                                    const std::vector<Pose>& from, const std::vector<Pose>& to);

// Median ratio between LIDAR ranges of segment midpoints and the ranges of
// the optimized lines along the same rays. `segments` are world-frame
// placements made with `placement` poses. Returns 1 without usable pairs.
double LidarScaleRatio(const BAProblem& optimized, const std::vector<std::vector<Segment3D>>& segments,
                       const std::vector<Pose>& placement, const std::vector<LineCluster>& clusters);

// Every segment appears as a graph node, matched or not.
std::vector<LineCluster> AssociateSegments(const std::vector<PairwiseMatch>& matches,
                                           const std::vector<std::vector<Segment3D>>& segments,
                                           const ClusterOptions& options = {});

BAProblem AssembleProblem(const std::vector<Pose>& poses, const CameraIntrinsics& K,
                          const std::vector<LineCluster>& clusters, const std::vector<std::vector<Segment3D>>& segments,
                          const std::vector<PointLandmark>& points, double lambda_R, double lambda_L);

// Match, associate and optimize, repeated for the re-association rounds.
// When `first_clusters` is given, round 0 uses it instead of matching.
ChainResult RunLineChain(const std::vector<std::vector<Segment3D>>& segments, const CameraIntrinsics& K,
                         const std::vector<Pose>& init_poses, const std::vector<PointLandmark>& points,
                         const ChainOptions& options, const std::vector<LineCluster>* first_clusters = nullptr);

}  // namespace linesfm::chain
