#include <cstdio>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

#include "linesfm/evaluation.hpp"
#include "linesfm/pipeline.hpp"

namespace linesfm::pipeline {

namespace {

namespace fs = std::filesystem;
using io::Json;

// Records every file a stage reads and writes, keyed "<root>:<relative path>".
class Manifest {
 public:
  Manifest(Stage stage, const Config& cfg, fs::path dataset, fs::path out)
      : stage_(stage), cfg_(cfg), dataset_(std::move(dataset)), out_(std::move(out)) {}

  void Input(const fs::path& p) { inputs_[Key(p)] = io::Sha256File(p); }
  void Output(const fs::path& p) { outputs_[Key(p)] = io::Sha256File(p); }

  void Write() const {
    Json doc{{"stage", StageName(stage_)},
             {"version", kVersion},
             {"config_hash", cfg_.Hash()},
             {"seed", cfg_.Int("seed")},
             {"inputs", inputs_},
             {"outputs", outputs_}};
    io::WriteJson(out_ / ("manifest_" + StageName(stage_) + ".json"), doc);
  }

 private:
  std::string Key(const fs::path& p) const {
    const auto rel_out = p.lexically_relative(out_);
    if (!rel_out.empty() && *rel_out.begin() != "..") return "out:" + rel_out.generic_string();
    const auto rel_ds = p.lexically_relative(dataset_);
    if (!rel_ds.empty() && *rel_ds.begin() != "..") return "dataset:" + rel_ds.generic_string();
    return p.generic_string();
  }

  Stage stage_;
  const Config& cfg_;
  fs::path dataset_;
  fs::path out_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

struct Context {
  const Config& cfg;
  fs::path dataset;
  fs::path out;
  Manifest manifest;

  Context(Stage stage, const Config& c)
      : cfg(c),
        dataset(c.Path("paths.dataset").lexically_normal()),
        out(c.Path("paths.output_dir").lexically_normal()),
        manifest(stage, c, dataset, out) {}

  // Reads a prior-stage artifact, failing with MissingArtifact naming the
  // stage that produces it.
  fs::path Require(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p)) {
      Throw(ErrorCode::kMissingArtifact, "missing " + p.string() + " (run the '" + producer + "' stage first)");
    }
    manifest.Input(p);
    return p;
  }
  Json RequireJson(const fs::path& p, const std::string& producer) { return io::ReadJson(Require(p, producer)); }

  void Emit(const fs::path& p) { manifest.Output(p); }
  void EmitJson(const fs::path& p, const Json& doc) {
    fs::create_directories(p.parent_path());
    io::WriteJson(p, doc);
    Emit(p);
  }
};

std::string ViewName(std::size_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", v);
  return buf;
}

std::string StampName(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

// Camera model and per-view inputs as written by the detect stage.
struct Views {
  CameraIntrinsics K;
  Pose lidar_to_camera;
  std::vector<double> timestamps;
  std::vector<fs::path> images;
  std::vector<fs::path> scans;
  std::vector<Pose> init_poses;
  std::vector<std::optional<Pose>> gt_poses;
};

Views LoadViews(Context& ctx) {
  const Json doc = ctx.RequireJson(ctx.out / "views.json", "detect");
  Views v;
  v.K = io::IntrinsicsFromJson(doc.at("intrinsics"));
  v.lidar_to_camera = io::PoseFromJson(doc.at("T_cam_lidar"));
  for (const auto& j : doc.at("views")) {
    v.timestamps.push_back(j.at("timestamp").get<double>());
    v.images.push_back(ctx.dataset / j.at("image").get<std::string>());
    v.scans.push_back(ctx.dataset / j.at("scan").get<std::string>());
    v.init_poses.push_back(io::PoseFromJson(j.at("init_pose")));
    v.gt_poses.push_back(j.contains("gt_pose") ? std::optional<Pose>(io::PoseFromJson(j["gt_pose"])) : std::nullopt);
  }
  return v;
}

std::vector<std::vector<Segment3D>> LoadSegments(Context& ctx, std::size_t views) {
  std::vector<std::vector<Segment3D>> out(views);
  for (std::size_t v = 0; v < views; ++v) {
    out[v] = io::SegmentsFromJson(ctx.RequireJson(ctx.out / "segments" / (ViewName(v) + ".json"), "detect"));
  }
  return out;
}

std::vector<chain::PointTrack> LoadTracks(Context& ctx) {
  const Json doc = ctx.RequireJson(ctx.out / "points.json", "detect");
  std::vector<chain::PointTrack> tracks;
  for (const auto& j : doc.at("points")) {
    chain::PointTrack t;
    t.id = j.at("id").get<int>();
    t.first_depth = j.at("first_depth").get<double>();
    for (const auto& o : j.at("observations")) {
      t.observations.push_back({o.at(0).get<int>(), Vec2(o.at(1).get<double>(), o.at(2).get<double>())});
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

std::vector<io::TimedPose> Stamped(const std::vector<double>& t, const std::vector<Pose>& poses) {
  std::vector<io::TimedPose> out;
  for (std::size_t i = 0; i < poses.size(); ++i) out.push_back({t[i], poses[i]});
  return out;
}

void RunSynth(Context& ctx) {
  const Config& cfg = ctx.cfg;
  chain::SyntheticSetup setup = cfg.Synthetic();
  chain::SyntheticDataset data = chain::MakeSyntheticDataset(setup);
  if (!cfg.Bool("synth.perturb_first_pose")) data.init_poses[0] = data.gt_poses[0];

  synthetic::LidarSpec lidar;
  lidar.rings = cfg.Int("synth.lidar_rings");
  lidar.points_per_ring = cfg.Int("synth.lidar_points_per_ring");
  lidar.fov_up = cfg.Num("synth.lidar_fov_up");
  lidar.fov_down = cfg.Num("synth.lidar_fov_down");

  const fs::path ds = ctx.dataset;
  for (const char* sub : {"images", "scans", "observations"}) fs::create_directories(ds / sub);
  ctx.EmitJson(ds / "calibration.json",
               Json{{"intrinsics", io::IntrinsicsToJson(data.K)}, {"T_cam_lidar", io::PoseToJson(Pose::Identity())}});
  ctx.EmitJson(ds / "scene.json", io::SceneToJson(data.scene));

  std::vector<double> stamps;
  for (std::size_t v = 0; v < data.gt_poses.size(); ++v) stamps.push_back(v * cfg.Num("synth.frame_interval"));
  io::WriteTum(ds / "poses_gt.tum", Stamped(stamps, data.gt_poses));
  io::WriteTum(ds / "poses_init.tum", Stamped(stamps, data.init_poses));
  ctx.Emit(ds / "poses_gt.tum");
  ctx.Emit(ds / "poses_init.tum");

  for (std::size_t v = 0; v < data.gt_poses.size(); ++v) {
    const std::string name = StampName(stamps[v]);
    const std::uint64_t seed = setup.noise.seed * 1000003ULL + v;
    io::WriteScanPly(ds / "scans" / (name + ".ply"),
                     synthetic::SimulateLidar(data.scene, data.gt_poses[v], lidar, setup.noise.lidar_sigma, seed));
    WritePgm(ds / "images" / (name + ".pgm"), synthetic::RenderImage(data.scene, data.K, data.gt_poses[v]));
    ctx.Emit(ds / "scans" / (name + ".ply"));
    ctx.Emit(ds / "images" / (name + ".pgm"));
    ctx.EmitJson(ds / "observations" / (name + ".json"), io::ObservationsToJson(data.observations[v]));
  }
}

void RunDetect(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const WorkingSet ws = IngestDataset(ctx.dataset, cfg.Num("ingest.max_skew"));
  const std::string mode = cfg.Str("detect.mode");
  const DetectionConfig det = cfg.Detection();
  const LsdConfig lsd = cfg.Lsd();
  const bool lbd = cfg.Bool("detect.compute_lbd");
  const std::size_t n = ws.views.size();

  std::vector<synthetic::Observations> observations(n);
  for (std::size_t v = 0; v < n; ++v) {
    ctx.manifest.Input(ws.views[v].image);
    ctx.manifest.Input(ws.views[v].scan);
    if (!ws.views[v].observations.empty()) {
      ctx.manifest.Input(ws.views[v].observations);
      observations[v] = io::ObservationsFromJson(io::ReadJson(ws.views[v].observations));
    } else if (mode != "lsd") {
      Throw(ErrorCode::kMissingArtifact, "detect.mode '" + mode + "' needs observations/ for image " +
                                             ws.views[v].image.string());
    }
  }

  std::vector<std::vector<Segment3D>> segments(n);
  ParallelFor(n, [&](std::size_t v) {
    const ViewInput& in = ws.views[v];
    const int view = static_cast<int>(v);
    std::optional<GrayImage> image;
    if (mode == "lsd" || lbd) image = ReadPgm(in.image);
    if (mode == "synthetic") {
      for (const auto& o : observations[v].segments) segments[v].push_back(synthetic::ToWorldSegment(o, in.init_pose, view));
    } else {
      const LidarScan scan = io::ReadScanPly(in.scan);
      if (mode == "lsd") {
        segments[v] = BuildViewSegments(*image, scan, ws.K, in.init_pose, det, view, ws.lidar_to_camera, lsd);
      } else {
        std::vector<Segment2D> s2d;
        for (const auto& o : observations[v].segments) s2d.push_back(o.segment);
        segments[v] = BuildViewSegmentsFrom2D(s2d, scan, ws.K, in.init_pose, det, view, ws.lidar_to_camera);
      }
    }
    if (lbd) {
      for (auto& s : segments[v]) {
        if (!s.seg2d) continue;
        try {
          s.descriptor = ComputeLbd(*image, *s.seg2d);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kSegmentOutOfImage) throw;
        }
      }
    }
  });

  Json views = Json::array();
  for (std::size_t v = 0; v < n; ++v) {
    const ViewInput& in = ws.views[v];
    Json j{{"view", v},
           {"timestamp", in.timestamp},
           {"image", in.image.lexically_relative(ctx.dataset).generic_string()},
           {"scan", in.scan.lexically_relative(ctx.dataset).generic_string()},
           {"scan_timestamp", in.scan_timestamp},
           {"init_pose", io::PoseToJson(in.init_pose)}};
    if (in.gt_pose) j["gt_pose"] = io::PoseToJson(*in.gt_pose);
    views.push_back(j);
    ctx.EmitJson(ctx.out / "segments" / (ViewName(v) + ".json"), io::SegmentsToJson(static_cast<int>(v), segments[v]));
    spdlog::info("view {}: {} segments", v, segments[v].size());
  }
  ctx.EmitJson(ctx.out / "views.json", Json{{"intrinsics", io::IntrinsicsToJson(ws.K)},
                                            {"T_cam_lidar", io::PoseToJson(ws.lidar_to_camera)},
                                            {"views", views}});

  Json points = Json::array();
  for (const auto& t : chain::PointTracks(observations)) {
    Json obs = Json::array();
    for (const auto& o : t.observations) obs.push_back({o.view, o.pixel.x(), o.pixel.y()});
    points.push_back({{"id", t.id}, {"first_depth", t.first_depth}, {"observations", obs}});
  }
  ctx.EmitJson(ctx.out / "points.json", Json{{"points", points}});
}

void RunMatch(Context& ctx) {
  const Views views = LoadViews(ctx);
  const auto segments = LoadSegments(ctx, views.init_poses.size());
  const auto matches = FindAllMatches(segments, ctx.cfg.Match(), views.K, views.init_poses);
  spdlog::info("{} pairwise matches", matches.size());
  ctx.EmitJson(ctx.out / "matches.json", io::MatchesToJson(matches));
}

void RunAssociate(Context& ctx) {
  const Views views = LoadViews(ctx);
  const auto segments = LoadSegments(ctx, views.init_poses.size());
  const auto matches = io::MatchesFromJson(ctx.RequireJson(ctx.out / "matches.json", "match"));
  const auto clusters = chain::AssociateSegments(matches, segments, ctx.cfg.Chain().clustering);
  spdlog::info("{} clusters", clusters.size());
  ctx.EmitJson(ctx.out / "clusters.json", io::ClustersToJson(clusters));
}

Json ProblemToJson(const BAProblem& p) {
  Json poses = Json::array();
  for (const auto& P : p.poses) poses.push_back(io::PoseToJson(P));
  Json points = Json::array();
  for (const auto& X : p.points) {
    Json obs = Json::array();
    for (const auto& o : X.observations) obs.push_back({o.view, o.pixel.x(), o.pixel.y()});
    points.push_back({{"position", {X.position.x(), X.position.y(), X.position.z()}}, {"observations", obs}});
  }
  Json lines = Json::array();
  for (const auto& L : p.lines) {
    const PluckerLine pl = OrthonormalToPlucker(L.line);
    Json obs = Json::array();
    for (const auto& o : L.observations) {
      obs.push_back({o.view, o.segment.start.x(), o.segment.start.y(), o.segment.end.x(), o.segment.end.y()});
    }
    lines.push_back({{"cluster_id", L.cluster_id},
                     {"plucker", {{pl.d().x(), pl.d().y(), pl.d().z()}, {pl.m().x(), pl.m().y(), pl.m().z()}}},
                     {"observations", obs}});
  }
  return Json{{"intrinsics", io::IntrinsicsToJson(p.K)}, {"lambda_R", p.lambda_R}, {"lambda_L", p.lambda_L},
              {"gauge", p.gauge}, {"poses", poses}, {"points", points}, {"lines", lines}};
}

void RunBa(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Views views = LoadViews(ctx);
  const auto segments = LoadSegments(ctx, views.init_poses.size());
  const auto clusters = io::ClustersFromJson(ctx.RequireJson(ctx.out / "clusters.json", "associate"));
  std::vector<PointLandmark> points;
  const auto tracks = LoadTracks(ctx);
  if (cfg.Bool("ba.use_points")) points = chain::PointsFromTracks(tracks, views.K, views.init_poses);

  const chain::ChainResult r =
      chain::RunLineChain(segments, views.K, views.init_poses, points, cfg.Chain(), &clusters);
  const BAProblem& p = r.optimized.problem;
  const SolverReport& rep = r.optimized.report;
  spdlog::info("BA: cost {} -> {} in {} iterations ({})", rep.initial_cost, rep.final_cost, rep.iterations_run,
               rep.termination);

  io::WriteTum(ctx.out / "poses_ba.tum", Stamped(views.timestamps, p.poses));
  ctx.Emit(ctx.out / "poses_ba.tum");
  {
    std::ofstream csv(ctx.out / "ba_report.csv");
    csv << rep.ToCsv();
  }
  ctx.Emit(ctx.out / "ba_report.csv");
  ctx.EmitJson(ctx.out / "ba_problem.json", ProblemToJson(p));
  ctx.EmitJson(ctx.out / "ba_clusters.json", io::ClustersToJson(r.clusters));

  // Finite segments of the optimized lines, placed with the final poses.
  const auto placed = chain::ReplaceSegments(segments, views.init_poses, p.poses);
  std::vector<LineCluster> line_clusters;
  std::vector<PluckerLine> lines;
  std::map<int, const LineCluster*> by_id;
  for (const auto& c : r.clusters) by_id[c.id] = &c;
  for (const auto& L : p.lines) {
    line_clusters.push_back(*by_id.at(L.cluster_id));
    lines.push_back(OrthonormalToPlucker(L.line));
  }
  Json out = Json::array();
  for (const auto& s : LinesToSegments(lines, line_clusters, placed)) {
    out.push_back({{"start", {s.start.x(), s.start.y(), s.start.z()}}, {"end", {s.end.x(), s.end.y(), s.end.z()}}});
  }
  ctx.EmitJson(ctx.out / "lines.json", Json{{"segments", out}});
  ctx.EmitJson(ctx.out / "ba_summary.json", Json{{"initial_cost", rep.initial_cost},
                                                 {"final_cost", rep.final_cost},
                                                 {"iterations", rep.iterations_run},
                                                 {"termination", rep.termination},
                                                 {"dropped_observations", rep.dropped_observations},
                                                 {"line_landmarks", p.lines.size()},
                                                 {"point_landmarks", p.points.size()}});
}

std::vector<Pose> LoadBaPoses(Context& ctx, std::size_t n) {
  const auto tum = io::ReadTum(ctx.Require(ctx.out / "poses_ba.tum", "ba"));
  if (tum.size() != n) Throw(ErrorCode::kMissingPose, "poses_ba.tum does not cover every view");
  std::vector<Pose> poses;
  for (const auto& t : tum) poses.push_back(t.pose);
  return poses;
}

void RunDepth(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Views views = LoadViews(ctx);
  const std::size_t n = views.init_poses.size();
  const std::vector<Pose> poses = LoadBaPoses(ctx, n);
  const Json problem = ctx.RequireJson(ctx.out / "ba_problem.json", "ba");
  const Json lines = ctx.RequireJson(ctx.out / "lines.json", "ba");

  std::vector<LidarScan> scans(n);
  for (std::size_t v = 0; v < n; ++v) {
    ctx.manifest.Input(views.scans[v]);
    scans[v] = io::ReadScanPly(views.scans[v]);
    scans[v].pose_id = static_cast<int>(v);
  }
  const VoxelGrid grid = RegisterAndDownsample(scans, poses, cfg.Num("depth.voxel_size"), views.lidar_to_camera);

  std::vector<std::vector<FeatureDepth>> features(n);
  for (const auto& X : problem.at("points")) {
    const Vec3 p(X.at("position").at(0).get<double>(), X.at("position").at(1).get<double>(),
                 X.at("position").at(2).get<double>());
    for (const auto& o : X.at("observations")) {
      const int v = o.at(0).get<int>();
      const Vec3 Xc = poses.at(v).Apply(p);
      if (!(Xc.z() > kDefaultMinDepth)) continue;
      features[v].push_back({ProjectPoint(views.K, poses[v], p), Xc.z()});
    }
  }

  std::vector<DepthMap> maps(n);
  const int radius = cfg.Int("depth.occlusion_radius");
  const double rel = cfg.Num("depth.occlusion_rel_tol");
  ParallelFor(n, [&](std::size_t v) {
    maps[v] = OcclusionFilter(InitDepthMap(grid, features[v], views.K, poses[v]), radius, rel);
  });
  fs::create_directories(ctx.out / "depth");
  for (std::size_t v = 0; v < n; ++v) {
    const fs::path base = ctx.out / "depth" / ViewName(v);
    WritePfm(base.string() + ".pfm", maps[v].depth);
    WritePgm(base.string() + "_source.pgm", maps[v].source);
    ctx.Emit(base.string() + ".pfm");
    ctx.Emit(base.string() + "_source.pgm");
  }

  PointCloud cloud = FuseDepthMaps(maps, views.K, poses, cfg.Fusion());
  std::vector<Segment3D> segments;
  for (const auto& s : lines.at("segments")) {
    const Vec3 a(s.at("start").at(0).get<double>(), s.at("start").at(1).get<double>(), s.at("start").at(2).get<double>());
    const Vec3 b(s.at("end").at(0).get<double>(), s.at("end").at(1).get<double>(), s.at("end").at(2).get<double>());
    segments.emplace_back(a, b, -1);
  }
  PointCloud vertices;
  vertices.points = SampleSegmentVertices(segments, cfg.Num("depth.segment_spacing"));
  vertices.counts.assign(vertices.points.size(), 1);
  io::WriteCloudPly(ctx.out / "line_vertices.ply", vertices);
  ctx.Emit(ctx.out / "line_vertices.ply");
  cloud.points.insert(cloud.points.end(), vertices.points.begin(), vertices.points.end());
  cloud.counts.insert(cloud.counts.end(), vertices.counts.begin(), vertices.counts.end());
  io::WriteCloudPly(ctx.out / "cloud.ply", cloud);
  ctx.Emit(ctx.out / "cloud.ply");
  spdlog::info("fused cloud: {} points ({} line vertices)", cloud.points.size(), vertices.points.size());
}

void RunEval(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Views views = LoadViews(ctx);
  const std::size_t n = views.init_poses.size();
  const std::vector<Pose> poses = LoadBaPoses(ctx, n);
  const PointCloud cloud = io::ReadCloudPly(ctx.Require(ctx.out / "cloud.ply", "depth"));

  const std::string align_name = cfg.Str("eval.alignment");
  const Alignment align =
      align_name == "sim3" ? Alignment::kSim3 : (align_name == "se3" ? Alignment::kSE3 : Alignment::kNone);
  Json metrics{{"threshold", cfg.Num("eval.threshold")}, {"alignment", align_name}};
  std::vector<Pose> gt;
  for (const auto& g : views.gt_poses) {
    if (g) gt.push_back(*g);
  }
  if (gt.size() == n) {
    metrics["avg_loc_error"] = AvgLocalizationError(poses, gt, align);
    metrics["avg_loc_error_init"] = AvgLocalizationError(views.init_poses, gt, align);
  } else {
    metrics["avg_loc_error"] = nullptr;
    spdlog::warn("no ground-truth trajectory; avg_loc_error not computed");
  }

  std::vector<Vec3> gt_cloud;
  const fs::path gt_path = cfg.Path("paths.gt_cloud");
  if (!gt_path.empty()) {
    gt_cloud = io::ReadCloudPly(ctx.Require(gt_path, "dataset")).points;
  } else if (fs::exists(ctx.dataset / "scene.json")) {
    const auto scene = io::SceneFromJson(ctx.RequireJson(ctx.dataset / "scene.json", "synth"));
    gt_cloud = synthetic::SampleSceneSurface(scene, cfg.Num("eval.gt_spacing"));
  }
  if (!gt_cloud.empty() && !cloud.points.empty()) {
    const PrecisionRecall pr = PrecisionRecallFscore(cloud.points, gt_cloud, cfg.Num("eval.threshold"));
    metrics["precision"] = pr.precision;
    metrics["recall"] = pr.recall;
    metrics["f_score"] = pr.f_score;
  } else {
    metrics["precision"] = metrics["recall"] = metrics["f_score"] = nullptr;
    spdlog::warn("no ground-truth cloud or empty reconstruction; precision/recall not computed");
  }
  ctx.EmitJson(ctx.out / "metrics.json", metrics);
}

}  // namespace

Stage ParseStage(const std::string& name) {
  static const std::map<std::string, Stage> stages{{"synth", Stage::kSynth}, {"detect", Stage::kDetect},
                                                   {"match", Stage::kMatch}, {"associate", Stage::kAssociate},
                                                   {"ba", Stage::kBa},       {"depth", Stage::kDepth},
                                                   {"eval", Stage::kEval}};
  const auto it = stages.find(name);
  if (it == stages.end()) Throw(ErrorCode::kConfigInvalid, "unknown stage '" + name + "'");
  return it->second;
}

std::string StageName(Stage s) {
  switch (s) {
    case Stage::kSynth: return "synth";
    case Stage::kDetect: return "detect";
    case Stage::kMatch: return "match";
    case Stage::kAssociate: return "associate";
    case Stage::kBa: return "ba";
    case Stage::kDepth: return "depth";
    case Stage::kEval: return "eval";
  }
  return "unknown";
}

void RunStage(Stage stage, const Config& config) {
  Context ctx(stage, config);
  fs::create_directories(ctx.out);
  switch (stage) {
    case Stage::kSynth: RunSynth(ctx); break;
    case Stage::kDetect: RunDetect(ctx); break;
    case Stage::kMatch: RunMatch(ctx); break;
    case Stage::kAssociate: RunAssociate(ctx); break;
    case Stage::kBa: RunBa(ctx); break;
    case Stage::kDepth: RunDepth(ctx); break;
    case Stage::kEval: RunEval(ctx); break;
  }
  ctx.manifest.Write();
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid: return 2;
    case ErrorCode::kMissingArtifact: return 3;
    default: return 4;
  }
}

}  // namespace linesfm::pipeline
