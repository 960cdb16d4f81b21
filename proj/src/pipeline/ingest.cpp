#include <algorithm>
#include <cmath>

#include "linesfm/pipeline.hpp"

namespace linesfm::pipeline {

namespace {

namespace fs = std::filesystem;

struct Stamped {
  double t = 0.0;
  fs::path path;
};

std::vector<Stamped> ListStamped(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) Throw(ErrorCode::kMissingArtifact, "missing directory " + dir.string());
  std::vector<Stamped> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ext) continue;
    const std::string stem = entry.path().stem().string();
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(stem, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != stem.size()) {
      Throw(ErrorCode::kIoError, entry.path().string() + ": file name must be a timestamp in seconds");
    }
    out.push_back({t, entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const Stamped& a, const Stamped& b) { return a.t < b.t; });
  return out;
}

template <typename T, typename TimeOf>
const T* Nearest(const std::vector<T>& items, double t, TimeOf time_of) {
  const T* best = nullptr;
  for (const auto& it : items) {
    if (!best || std::abs(time_of(it) - t) < std::abs(time_of(*best) - t)) best = &it;
  }
  return best;
}

}  // namespace

WorkingSet IngestDataset(const fs::path& dir, double max_skew) {
  if (!(max_skew >= 0)) Throw(ErrorCode::kConfigInvalid, "ingest.max_skew must be non-negative");
  if (!fs::is_directory(dir)) Throw(ErrorCode::kMissingArtifact, "dataset directory not found: " + dir.string());
  const fs::path calib_path = dir / "calibration.json";
  if (!fs::exists(calib_path)) Throw(ErrorCode::kCalibrationMissing, "missing " + calib_path.string());

  WorkingSet ws;
  const io::Json calib = io::ReadJson(calib_path);
  if (!calib.contains("intrinsics")) Throw(ErrorCode::kCalibrationMissing, calib_path.string() + ": no 'intrinsics'");
  if (!calib.contains("T_cam_lidar")) {
    Throw(ErrorCode::kCalibrationMissing, calib_path.string() + ": no 'T_cam_lidar' extrinsic");
  }
  try {
    ws.K = io::IntrinsicsFromJson(calib["intrinsics"]);
    ws.lidar_to_camera = io::PoseFromJson(calib["T_cam_lidar"]);
  } catch (const io::Json::exception& e) {
    Throw(ErrorCode::kCalibrationMissing, calib_path.string() + ": " + e.what());
  }

  const auto images = ListStamped(dir / "images", ".pgm");
  const auto scans = ListStamped(dir / "scans", ".ply");
  if (images.empty()) Throw(ErrorCode::kMissingArtifact, "no images in " + (dir / "images").string());
  if (scans.empty()) Throw(ErrorCode::kMissingArtifact, "no scans in " + (dir / "scans").string());
  const fs::path init_path = dir / "poses_init.tum";
  if (!fs::exists(init_path)) Throw(ErrorCode::kMissingArtifact, "missing initial poses " + init_path.string());
  const auto init = io::ReadTum(init_path);
  std::vector<io::TimedPose> gt;
  if (fs::exists(dir / "poses_gt.tum")) gt = io::ReadTum(dir / "poses_gt.tum");

  std::string skewed;
  auto check = [&](const char* what, double t_img, double t_other) {
    if (std::abs(t_other - t_img) <= max_skew) return true;
    skewed += std::string(skewed.empty() ? "" : "; ") + what + " for image t=" + std::to_string(t_img) +
              " (nearest " + std::to_string(t_other) + ")";
    return false;
  };
  for (const auto& img : images) {
    ViewInput v;
    v.timestamp = img.t;
    v.image = img.path;
    const Stamped* scan = Nearest(scans, img.t, [](const Stamped& s) { return s.t; });
    const io::TimedPose* pose = Nearest(init, img.t, [](const io::TimedPose& p) { return p.timestamp; });
    bool ok = check("scan", img.t, scan->t);
    ok = (pose ? check("initial pose", img.t, pose->timestamp) : check("initial pose", img.t, INFINITY)) && ok;
    if (!ok) continue;
    v.scan = scan->path;
    v.scan_timestamp = scan->t;
    v.init_pose = pose->pose;
    if (const auto* g = Nearest(gt, img.t, [](const io::TimedPose& p) { return p.timestamp; });
        g && std::abs(g->timestamp - img.t) <= max_skew) {
      v.gt_pose = g->pose;
    }
    const fs::path obs = dir / "observations" / (img.path.stem().string() + ".json");
    if (fs::exists(obs)) v.observations = obs;
    ws.views.push_back(std::move(v));
  }
  if (!skewed.empty()) {
    Throw(ErrorCode::kTimestampSkewExceeded, "no match within " + std::to_string(max_skew) + " s: " + skewed);
  }
  return ws;
}

}  // namespace linesfm::pipeline
