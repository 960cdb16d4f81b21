#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "linesfm/chain.hpp"
#include "linesfm/depth_fusion.hpp"
#include "linesfm/detection.hpp"
#include "linesfm/io.hpp"

namespace linesfm::pipeline {

inline constexpr const char* kVersion = "0.1.0";

// Flat configuration: every key is a dotted path with a typed value. Unknown
// keys, wrong types and out-of-range values are rejected at load with
// ConfigInvalid naming the key. Missing keys take their schema default.
class Config {
 public:
  Config();  // all defaults
  static Config Load(const std::filesystem::path& path);
  // `base_dir` resolves relative paths.
  static Config FromJson(const io::Json& doc, const std::filesystem::path& base_dir = ".");

  void Set(const std::string& key, const io::Json& value);
  double Num(const std::string& key) const;
  int Int(const std::string& key) const;
  bool Bool(const std::string& key) const;
  std::string Str(const std::string& key) const;
  std::filesystem::path Path(const std::string& key) const;

  // Every key with its effective value, sorted.
  const io::Json& values() const { return values_; }
  std::string Hash() const;

  DetectionConfig Detection() const;
  LsdConfig Lsd() const;
  MatchThresholds Match() const;
  chain::ChainOptions Chain() const;
  FusionConfig Fusion() const;
  synthetic::NoiseSpec Noise() const;
  chain::SyntheticSetup Synthetic() const;

  static std::vector<std::string> Keys();

 private:
  io::Json values_;
  std::filesystem::path base_dir_;
};

struct ViewInput {
  double timestamp = 0.0;
  std::filesystem::path image;
  std::filesystem::path scan;
  double scan_timestamp = 0.0;
  Pose init_pose;
  std::optional<Pose> gt_pose;
  std::filesystem::path observations;  // empty unless the dataset is synthetic
};

struct WorkingSet {
  CameraIntrinsics K;
  Pose lidar_to_camera;
  std::vector<ViewInput> views;  // sorted by image timestamp
};

// Dataset layout:
//   calibration.json  {"intrinsics": {fx, fy, cx, cy, width, height}, "T_cam_lidar": {"q": [w,x,y,z], "t": [...]}}
//   images/<timestamp>.pgm, scans/<timestamp>.ply
//   poses_init.tum (initial estimates), optional poses_gt.tum
//   optional observations/<timestamp>.json (synthetic ground-truth observations)
// Each image is paired with the nearest-in-time scan and initial pose.
WorkingSet IngestDataset(const std::filesystem::path& dir, double max_skew = 0.05);

enum class Stage { kSynth, kDetect, kMatch, kAssociate, kBa, kDepth, kEval };
Stage ParseStage(const std::string& name);
std::string StageName(Stage s);

// Runs one stage: reads prior artifacts under paths.output_dir (or the
// dataset), writes this stage's artifacts and manifest_<stage>.json.
void RunStage(Stage stage, const Config& config);

// CLI exit code for a library error.
int ExitCodeFor(ErrorCode code);

}  // namespace linesfm::pipeline
