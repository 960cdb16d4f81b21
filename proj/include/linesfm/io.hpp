#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "linesfm/association.hpp"
#include "linesfm/depth_fusion.hpp"
#include "linesfm/detection.hpp"
#include "linesfm/matching.hpp"
#include "linesfm/synthetic.hpp"

namespace linesfm::io {

using Json = nlohmann::json;

Json ReadJson(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; byte-identical for equal documents.
void WriteJson(const std::filesystem::path& path, const Json& doc);
std::string ReadText(const std::filesystem::path& path);

std::string Sha256Hex(const std::string& bytes);
std::string Sha256File(const std::filesystem::path& path);

// PLY with x,y,z,ring vertex properties; ASCII or binary little-endian on read.
LidarScan ReadScanPly(const std::filesystem::path& path);
void WriteScanPly(const std::filesystem::path& path, const LidarScan& scan);

// PLY with x,y,z and an optional count property.
PointCloud ReadCloudPly(const std::filesystem::path& path);
void WriteCloudPly(const std::filesystem::path& path, const PointCloud& cloud);

// TUM lines: timestamp tx ty tz qx qy qz qw, the camera pose in the world
// (camera-to-world). Converted to and from world-to-camera Pose.
struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};
std::vector<TimedPose> ReadTum(const std::filesystem::path& path);
void WriteTum(const std::filesystem::path& path, const std::vector<TimedPose>& poses);

Json SegmentsToJson(int view_id, const std::vector<Segment3D>& segments);
std::vector<Segment3D> SegmentsFromJson(const Json& doc, int* view_id = nullptr);

Json MatchesToJson(const std::vector<PairwiseMatch>& matches);
std::vector<PairwiseMatch> MatchesFromJson(const Json& doc);

Json ClustersToJson(const std::vector<LineCluster>& clusters);
std::vector<LineCluster> ClustersFromJson(const Json& doc);

Json SceneToJson(const synthetic::Scene& scene);
synthetic::Scene SceneFromJson(const Json& doc);

// Synthetic ground-truth observations of one view.
Json ObservationsToJson(const synthetic::Observations& obs);
synthetic::Observations ObservationsFromJson(const Json& doc);

Json IntrinsicsToJson(const CameraIntrinsics& K);
CameraIntrinsics IntrinsicsFromJson(const Json& doc);
Json PoseToJson(const Pose& P);  // {"q": [w, x, y, z], "t": [x, y, z]}, world-to-camera
Pose PoseFromJson(const Json& doc);

}  // namespace linesfm::io
