#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace linesfm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode {
  kInvalidArgument,
  kBehindCamera,
  kDegenerateProjection,
  kDegenerateSegment,
  kImageTooSmall,
  kRingTooShort,
  kNotEnoughPoints,
  kNoConsensus,
  kSegmentOutOfImage,
  kSameViewEdge,
  kDegenerateCluster,
  kSingularNormalEquations,
  kMissingPose,
  kDegenerateConfiguration,
  kMissingArtifact,
  kConfigInvalid,
  kTimestampSkewExceeded,
  kCalibrationMissing,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type; the code
// identifies the failure class for callers that branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Throw(ErrorCode code, const std::string& message);

// Worker-count cap used by the parallel helpers. 0 means "all logical cores".
void SetMaxThreads(int n);
int MaxThreads();

// Runs fn(i) for i in [0, n). Each index is handled exactly once; callers
// write results into per-index slots so output order never depends on
// scheduling.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace linesfm
