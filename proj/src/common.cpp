#include "linesfm/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace linesfm {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kDegenerateProjection: return "DegenerateProjection";
    case ErrorCode::kDegenerateSegment: return "DegenerateSegment";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kRingTooShort: return "RingTooShort";
    case ErrorCode::kNotEnoughPoints: return "NotEnoughPoints";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kSegmentOutOfImage: return "SegmentOutOfImage";
    case ErrorCode::kSameViewEdge: return "SameViewEdge";
    case ErrorCode::kDegenerateCluster: return "DegenerateCluster";
    case ErrorCode::kSingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::kMissingPose: return "MissingPose";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kTimestampSkewExceeded: return "TimestampSkewExceeded";
    case ErrorCode::kCalibrationMissing: return "CalibrationMissing";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message), code_(code) {}

void Throw(ErrorCode code, const std::string& message) { throw Error(code, message); }

namespace {
std::atomic<int> g_max_threads{0};
}

void SetMaxThreads(int n) { g_max_threads = std::max(0, n); }

int MaxThreads() {
  const int n = g_max_threads.load();
  if (n > 0) return n;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(MaxThreads()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace linesfm
