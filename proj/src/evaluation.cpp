#include "linesfm/evaluation.hpp"

#include <array>
#include <cmath>
#include <unordered_map>

#include <Eigen/SVD>

namespace linesfm {

Similarity UmeyamaAlign(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, bool with_scale) {
  if (src.size() != dst.size()) Throw(ErrorCode::kInvalidArgument, "point lists differ in length");
  if (src.size() < 3) Throw(ErrorCode::kDegenerateConfiguration, "need at least 3 correspondences");
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero();
  Vec3 mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= n;
  mu_d /= n;
  Mat3 cov = Mat3::Zero();
  Mat3 src_scatter = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - mu_s;
    const Vec3 b = dst[i] - mu_d;
    cov += b * a.transpose();
    src_scatter += a * a.transpose();
    var_s += a.squaredNorm();
  }
  cov /= n;
  var_s /= n;

  Eigen::JacobiSVD<Mat3> src_svd(src_scatter);
  const Vec3 sv = src_svd.singularValues();
  if (!(sv(0) > 0) || sv(1) <= 1e-12 * sv(0)) {
    Throw(ErrorCode::kDegenerateConfiguration, "source points are collinear or coincident");
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1.0;
  Similarity out;
  out.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  out.scale = with_scale ? (svd.singularValues().asDiagonal() * S).trace() / var_s : 1.0;
  out.translation = mu_d - out.scale * out.rotation * mu_s;
  return out;
}

std::vector<Pose> TransformTrajectory(const std::vector<Pose>& poses, const Similarity& s) {
  std::vector<Pose> out;
  out.reserve(poses.size());
  for (const auto& P : poses) {
    const Mat3 R_wc = s.rotation * P.R().transpose();
    out.push_back(Pose::FromCenter(R_wc, s.Apply(P.Center())));
  }
  return out;
}

double AvgLocalizationError(const std::vector<Pose>& est, const std::vector<Pose>& gt, Alignment align) {
  if (est.size() != gt.size() || est.empty()) Throw(ErrorCode::kInvalidArgument, "pose counts differ");
  std::vector<Vec3> e;
  std::vector<Vec3> g;
  for (std::size_t i = 0; i < est.size(); ++i) {
    e.push_back(est[i].Center());
    g.push_back(gt[i].Center());
  }
  Similarity s;
  if (align != Alignment::kNone) s = UmeyamaAlign(e, g, align == Alignment::kSim3);
  double sum = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) sum += (s.Apply(e[i]) - g[i]).norm();
  return sum / static_cast<double>(e.size());
}

namespace {

struct KeyHash {
  std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
    std::size_t h = 1469598103934665603ULL;
    for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
    return h;
  }
};

// Uniform hash grid with cell size equal to the query radius: every neighbor
// within the radius lies in the 27 surrounding cells.
class RadiusIndex {
 public:
  RadiusIndex(const std::vector<Vec3>& points, double radius) : points_(points), radius_(radius) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[KeyOf(points[i])].push_back(i);
  }

  bool AnyWithin(const Vec3& q) const {
    const auto k = KeyOf(q);
    const double r2 = radius_ * radius_;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == cells_.end()) continue;
          for (std::size_t i : it->second) {
            if ((points_[i] - q).squaredNorm() <= r2) return true;
          }
        }
      }
    }
    return false;
  }

 private:
  std::array<std::int64_t, 3> KeyOf(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / radius_)), static_cast<std::int64_t>(std::floor(p.y() / radius_)),
            static_cast<std::int64_t>(std::floor(p.z() / radius_))};
  }

  const std::vector<Vec3>& points_;
  double radius_;
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, KeyHash> cells_;
};

double FractionWithin(const std::vector<Vec3>& queries, const RadiusIndex& index) {
  std::vector<std::uint8_t> hit(queries.size(), 0);
  ParallelFor(queries.size(), [&](std::size_t i) { hit[i] = index.AnyWithin(queries[i]) ? 1 : 0; });
  std::size_t count = 0;
  for (auto h : hit) count += h;
  return static_cast<double>(count) / static_cast<double>(queries.size());
}

}  // namespace

PrecisionRecall PrecisionRecallFscore(const std::vector<Vec3>& cloud, const std::vector<Vec3>& gt_cloud,
                                      double threshold) {
  if (cloud.empty() || gt_cloud.empty()) Throw(ErrorCode::kInvalidArgument, "clouds must be non-empty");
  if (!(threshold > 0)) Throw(ErrorCode::kInvalidArgument, "threshold must be positive");
  PrecisionRecall pr;
  pr.precision = FractionWithin(cloud, RadiusIndex(gt_cloud, threshold));
  pr.recall = FractionWithin(gt_cloud, RadiusIndex(cloud, threshold));
  const double sum = pr.precision + pr.recall;
  pr.f_score = sum > 0 ? 2.0 * pr.precision * pr.recall / sum : 0.0;
  return pr;
}

}  // namespace linesfm
