#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "linesfm/line_ba.hpp"

namespace linesfm {

void AddLineLandmarks(BAProblem& p, const std::vector<LineCluster>& clusters,
                      const std::vector<std::vector<Segment3D>>& segments) {
  for (const auto& c : clusters) {
    if (c.observations.size() < 2) continue;
    LineLandmark L;
    L.cluster_id = c.id;
    L.line = PluckerToOrthonormal(c.initial_line ? *c.initial_line : InitLandmarkLine(c, segments));
    for (const auto& ref : c.observations) {
      const Segment3D& s = segments.at(ref.view).at(ref.index);
      if (!s.seg2d) Throw(ErrorCode::kInvalidArgument, "segment without a 2D observation cannot enter BA");
      L.observations.push_back(LineObservation{ref.view, *s.seg2d});
    }
    p.lines.push_back(std::move(L));
  }
}

void ScaleAboutCamera(BAProblem& p, int view, double s) {
  if (!(s > 0)) Throw(ErrorCode::kInvalidArgument, "scale must be positive");
  const Vec3 C = p.poses.at(view).Center();
  for (auto& P : p.poses) P = Pose::FromCenter(P.R().transpose(), C + s * (P.Center() - C));
  for (auto& X : p.points) X.position = C + s * (X.position - C);
  for (auto& L : p.lines) {
    const PluckerLine pl = OrthonormalToPlucker(L.line);
    const Vec3 q = C + s * (pl.ClosestPointToOrigin() - C);
    L.line = PluckerToOrthonormal(PluckerLine(pl.d(), q.cross(pl.d())));
  }
}

Vec3 TriangulatePoint(const std::vector<PointObservation>& observations, const CameraIntrinsics& K,
                      const std::vector<Pose>& poses) {
  if (observations.size() < 2) Throw(ErrorCode::kNotEnoughPoints, "triangulation needs two observations");
  Eigen::MatrixXd A(2 * observations.size(), 4);
  const Mat3 Kinv = K.K().inverse();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Pose& P = poses.at(observations[i].view);
    Eigen::Matrix<double, 3, 4> M;
    M.leftCols<3>() = P.R();
    M.col(3) = P.translation();
    const Vec3 x = Kinv * Vec3(observations[i].pixel.x(), observations[i].pixel.y(), 1.0);
    A.row(2 * i) = x.x() * M.row(2) - M.row(0);
    A.row(2 * i + 1) = x.y() * M.row(2) - M.row(1);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X(3)) < 1e-15) Throw(ErrorCode::kDegenerateConfiguration, "point at infinity");
  return X.head<3>() / X(3);
}

std::vector<Segment3D> LinesToSegments(const std::vector<PluckerLine>& lines, const std::vector<LineCluster>& clusters,
                                       const std::vector<std::vector<Segment3D>>& segments) {
  if (lines.size() != clusters.size()) Throw(ErrorCode::kInvalidArgument, "one line per cluster expected");
  std::vector<Segment3D> out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const PluckerLine& L = lines[c];
    const Vec3 p0 = L.ClosestPointToOrigin();
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    for (const auto& ref : clusters[c].observations) {
      const Segment3D& s = segments.at(ref.view).at(ref.index);
      for (const Vec3& X : {s.start, s.end}) {
        const double t = L.d().dot(X - p0);
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
      }
    }
    if (!(t_max - t_min > 1e-12)) continue;
    const int view = clusters[c].observations.empty() ? -1 : clusters[c].observations.front().view;
    out.emplace_back(p0 + t_min * L.d(), p0 + t_max * L.d(), view);
  }
  return out;
}

}  // namespace linesfm
