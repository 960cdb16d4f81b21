#include <cmath>

#include "linesfm/line_ba.hpp"

namespace linesfm {

void BAProblem::Validate() const {
  if (lambda_R < 0 || lambda_L < 0) Throw(ErrorCode::kInvalidArgument, "cost weights must be non-negative");
  const int n = static_cast<int>(poses.size());
  for (int g : gauge) {
    if (g < 0 || g >= n) Throw(ErrorCode::kInvalidArgument, "gauge pose index out of range");
  }
  for (const auto& X : points) {
    for (const auto& o : X.observations) {
      if (o.view < 0 || o.view >= n) Throw(ErrorCode::kMissingPose, "point observation references view " + std::to_string(o.view));
    }
  }
  for (const auto& L : lines) {
    for (const auto& o : L.observations) {
      if (o.view < 0 || o.view >= n) Throw(ErrorCode::kMissingPose, "line observation references view " + std::to_string(o.view));
    }
  }
}

void SolverConfig::Validate() const {
  if (max_iters < 0 || !(initial_damping > 0) || !(damping_up > 1) || !(damping_down > 0 && damping_down < 1) ||
      !(gradient_tolerance > 0) || !(relative_cost_tolerance > 0) || !(huber_delta > 0)) {
    Throw(ErrorCode::kInvalidArgument, "invalid solver configuration");
  }
}

Vec2 PointResidual(const PointLandmark& X, const PointObservation& obs, const CameraIntrinsics& K,
                   const std::vector<Pose>& poses) {
  return ProjectPoint(K, poses.at(obs.view), X.position) - obs.pixel;
}

Vec2 LineResidual(const LineLandmark& L, const LineObservation& obs, const CameraIntrinsics& K,
                  const std::vector<Pose>& poses) {
  const Line2D l = ProjectInfiniteLine(K, poses.at(obs.view), OrthonormalToPlucker(L.line));
  return Vec2(l.SignedDistance(obs.segment.start), l.SignedDistance(obs.segment.end));
}

namespace {

double Robustify(double s, LossType loss, double delta) {
  if (loss == LossType::kNone || s <= delta * delta) return s;
  return 2.0 * delta * std::sqrt(s) - delta * delta;
}

// d(residual)/d(camera-frame point) of the pinhole projection.
Eigen::Matrix<double, 2, 3> ProjectionJacobian(const CameraIntrinsics& K, const Vec3& Xc) {
  const double iz = 1.0 / Xc.z();
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * iz, 0, -K.fx * Xc.x() * iz * iz,  //
      0, K.fy * iz, -K.fy * Xc.y() * iz * iz;
  return J;
}

void AnalyticPointBlock(const BAProblem& p, const PointLandmark& X, const PointObservation& o, ResidualBlock& b) {
  const Pose& P = p.poses[o.view];
  const Mat3 R = P.R();
  const Vec3 RX = R * X.position;
  const Vec3 Xc = RX + P.translation();
  if (!(Xc.z() > kDefaultMinDepth)) Throw(ErrorCode::kBehindCamera, "point is behind the camera");
  b.residual = Vec2(p.K.fx * Xc.x() / Xc.z() + p.K.cx, p.K.fy * Xc.y() / Xc.z() + p.K.cy) - o.pixel;
  const Eigen::Matrix<double, 2, 3> Jp = ProjectionJacobian(p.K, Xc);
  b.J_pose.leftCols<3>() = Jp;
  b.J_pose.rightCols<3>() = -Jp * Skew(RX);
  b.J_landmark = Jp * R;
}

void AnalyticLineBlock(const BAProblem& p, const LineLandmark& L, const LineObservation& o, ResidualBlock& b) {
  const Pose& P = p.poses[o.view];
  const Mat3 R = P.R();
  const Vec3& t = P.translation();
  Vec3 mw;
  Vec3 dw;
  OrthonormalToMomentDirection(L.line, &mw, &dw);
  const Vec3 a = R * mw;
  const Vec3 bd = R * dw;
  const Vec3 mc = a + t.cross(bd);
  const Mat3 KL = p.K.LineProjectionMatrix();
  const Vec3 l = KL * mc;
  const double n = std::hypot(l.x(), l.y());
  if (!(n >= 1e-12)) Throw(ErrorCode::kDegenerateProjection, "image line has a vanishing normal");

  Eigen::Matrix<double, 2, 3> dr_dmc;
  for (int k = 0; k < 2; ++k) {
    const Vec2& x = k == 0 ? o.segment.start : o.segment.end;
    const Vec3 h(x.x(), x.y(), 1.0);
    const double s = l.dot(h);
    b.residual(k) = s / n;
    const Vec3 dr_dl = h / n - s * Vec3(l.x(), l.y(), 0.0) / (n * n * n);
    dr_dmc.row(k) = dr_dl.transpose() * KL;
  }
  b.J_pose.leftCols<3>() = -dr_dmc * Skew(bd);
  b.J_pose.rightCols<3>() = dr_dmc * (-Skew(a) - Skew(t) * Skew(bd));

  const double c = std::cos(L.line.theta);
  const double sn = std::sin(L.line.theta);
  const Vec3 u1 = L.line.U.col(0);
  const Vec3 u2 = L.line.U.col(1);
  const Vec3 u3 = L.line.U.col(2);
  Eigen::Matrix<double, 3, 4> dmw;
  dmw.col(0).setZero();
  dmw.col(1) = -c * u3;
  dmw.col(2) = c * u2;
  dmw.col(3) = -sn * u1;
  Eigen::Matrix<double, 3, 4> ddw;
  ddw.col(0) = sn * u3;
  ddw.col(1).setZero();
  ddw.col(2) = -sn * u1;
  ddw.col(3) = c * u2;
  b.J_landmark = dr_dmc * (R * dmw + Skew(t) * R * ddw);
}

template <typename ResidualFn, typename PerturbFn>
Eigen::MatrixXd CentralDifference(int dims, double h, ResidualFn residual, PerturbFn perturb) {
  Eigen::MatrixXd J(2, dims);
  for (int k = 0; k < dims; ++k) {
    perturb(k, h);
    const Vec2 plus = residual();
    perturb(k, -2.0 * h);
    const Vec2 minus = residual();
    perturb(k, h);
    J.col(k) = (plus - minus) / (2.0 * h);
  }
  return J;
}

void NumericBlock(const BAProblem& p, ResidualBlock& b, double h) {
  BAProblem work = p;
  const Pose base_pose = p.poses[b.view];
  auto residual = [&]() -> Vec2 {
    if (b.kind == ResidualBlock::Kind::kPoint) {
      return PointResidual(work.points[b.landmark], work.points[b.landmark].observations[b.observation], work.K,
                           work.poses);
    }
    return LineResidual(work.lines[b.landmark], work.lines[b.landmark].observations[b.observation], work.K,
                        work.poses);
  };
  b.residual = residual();

  Vec6 pose_delta = Vec6::Zero();
  b.J_pose = CentralDifference(6, h, residual, [&](int k, double step) {
    pose_delta(k) += step;
    work.poses[b.view] = base_pose.Retract(pose_delta.head<3>(), pose_delta.tail<3>());
  });
  work.poses[b.view] = base_pose;

  if (b.kind == ResidualBlock::Kind::kPoint) {
    b.J_landmark = CentralDifference(3, h, residual, [&](int k, double step) {
      work.points[b.landmark].position(k) += step;
    });
  } else {
    const OrthonormalLine base_line = p.lines[b.landmark].line;
    Vec4 delta = Vec4::Zero();
    b.J_landmark = CentralDifference(4, h, residual, [&](int k, double step) {
      delta(k) += step;
      work.lines[b.landmark].line = OrthonormalUpdate(base_line, delta);
    });
  }
}

}  // namespace

double TotalCost(const BAProblem& p, LossType loss, double huber_delta) {
  double point_term = 0.0;
  double line_term = 0.0;
  if (p.lambda_R > 0) {
    for (const auto& X : p.points) {
      for (const auto& o : X.observations) {
        point_term += Robustify(PointResidual(X, o, p.K, p.poses).squaredNorm(), loss, huber_delta);
      }
    }
  }
  if (p.lambda_L > 0) {
    for (const auto& L : p.lines) {
      for (const auto& o : L.observations) {
        line_term += Robustify(LineResidual(L, o, p.K, p.poses).squaredNorm(), loss, huber_delta);
      }
    }
  }
  return p.lambda_R * point_term + p.lambda_L * line_term;
}

std::vector<ResidualBlock> Jacobians(const BAProblem& p, Differentiation mode, double numeric_step) {
  std::vector<ResidualBlock> blocks;
  auto finish = [&](ResidualBlock& b) {
    if (p.gauge.count(b.view)) b.J_pose.setZero();
    blocks.push_back(std::move(b));
  };
  if (p.lambda_R > 0) {
    for (int i = 0; i < static_cast<int>(p.points.size()); ++i) {
      for (int k = 0; k < static_cast<int>(p.points[i].observations.size()); ++k) {
        ResidualBlock b;
        b.kind = ResidualBlock::Kind::kPoint;
        b.landmark = i;
        b.observation = k;
        b.view = p.points[i].observations[k].view;
        if (mode == Differentiation::kAnalytic) {
          AnalyticPointBlock(p, p.points[i], p.points[i].observations[k], b);
        } else {
          NumericBlock(p, b, numeric_step);
        }
        finish(b);
      }
    }
  }
  if (p.lambda_L > 0) {
    for (int i = 0; i < static_cast<int>(p.lines.size()); ++i) {
      for (int k = 0; k < static_cast<int>(p.lines[i].observations.size()); ++k) {
        ResidualBlock b;
        b.kind = ResidualBlock::Kind::kLine;
        b.landmark = i;
        b.observation = k;
        b.view = p.lines[i].observations[k].view;
        if (mode == Differentiation::kAnalytic) {
          AnalyticLineBlock(p, p.lines[i], p.lines[i].observations[k], b);
        } else {
          NumericBlock(p, b, numeric_step);
        }
        finish(b);
      }
    }
  }
  return blocks;
}

}  // namespace linesfm
