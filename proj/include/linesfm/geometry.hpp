#pragma once

#include <Eigen/Geometry>

#include <optional>
#include <vector>

#include "linesfm/common.hpp"

namespace linesfm {

inline constexpr double kDefaultMinDepth = 1e-6;

Mat3 Skew(const Vec3& v);
// Rotation exp/log on SO(3).
Mat3 ExpSO3(const Vec3& omega);
Vec3 LogSO3(const Mat3& R);

// World-to-camera rigid transform: X_cam = R * X_world + t.
class Pose {
 public:
  Pose();
  Pose(const Eigen::Quaterniond& rotation, const Vec3& translation);
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose Identity() { return Pose(); }
  // Pose of a camera centered at `center` whose camera-to-world rotation is R_wc.
  static Pose FromCenter(const Mat3& R_wc, const Vec3& center);
  // Camera at `eye` looking at `target`, image y axis aligned with -up.
  static Pose LookAt(const Vec3& eye, const Vec3& target, const Vec3& up);

  const Eigen::Quaterniond& rotation() const { return q_; }
  Mat3 R() const { return q_.toRotationMatrix(); }
  const Vec3& translation() const { return t_; }
  Vec3 Center() const { return -(q_.conjugate() * t_); }

  Vec3 Apply(const Vec3& X) const { return q_ * X + t_; }
  Pose Inverse() const;
  // (this * other)(X) == this->Apply(other.Apply(X)).
  Pose operator*(const Pose& other) const;

  // Left perturbation used by bundle adjustment: R <- Exp(omega) R, t <- t + dt.
  Pose Retract(const Vec3& dt, const Vec3& omega) const;

 private:
  Eigen::Quaterniond q_;
  Vec3 t_;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void Validate() const;
  Mat3 K() const;
  // Maps a camera-frame Plücker moment to homogeneous image-line coefficients.
  Mat3 LineProjectionMatrix() const;
  bool Contains(const Vec2& px, double margin_fraction = 0.0) const;
};

struct Line2D {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;

  // Normalizes (a, b) to unit length; throws DegenerateProjection when the
  // normal vanishes.
  static Line2D FromCoefficients(const Vec3& abc);
  double SignedDistance(const Vec2& x) const { return a * x.x() + b * x.y() + c; }
  Vec2 Direction() const { return Vec2(-b, a); }
};

class PluckerLine {
 public:
  PluckerLine() : d_(1, 0, 0), m_(0, 0, 0) {}
  // Normalizes so that ||d|| = 1. The moment is projected onto the plane
  // orthogonal to d to enforce d.m = 0 exactly.
  PluckerLine(const Vec3& direction, const Vec3& moment);

  const Vec3& d() const { return d_; }
  const Vec3& m() const { return m_; }
  // Point on the line closest to the origin.
  Vec3 ClosestPointToOrigin() const { return d_.cross(m_); }
  Vec3 Project(const Vec3& X) const;
  double Distance(const Vec3& X) const;
  PluckerLine Transformed(const Pose& P) const;
  Vec6 AsVector() const;

 private:
  Vec3 d_;
  Vec3 m_;
};

struct OrthonormalLine {
  Mat3 U = Mat3::Identity();
  double theta = 0.0;
};

struct Segment2D {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();

  Segment2D() = default;
  Segment2D(const Vec2& s, const Vec2& e);
  // Clamps both endpoints to [0, width-1] x [0, height-1] before validating.
  static Segment2D Clamped(const Vec2& s, const Vec2& e, int width, int height);

  double Length() const { return (end - start).norm(); }
  Vec2 Direction() const { return (end - start).normalized(); }
  Vec2 Midpoint() const { return 0.5 * (start + end); }
  double DistanceTo(const Vec2& x) const;
};

struct Segment3D {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  int view_id = -1;
  std::optional<Eigen::VectorXd> descriptor;
  // 2D detection the segment was built from, in its own view.
  std::optional<Segment2D> seg2d;

  Segment3D() = default;
  Segment3D(const Vec3& s, const Vec3& e, int view);

  double Length() const { return (end - start).norm(); }
  Vec3 Direction() const { return (end - start).normalized(); }
  Vec3 Midpoint() const { return 0.5 * (start + end); }
};

Vec2 ProjectPoint(const CameraIntrinsics& K, const Pose& P, const Vec3& X,
                  double min_depth = kDefaultMinDepth);
Line2D ProjectInfiniteLine(const CameraIntrinsics& K, const Pose& P, const PluckerLine& L);
PluckerLine PluckerFromEndpoints(const Vec3& p, const Vec3& q);
OrthonormalLine PluckerToOrthonormal(const PluckerLine& L);
PluckerLine OrthonormalToPlucker(const OrthonormalLine& O);
OrthonormalLine OrthonormalUpdate(const OrthonormalLine& O, const Vec4& delta);
double PointLineDistance2D(const Vec2& x, const Line2D& l);

// Unnormalized (moment, direction) pair of an orthonormal line: the scale-free
// form used inside the solver.
void OrthonormalToMomentDirection(const OrthonormalLine& O, Vec3* moment, Vec3* direction);

}  // namespace linesfm
