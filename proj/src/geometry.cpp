#include "linesfm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace linesfm {

Mat3 Skew(const Vec3& v) {
  Mat3 S;
  S << 0, -v.z(), v.y(),  //
      v.z(), 0, -v.x(),   //
      -v.y(), v.x(), 0;
  return S;
}

Mat3 ExpSO3(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) return Mat3::Identity() + Skew(omega);
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

Vec3 LogSO3(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Pose::Pose() : q_(Eigen::Quaterniond::Identity()), t_(Vec3::Zero()) {}

Pose::Pose(const Eigen::Quaterniond& rotation, const Vec3& translation)
    : q_(rotation.normalized()), t_(translation) {}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : q_(Eigen::Quaterniond(rotation).normalized()), t_(translation) {}

Pose Pose::FromCenter(const Mat3& R_wc, const Vec3& center) {
  const Mat3 R_cw = R_wc.transpose();
  return Pose(R_cw, -R_cw * center);
}

Pose Pose::LookAt(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.unitOrthogonal();
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R_wc;
  R_wc.col(0) = x;
  R_wc.col(1) = y;
  R_wc.col(2) = z;
  return FromCenter(R_wc, eye);
}

Pose Pose::Inverse() const {
  const Eigen::Quaterniond qi = q_.conjugate();
  return Pose(qi, -(qi * t_));
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(q_ * other.q_, q_ * other.t_ + t_);
}

Pose Pose::Retract(const Vec3& dt, const Vec3& omega) const {
  const Mat3 R_new = ExpSO3(omega) * R();
  return Pose(Eigen::Quaterniond(R_new), t_ + dt);
}

void CameraIntrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) Throw(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) Throw(ErrorCode::kInvalidArgument, "image size must be positive");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    Throw(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

Mat3 CameraIntrinsics::K() const {
  Mat3 K;
  K << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return K;
}

Mat3 CameraIntrinsics::LineProjectionMatrix() const {
  Mat3 KL;
  KL << fy, 0, 0,  //
      0, fx, 0,    //
      -fy * cx, -fx * cy, fx * fy;
  return KL;
}

bool CameraIntrinsics::Contains(const Vec2& px, double margin_fraction) const {
  const double mx = margin_fraction * width;
  const double my = margin_fraction * height;
  return px.x() >= -mx && px.x() <= (width - 1) + mx && px.y() >= -my && px.y() <= (height - 1) + my;
}

Line2D Line2D::FromCoefficients(const Vec3& abc) {
  const double n = std::hypot(abc.x(), abc.y());
  if (!(n >= 1e-12)) Throw(ErrorCode::kDegenerateProjection, "image line has a vanishing normal");
  return Line2D{abc.x() / n, abc.y() / n, abc.z() / n};
}

PluckerLine::PluckerLine(const Vec3& direction, const Vec3& moment) {
  const double n = direction.norm();
  if (!(n > 0.0)) Throw(ErrorCode::kInvalidArgument, "Plücker direction must be non-zero");
  d_ = direction / n;
  m_ = moment / n;
  m_ -= d_ * d_.dot(m_);
}

Vec3 PluckerLine::Project(const Vec3& X) const {
  const Vec3 p0 = ClosestPointToOrigin();
  return p0 + d_ * d_.dot(X - p0);
}

double PluckerLine::Distance(const Vec3& X) const { return (X.cross(d_) - m_).norm(); }

PluckerLine PluckerLine::Transformed(const Pose& P) const {
  const Mat3 R = P.R();
  const Vec3 d = R * d_;
  return PluckerLine(d, R * m_ + P.translation().cross(d));
}

Vec6 PluckerLine::AsVector() const {
  Vec6 v;
  v << d_, m_;
  return v;
}

Segment2D::Segment2D(const Vec2& s, const Vec2& e) : start(s), end(e) {
  if (!((e - s).norm() > 0.0)) Throw(ErrorCode::kDegenerateSegment, "2D segment has zero length");
}

Segment2D Segment2D::Clamped(const Vec2& s, const Vec2& e, int width, int height) {
  auto clamp = [&](const Vec2& p) {
    return Vec2(std::clamp(p.x(), 0.0, static_cast<double>(width - 1)),
                std::clamp(p.y(), 0.0, static_cast<double>(height - 1)));
  };
  return Segment2D(clamp(s), clamp(e));
}

double Segment2D::DistanceTo(const Vec2& x) const {
  const Vec2 v = end - start;
  const double t = std::clamp(v.dot(x - start) / v.squaredNorm(), 0.0, 1.0);
  return (start + t * v - x).norm();
}

Segment3D::Segment3D(const Vec3& s, const Vec3& e, int view) : start(s), end(e), view_id(view) {
  if (!((e - s).norm() > 0.0)) Throw(ErrorCode::kDegenerateSegment, "3D segment has zero length");
}

Vec2 ProjectPoint(const CameraIntrinsics& K, const Pose& P, const Vec3& X, double min_depth) {
  const Vec3 Xc = P.Apply(X);
  if (!(Xc.z() > min_depth)) Throw(ErrorCode::kBehindCamera, "point is behind the camera");
  return Vec2(K.fx * Xc.x() / Xc.z() + K.cx, K.fy * Xc.y() / Xc.z() + K.cy);
}

Line2D ProjectInfiniteLine(const CameraIntrinsics& K, const Pose& P, const PluckerLine& L) {
  const Mat3 R = P.R();
  const Vec3 d_cam = R * L.d();
  const Vec3 m_cam = R * L.m() + P.translation().cross(d_cam);
  return Line2D::FromCoefficients(K.LineProjectionMatrix() * m_cam);
}

PluckerLine PluckerFromEndpoints(const Vec3& p, const Vec3& q) {
  const Vec3 v = q - p;
  const double n = v.norm();
  if (!(n > 1e-9)) Throw(ErrorCode::kDegenerateSegment, "segment endpoints coincide");
  const Vec3 d = v / n;
  return PluckerLine(d, p.cross(d));
}

OrthonormalLine PluckerToOrthonormal(const PluckerLine& L) {
  const Vec3& d = L.d();
  const Vec3& m = L.m();
  const double dn = d.norm();
  const double mn = m.norm();
  OrthonormalLine O;
  Vec3 u1;
  if (mn < 1e-15) {
    // Line through the origin: any unit vector orthogonal to d.
    u1 = d.unitOrthogonal();
    O.theta = std::numbers::pi / 2.0;
  } else {
    u1 = m / mn;
    O.theta = std::atan2(dn, mn);
  }
  const Vec3 u2 = d / dn;
  O.U.col(0) = u1;
  O.U.col(1) = u2;
  O.U.col(2) = u1.cross(u2).normalized();
  return O;
}

void OrthonormalToMomentDirection(const OrthonormalLine& O, Vec3* moment, Vec3* direction) {
  *moment = std::cos(O.theta) * O.U.col(0);
  *direction = std::sin(O.theta) * O.U.col(1);
}

PluckerLine OrthonormalToPlucker(const OrthonormalLine& O) {
  Vec3 m;
  Vec3 d;
  OrthonormalToMomentDirection(O, &m, &d);
  return PluckerLine(d, m);
}

OrthonormalLine OrthonormalUpdate(const OrthonormalLine& O, const Vec4& delta) {
  OrthonormalLine out;
  out.U = O.U * ExpSO3(delta.head<3>());
  // Re-orthonormalize against accumulated round-off.
  const Eigen::Quaterniond q(out.U);
  out.U = q.normalized().toRotationMatrix();
  out.theta = O.theta + delta(3);
  return out;
}

double PointLineDistance2D(const Vec2& x, const Line2D& l) { return std::abs(l.SignedDistance(x)); }

}  // namespace linesfm
