#include "beaconsync/pose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "beaconsync/error.hpp"

namespace beaconsync {

namespace {

constexpr double kVerticalLimit = 1e-6;

}  // namespace

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  return orthonormality_error(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

RigidPose RigidPose::checked(const Mat3& rotation, const Vec3& translation) {
  if (!translation.allFinite()) throw InvalidPose("translation is not finite");
  if (!is_rotation(rotation)) {
    throw InvalidPose("rotation is not proper (ortho error " +
                      std::to_string(orthonormality_error(rotation)) + ", det " +
                      std::to_string(rotation.determinant()) + ")");
  }
  return {rotation, translation};
}

RigidPose RigidPose::from_matrix4(const Mat4& m) {
  if (m.row(3).cwiseAbs().head<3>().maxCoeff() > kPoseTolerance ||
      std::abs(m(3, 3) - 1.0) > kPoseTolerance) {
    throw InvalidPose("bottom row of a homogeneous transform must be (0, 0, 0, 1)");
  }
  return checked(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Mat4 RigidPose::to_matrix4() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidPose RigidPose::from_array(std::span<const double> values) {
  if (values.size() != kPoseArraySize) {
    throw InvalidPose("expected 12 numbers, got " + std::to_string(values.size()));
  }
  Mat3 r;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) r(row, col) = values[static_cast<std::size_t>(row * 3 + col)];
  return checked(r, Vec3(values[9], values[10], values[11]));
}

PoseArray RigidPose::to_array() const {
  PoseArray out{};
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) out[static_cast<std::size_t>(row * 3 + col)] = rotation_(row, col);
  out[9] = translation_.x();
  out[10] = translation_.y();
  out[11] = translation_.z();
  return out;
}

bool RigidPose::is_valid(double tol) const {
  return translation_.allFinite() && is_rotation(rotation_, tol);
}

double normalize_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2pi.
  if (a >= kTwoPi) a = 0.0;
  return a;
}

HeadingReading HeadingReading::make(double heading, double timestamp) {
  return {normalize_angle(heading), timestamp};
}

RigidPose invert(const RigidPose& p) {
  const Mat3 rt = p.rotation().transpose();
  return {rt, -(rt * p.translation())};
}

RigidPose compose(const RigidPose& a, const RigidPose& b) {
  Mat3 r = a.rotation() * b.rotation();
  if (orthonormality_error(r) > kOrthoDriftLimit) r = orthonormalize(r);
  return {r, a.rotation() * b.translation() + a.translation()};
}

RelativeTransform host_relative(const RigidPose& beacon, const RigidPose& anchor) {
  return RelativeTransform(compose(invert(beacon), anchor));
}

RigidPose resolve_anchor(const RigidPose& beacon, const RelativeTransform& rel) {
  return compose(beacon, rel.offset());
}

Mat3 rotation_about_y(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  Mat3 r;
  r << c, 0.0, s,  //
      0.0, 1.0, 0.0,  //
      -s, 0.0, c;
  return r;
}

Mat3 axis_angle(const Vec3& axis, double radians) {
  return Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
}

Mat3 north_aligned_orientation(const RigidPose& camera, const HeadingReading& heading) {
  const Vec3 forward = -camera.rotation().col(2);
  const Vec3 ground(forward.x(), 0.0, forward.z());
  const double ground_norm = ground.norm();
  if (!(ground_norm > kVerticalLimit)) {
    throw DegenerateAzimuth("camera forward is vertical; retry with a later camera pose");
  }
  // The device faces `heading` clockwise of north, so north is the projected
  // forward turned back by the same angle: +heading about +y.
  const Vec3 north = rotation_about_y(heading.magnetic_heading) * (ground / ground_norm);
  const Vec3 up = Vec3::UnitY();
  const Vec3 east = north.cross(up);

  Mat3 r;
  r.col(0) = north;
  r.col(1) = up;
  r.col(2) = east;
  return r;
}

RigidPose make_reference_pose(const Vec3& stable_position, const Mat3& north_rotation) {
  return {north_rotation, stable_position};
}

double rotation_angle_between(const Mat3& r1, const Mat3& r2) {
  // Same value as acos((tr(R) - 1) / 2), but atan2 keeps precision near 0 and pi.
  const Mat3 rel = r1.transpose() * r2;
  const double cos_angle = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double sin_angle = std::min(1.0, skew.norm() / 2.0);
  return std::atan2(sin_angle, cos_angle);
}

}  // namespace beaconsync
