#pragma once

#include <array>
#include <span>

#include <Eigen/Core>

namespace beaconsync {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Tolerance used when checking orthonormality and det(R) = +1.
inline constexpr double kPoseTolerance = 1e-9;
/// Compose re-orthonormalizes its rotation once ||R^T R - I||_max exceeds this.
inline constexpr double kOrthoDriftLimit = 1e-12;

/// Number of doubles in the serialized form: row-major rotation, then translation.
inline constexpr std::size_t kPoseArraySize = 12;
using PoseArray = std::array<double, kPoseArraySize>;

/// Largest absolute entry of R^T R - I.
double orthonormality_error(const Mat3& r);
/// True when `r` is a proper rotation within `tol`.
bool is_rotation(const Mat3& r, double tol = kPoseTolerance);
/// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
Mat3 orthonormalize(const Mat3& r);

/// Proper rigid transform x -> R x + t. Translation in metres.
///
/// The rotation is stored separately from the translation so the invariants
/// can be checked; 4x4 conversion is provided for callers that need it.
class RigidPose {
 public:
  RigidPose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidPose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidPose identity() { return {}; }
  static RigidPose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidPose from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }

  /// Builds a pose and throws InvalidPose when the rotation is not proper.
  static RigidPose checked(const Mat3& rotation, const Vec3& translation);

  static RigidPose from_matrix4(const Mat4& m);
  Mat4 to_matrix4() const;

  /// Throws InvalidPose on non-finite values or a non-rotation block.
  static RigidPose from_array(std::span<const double> values);
  PoseArray to_array() const;

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& point) const { return rotation_ * point + translation_; }

  bool is_valid(double tol = kPoseTolerance) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Pose of an anchor expressed in a reference (beacon) frame.
class RelativeTransform {
 public:
  RelativeTransform() = default;
  explicit RelativeTransform(const RigidPose& offset) : offset_(offset) {}

  const RigidPose& offset() const { return offset_; }

 private:
  RigidPose offset_;
};

/// Magnetic heading in radians, clockwise from magnetic north seen from above,
/// normalized to [0, 2pi).
struct HeadingReading {
  double magnetic_heading = 0.0;
  double timestamp = 0.0;

  static HeadingReading make(double heading, double timestamp);
};

double normalize_angle(double radians);

RigidPose invert(const RigidPose& p);
/// Homogeneous product a * b (apply b first, then a).
RigidPose compose(const RigidPose& a, const RigidPose& b);

/// Anchor pose relative to the beacon: beacon^-1 * anchor.
RelativeTransform host_relative(const RigidPose& beacon, const RigidPose& anchor);
/// Anchor pose recovered from a beacon pose: beacon * rel.
RigidPose resolve_anchor(const RigidPose& beacon, const RelativeTransform& rel);

/// Gravity-aligned, magnetic-north-aligned rotation in session coordinates.
///
/// The session frame must have +y up. Camera forward is the camera's -z axis;
/// only its ground-plane projection is used, so camera pitch and roll do not
/// affect the result. The returned columns are (north, up, east).
///
/// Throws DegenerateAzimuth when the forward axis is within 1e-6 of vertical.
Mat3 north_aligned_orientation(const RigidPose& camera, const HeadingReading& heading);

RigidPose make_reference_pose(const Vec3& stable_position, const Mat3& north_rotation);

/// Geodesic angle between two rotations, in [0, pi].
double rotation_angle_between(const Mat3& r1, const Mat3& r2);

/// Right-handed rotation about +y by `radians`.
Mat3 rotation_about_y(double radians);
/// Rotation of `radians` about a unit `axis`.
Mat3 axis_angle(const Vec3& axis, double radians);

}  // namespace beaconsync
