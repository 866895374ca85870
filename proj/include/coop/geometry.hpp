#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace coop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// World frames are z-up (East-North-Up). Camera frames are z-forward,
// x-right, y-down.

inline constexpr double kRotationTolerance = 1e-9;
inline constexpr double kHorizonEpsilon = 1e-3;
inline constexpr double kMinCameraDepth = 1e-9;

bool is_rotation(const Mat3& r, double tolerance = kRotationTolerance);

Mat3 yaw_rotation(double yaw_rad);

/// Camera-to-world rotation for a camera whose optical axis has the given
/// heading (yaw, counter-clockwise from +x) and downward pitch.
Mat3 camera_rotation(double yaw_rad, double pitch_down_rad);

/// SE(3) pose mapping points from a local frame into a parent frame:
/// p_parent = rotation * p_local + translation.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Throws InvalidArgument unless the rotation is orthonormal with det +1
  /// and every entry is finite.
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform from_yaw(double yaw_rad, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& point) const { return rotation_ * point + translation_; }
  RigidTransform inverse() const;

  /// Heading of the rotated x axis, atan2(R10, R00).
  double yaw() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// (a ∘ b)(p) = a(b(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  RigidTransform pose_cam2glb;

  void validate() const;
  Mat3 intrinsics() const;
  Mat3 inverse_intrinsics() const;
  Vec3 center() const { return pose_cam2glb.translation(); }
  double height() const { return pose_cam2glb.translation().z(); }
  /// Optical axis expressed in the world frame.
  Vec3 forward() const { return pose_cam2glb.rotation().col(2); }
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// K⁻¹·[u, v, 1]ᵀ; the returned ray has camera-frame z exactly 1.
Vec3 unproject_pixel(const CameraModel& camera, double u, double v);

/// Pinhole projection of a world point. Throws BehindCamera when the
/// camera-frame depth is not positive.
PixelProjection project_point(const CameraModel& camera, const Vec3& point_glb);

/// z component of the unit-depth ray after rotation into the virtual frame
/// (camera-centred, axes parallel to the world).
double ray_virtual_height(const CameraModel& camera, double u, double v);

/// Depth along the optical axis of the point on the pixel ray whose world
/// height equals `target_height`:
///
///   depth = (target_height - camera_height) / (R_cam2glb · K⁻¹ · [u,v,1]ᵀ)_z
///
/// Throws DegenerateGeometry when |ray virtual height| < epsilon and
/// NegativeDepth when the ray never reaches the target height.
double height_derived_depth(const CameraModel& camera, double u, double v,
                            double target_height, double epsilon = kHorizonEpsilon);

struct PixelProposal {
  double u = 0.0;
  double v = 0.0;
  double confidence = 1.0;
  std::optional<double> predicted_global_height;
  std::optional<double> predicted_depth;
};

enum class LiftStrategy { HeightDerived, DirectDepth };

std::string_view to_string(LiftStrategy strategy);

/// Lifts a 2D proposal to a 3D point in the agent frame given by
/// `agent_from_glb` (world → agent).
Vec3 lift_proposal(const CameraModel& camera, const PixelProposal& proposal,
                   LiftStrategy strategy, const RigidTransform& agent_from_glb,
                   double epsilon = kHorizonEpsilon);

// Flat camera record: fx, fy, cx, cy, rotation (row-major), translation.
using CameraRecord = std::array<double, 16>;

CameraRecord to_record(const CameraModel& camera);
CameraModel camera_from_record(std::span<const double, 16> record);

/// "fx=… fy=… cx=… cy=… r00=… … r22=… tx=… ty=… tz=…" with 17 significant
/// digits; parsing accepts the keys in any order.
std::string to_key_values(const CameraModel& camera);
CameraModel camera_from_key_values(std::string_view text);

}  // namespace coop
