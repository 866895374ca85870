#include "coop/geometry.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "coop/error.hpp"
#include "coop/text.hpp"

namespace coop {

bool is_rotation(const Mat3& r, double tolerance) {
  if (!r.allFinite()) return false;
  const double orth = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth <= tolerance && std::abs(r.determinant() - 1.0) <= tolerance;
}

Mat3 yaw_rotation(double yaw_rad) {
  const double c = std::cos(yaw_rad);
  const double s = std::sin(yaw_rad);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Mat3 camera_rotation(double yaw_rad, double pitch_down_rad) {
  const double cy = std::cos(yaw_rad), sy = std::sin(yaw_rad);
  const double cp = std::cos(pitch_down_rad), sp = std::sin(pitch_down_rad);
  const Vec3 forward(cp * cy, cp * sy, -sp);
  const Vec3 right(sy, -cy, 0.0);
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return r;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  require(is_rotation(rotation_), ErrorKind::InvalidArgument,
          "rotation is not orthonormal with determinant +1");
  require(translation_.allFinite(), ErrorKind::InvalidArgument, "translation is not finite");
}

RigidTransform RigidTransform::from_yaw(double yaw_rad, const Vec3& translation) {
  return RigidTransform(yaw_rotation(yaw_rad), translation);
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return RigidTransform(rt, -(rt * translation_));
}

double RigidTransform::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

void CameraModel::validate() const {
  require(std::isfinite(fx) && fx > 0.0, ErrorKind::InvalidArgument, "camera fx must be positive");
  require(std::isfinite(fy) && fy > 0.0, ErrorKind::InvalidArgument, "camera fy must be positive");
  require(std::isfinite(cx) && std::isfinite(cy), ErrorKind::InvalidArgument,
          "camera principal point must be finite");
}

Mat3 CameraModel::intrinsics() const {
  Mat3 k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraModel::inverse_intrinsics() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx,
       0.0, 1.0 / fy, -cy / fy,
       0.0, 0.0, 1.0;
  return k;
}

Vec3 unproject_pixel(const CameraModel& camera, double u, double v) {
  return Vec3((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0);
}

PixelProjection project_point(const CameraModel& camera, const Vec3& point_glb) {
  const Vec3 p = camera.pose_cam2glb.rotation().transpose() *
                 (point_glb - camera.pose_cam2glb.translation());
  if (!(p.z() > kMinCameraDepth)) fail(ErrorKind::BehindCamera, "point is behind the camera");
  return {camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy, p.z()};
}

double ray_virtual_height(const CameraModel& camera, double u, double v) {
  return camera.pose_cam2glb.rotation().row(2).dot(unproject_pixel(camera, u, v));
}

double height_derived_depth(const CameraModel& camera, double u, double v, double target_height,
                            double epsilon) {
  require(std::isfinite(target_height), ErrorKind::InvalidArgument, "target height is not finite");
  const double ray_z = ray_virtual_height(camera, u, v);
  if (!(std::abs(ray_z) >= epsilon)) {
    fail(ErrorKind::DegenerateGeometry, "pixel ray is too close to the horizon");
  }
  const double depth = (target_height - camera.height()) / ray_z;
  if (!(depth > 0.0)) fail(ErrorKind::NegativeDepth, "pixel ray does not reach the target height");
  return depth;
}

std::string_view to_string(LiftStrategy strategy) {
  return strategy == LiftStrategy::HeightDerived ? "height_derived" : "direct_depth";
}

Vec3 lift_proposal(const CameraModel& camera, const PixelProposal& proposal, LiftStrategy strategy,
                   const RigidTransform& agent_from_glb, double epsilon) {
  double depth = 0.0;
  if (strategy == LiftStrategy::HeightDerived) {
    if (!proposal.predicted_global_height) {
      fail(ErrorKind::MissingPrediction, "height-derived lifting needs a predicted global height");
    }
    depth = height_derived_depth(camera, proposal.u, proposal.v, *proposal.predicted_global_height,
                                 epsilon);
  } else {
    if (!proposal.predicted_depth) {
      fail(ErrorKind::MissingPrediction, "direct-depth lifting needs a predicted depth");
    }
    depth = *proposal.predicted_depth;
  }
  const Vec3 p_cam = depth * unproject_pixel(camera, proposal.u, proposal.v);
  return agent_from_glb.apply(camera.pose_cam2glb.apply(p_cam));
}

CameraRecord to_record(const CameraModel& camera) {
  CameraRecord r{};
  r[0] = camera.fx;
  r[1] = camera.fy;
  r[2] = camera.cx;
  r[3] = camera.cy;
  const Mat3& rot = camera.pose_cam2glb.rotation();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[4 + 3 * i + j] = rot(i, j);
  for (int i = 0; i < 3; ++i) r[13 + i] = camera.pose_cam2glb.translation()(i);
  return r;
}

CameraModel camera_from_record(std::span<const double, 16> r) {
  Mat3 rot;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot(i, j) = r[4 + 3 * i + j];
  CameraModel camera{r[0], r[1], r[2], r[3], RigidTransform(rot, Vec3(r[13], r[14], r[15]))};
  camera.validate();
  return camera;
}

namespace {

constexpr std::array<const char*, 16> kCameraKeys = {
    "fx", "fy", "cx", "cy", "r00", "r01", "r02", "r10", "r11", "r12",
    "r20", "r21", "r22", "tx", "ty", "tz"};

}  // namespace

std::string to_key_values(const CameraModel& camera) {
  const CameraRecord r = to_record(camera);
  std::string out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) out += ' ';
    out += kCameraKeys[i];
    out += '=';
    out += text::exact(r[i]);
  }
  return out;
}

CameraModel camera_from_key_values(std::string_view line) {
  std::map<std::string, double> values;
  for (const std::string& token : text::split_whitespace(line)) {
    const auto eq = token.find('=');
    require(eq != std::string::npos, ErrorKind::InvalidArgument, "camera field without '=': " + token);
    values[token.substr(0, eq)] = text::parse_double(std::string_view(token).substr(eq + 1));
  }
  CameraRecord r{};
  for (std::size_t i = 0; i < kCameraKeys.size(); ++i) {
    const auto it = values.find(kCameraKeys[i]);
    require(it != values.end(), ErrorKind::InvalidArgument,
            std::string("camera record is missing ") + kCameraKeys[i]);
    r[i] = it->second;
  }
  require(values.size() == kCameraKeys.size(), ErrorKind::InvalidArgument,
          "camera record has unknown fields");
  return camera_from_record(r);
}

}  // namespace coop
