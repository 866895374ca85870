#pragma once

#include <cmath>
#include <numbers>

#include "coop/geometry.hpp"
#include "coop/random.hpp"

namespace coop::testing {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

inline Mat3 random_rotation(Rng& rng) {
  Eigen::Vector4d q(standard_normal(rng), standard_normal(rng), standard_normal(rng), standard_normal(rng));
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

inline RigidTransform random_transform(Rng& rng, double spread = 50.0) {
  return RigidTransform(random_rotation(rng),
                        Vec3(uniform(rng, -spread, spread), uniform(rng, -spread, spread), uniform(rng, -spread, spread)));
}

// Elevated camera looking down between 15° and 80° with a random heading.
inline CameraModel random_high_camera(Rng& rng) {
  CameraModel cam;
  cam.fx = uniform(rng, 500.0, 1500.0);
  cam.fy = cam.fx * uniform(rng, 0.9, 1.1);
  cam.cx = uniform(rng, 300.0, 1000.0);
  cam.cy = uniform(rng, 200.0, 600.0);
  const Vec3 centre(uniform(rng, -100.0, 100.0), uniform(rng, -100.0, 100.0), uniform(rng, 5.0, 60.0));
  cam.pose_cam2glb = RigidTransform(camera_rotation(uniform(rng, -3.0, 3.0), deg(uniform(rng, 15.0, 80.0))), centre);
  return cam;
}

// A ground point in view of `cam`, reached by a ray through a random pixel
// with a clearly downward direction.
inline Vec3 random_visible_point(Rng& rng, const CameraModel& cam, double max_height = 3.0) {
  for (;;) {
    const double u = uniform(rng, 0.0, 2.0 * cam.cx);
    const double v = uniform(rng, 0.0, 2.0 * cam.cy);
    const Vec3 ray = cam.pose_cam2glb.rotation() * unproject_pixel(cam, u, v);
    if (ray.z() > -0.05) continue;
    const double z = uniform(rng, 0.0, max_height);
    const double t = (z - cam.height()) / ray.z();
    if (t <= 0.0 || t > 2000.0) continue;
    return cam.center() + t * ray;
  }
}

}  // namespace coop::testing
