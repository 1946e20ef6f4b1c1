#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "procrecon/autodiff.hpp"

namespace procrecon {

/// Orbit camera: the eye sits at `target + distance * (cos el sin az, sin el, cos el cos az)`,
/// looks at `target` with +Y up. Azimuth 0 / elevation 0 is on the +z axis.
struct Camera {
  double azimuth = 0.0;
  double elevation = 0.0;
  double distance = 3.0;
  Vec3 target{};
  double fov_y = 0.7;
  int width = 128;
  int height = 128;

  Vec3 eye() const;
  Camera with_resolution(int w, int h) const {
    Camera c = *this;
    c.width = w;
    c.height = h;
    return c;
  }
};

/// Throws ValidationError when distance <= 0, fov_y outside (0, pi), |elevation| >= pi/2 or
/// the resolution is empty.
void validate_camera(const Camera& cam);

/// The four optimizable camera degrees of freedom, in gradient order.
enum CameraDof : std::size_t { kAzimuth, kElevation, kDistance, kFovY, kCameraDofCount };

inline constexpr double kNearPlaneFraction = 1e-3;

/// Pixel-space projection: x right, y down, pixel (i, j) spans [i, i+1) x [j, j+1).
/// `depth` is the distance along the viewing direction; points with depth below the near plane
/// are not visible.
template <class T>
struct Projected {
  T x, y, depth;
};

template <class T>
Projected<T> project(const Vec3T<T>& p, const T& azimuth, const T& elevation, const T& distance,
                     const Vec3T<T>& target, const T& fov_y, int width, int height) {
  using std::cos;
  using std::sin;
  using std::tan;
  const T ca = cos(azimuth), sa = sin(azimuth), ce = cos(elevation), se = sin(elevation);
  const Vec3T<T> dir{ce * sa, se, ce * ca};
  const Vec3T<T> q = p - (target + dir * distance);
  const Vec3T<T> right{ca, T(0.0), -sa};
  const Vec3T<T> up{-(sa * se), ce, -(ca * se)};
  const T xc = dot(q, right);
  const T yc = dot(q, up);
  const T zc = -dot(q, dir);
  const T t = tan(fov_y * 0.5);
  const double aspect = static_cast<double>(width) / height;
  const T ndc_x = xc / (zc * t * aspect);
  const T ndc_y = yc / (zc * t);
  return {(ndc_x + 1.0) * (0.5 * width), (1.0 - ndc_y) * (0.5 * height), zc};
}

inline Projected<double> project(const Vec3& p, const Camera& cam) {
  return project<double>(p, cam.azimuth, cam.elevation, cam.distance, cam.target, cam.fov_y, cam.width, cam.height);
}

}  // namespace procrecon
