#include "procrecon/camera.hpp"

#include <numbers>
#include <string>

namespace procrecon {

Vec3 Camera::eye() const {
  Vec3 dir{std::cos(elevation) * std::sin(azimuth), std::sin(elevation), std::cos(elevation) * std::cos(azimuth)};
  return target + dir * distance;
}

void validate_camera(const Camera& cam) {
  if (!(cam.distance > 0.0)) throw ValidationError("degenerate camera: distance must be positive");
  if (!(cam.fov_y > 0.0 && cam.fov_y < std::numbers::pi)) throw ValidationError("camera fov_y outside (0, pi)");
  if (!(std::abs(cam.elevation) < std::numbers::pi / 2)) throw ValidationError("camera elevation outside (-pi/2, pi/2)");
  if (cam.width <= 0 || cam.height <= 0) throw ValidationError("camera resolution must be positive");
}

}  // namespace procrecon
