#pragma once

// Silhouette rasterizer. The forward pass is a hard supersampled coverage test with no depth
// buffer; geometry gradients come only from Monte Carlo samples along silhouette edges.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "procrecon/camera.hpp"
#include "procrecon/mesh.hpp"

namespace procrecon {

struct SilhouetteMask {
  int width = 0;
  int height = 0;
  std::vector<double> coverage;  // row-major, values in [0,1]

  SilhouetteMask() = default;
  SilhouetteMask(int w, int h, double fill = 0.0)
      : width(w), height(h), coverage(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t pixel_count() const { return coverage.size(); }
  double at(int x, int y) const { return coverage[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return coverage[static_cast<std::size_t>(y) * width + x]; }
  double sum() const;
};

struct RenderOptions {
  int samples_per_axis = 4;   // coverage = covered subsamples / samples_per_axis^2
  bool cull_backfaces = true;  // only front-facing (counter-clockwise) triangles cover
  double edge_samples_per_pixel = 4.0;
};

struct RenderGradients {
  std::vector<double> d_pos;                      // 3 per vertex
  std::array<double, kCameraDofCount> d_camera{};  // azimuth, elevation, distance, fov_y
  std::array<double, 3> d_target{};
};

SilhouetteMask render_silhouette(std::span<const double> positions, std::span<const Triangle> indices,
                                 const Camera& cam, const RenderOptions& opts = {});
inline SilhouetteMask render_silhouette(const TriangleMesh& mesh, const Camera& cam, const RenderOptions& opts = {}) {
  return render_silhouette(mesh.positions, mesh.indices, cam, opts);
}

/// Gradient of sum_p d_pixels[p] * coverage[p] with respect to vertex positions and camera.
/// `seed` fixes the edge sample positions.
RenderGradients render_backward(std::span<const double> positions, std::span<const Triangle> indices,
                                const Camera& cam, std::span<const double> d_pixels, std::uint64_t seed = 0,
                                const RenderOptions& opts = {});

/// Mean squared difference and its gradient with respect to `rendered`.
std::pair<double, std::vector<double>> mse(const SilhouetteMask& rendered, const SilhouetteMask& reference);

double silhouette_iou(const SilhouetteMask& a, const SilhouetteMask& b, double threshold = 0.5);

/// Fibonacci-sphere cameras around `target`; n = 1 gives a camera on +z.
std::vector<Camera> uniform_viewpoints(int n, double distance, const Vec3& target, double fov_y = 0.7,
                                       int width = 256, int height = 256);

/// Area-weighted resampling to a new resolution.
SilhouetteMask resample(const SilhouetteMask& mask, int width, int height);

}  // namespace procrecon
