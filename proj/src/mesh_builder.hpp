#pragma once

// Accumulates dual-valued vertices and labeled triangles for the differentiable generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "procrecon/generators.hpp"

namespace procrecon::detail {

class DualMeshBuilder {
 public:
  explicit DualMeshBuilder(std::size_t param_count) : param_count_(param_count) {}

  std::uint32_t vertex(const DVec3& p, double u = 0.0, double v = 0.0) {
    verts_.push_back(p);
    uv_.push_back(std::clamp(u, 0.0, 1.0));
    uv_.push_back(std::clamp(v, 0.0, 1.0));
    return static_cast<std::uint32_t>(verts_.size() - 1);
  }

  void triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, Part part) {
    tris_.push_back({a, b, c});
    parts_.push_back(part);
  }

  // Emits a, b, c, d as two triangles ordered so the face normal agrees with `facing`.
  void quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d, const Vec3& facing, Part part) {
    Vec3 pa = value_of(verts_[a]), pb = value_of(verts_[b]), pc = value_of(verts_[c]), pd = value_of(verts_[d]);
    Vec3 n = cross(pc - pa, pd - pb);
    if (dot(n, facing) >= 0) {
      triangle(a, b, c, part);
      triangle(a, c, d, part);
    } else {
      triangle(a, c, b, part);
      triangle(a, d, c, part);
    }
  }

  void triangle_facing(std::uint32_t a, std::uint32_t b, std::uint32_t c, const Vec3& facing, Part part) {
    Vec3 pa = value_of(verts_[a]), pb = value_of(verts_[b]), pc = value_of(verts_[c]);
    if (dot(cross(pb - pa, pc - pa), facing) >= 0)
      triangle(a, b, c, part);
    else
      triangle(a, c, b, part);
  }

  const DVec3& position(std::uint32_t i) const { return verts_[i]; }
  std::size_t vertex_count() const { return verts_.size(); }

  GeneratorOutput finish(const DVec3& anchor) {
    GeneratorOutput out;
    auto geom = assemble_jacobian(verts_, param_count_);
    out.mesh.positions = std::move(geom.positions);
    out.jacobian = std::move(geom.jacobian);
    out.mesh.texcoords = std::move(uv_);
    out.mesh.indices = std::move(tris_);
    out.mesh.part_labels = std::move(parts_);
    compute_vertex_normals(out.mesh);
    auto a = assemble_jacobian(std::span<const DVec3>(&anchor, 1), param_count_);
    out.anchor = {a.positions[0], a.positions[1], a.positions[2]};
    out.anchor_jacobian = std::move(a.jacobian);
    return out;
  }

 private:
  std::size_t param_count_;
  std::vector<DVec3> verts_;
  std::vector<double> uv_;
  std::vector<Triangle> tris_;
  std::vector<Part> parts_;
};

/// Uniform Catmull-Rom segment between p1 and p2 at t in [0,1].
template <class T>
T catmull_rom(const T& p0, const T& p1, const T& p2, const T& p3, double t) {
  double t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3);
}

/// d/dt of catmull_rom.
template <class T>
T catmull_rom_tangent(const T& p0, const T& p1, const T& p2, const T& p3, double t) {
  double t2 = t * t;
  return 0.5 * ((p2 - p0) + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (2.0 * t) +
                (3.0 * p1 - p0 - 3.0 * p2 + p3) * (3.0 * t2));
}

/// Open Catmull-Rom through `pts` with reflected end tangents; u in [0,1] spans the whole curve.
template <class T>
struct OpenSpline {
  std::vector<T> pts;

  const T at(int i) const {
    int n = static_cast<int>(pts.size());
    if (i < 0) return 2.0 * pts[0] - pts[1];
    if (i >= n) return 2.0 * pts[n - 1] - pts[n - 2];
    return pts[i];
  }
  void locate(double u, int& seg, double& t) const {
    int segments = static_cast<int>(pts.size()) - 1;
    double s = std::clamp(u, 0.0, 1.0) * segments;
    seg = std::min(static_cast<int>(std::floor(s)), segments - 1);
    t = s - seg;
  }
  T eval(double u) const {
    int i;
    double t;
    locate(u, i, t);
    return catmull_rom(at(i - 1), at(i), at(i + 1), at(i + 2), t);
  }
  /// Derivative with respect to u.
  T tangent(double u) const {
    int i;
    double t;
    locate(u, i, t);
    return catmull_rom_tangent(at(i - 1), at(i), at(i + 1), at(i + 2), t) *
           static_cast<double>(pts.size() - 1);
  }
};

}  // namespace procrecon::detail
