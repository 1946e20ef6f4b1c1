#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "procrecon/autodiff.hpp"

namespace procrecon {

enum class Part : std::uint8_t {
  Body,
  Handle,
  Wall,
  Window,
  Roof,
  Door,
  Frame,
  Trunk,
  Branch,
  Leaf,
  Unlabeled,
};

std::string_view part_name(Part p);
/// Unknown names map to Part::Unlabeled.
Part part_from_name(std::string_view name);

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<double> positions;  // xyz per vertex
  std::vector<double> normals;    // xyz per vertex, unit length
  std::vector<double> texcoords;  // uv per vertex, in [0,1]
  std::vector<Triangle> indices;
  std::vector<Part> part_labels;  // one per triangle

  std::size_t vertex_count() const { return positions.size() / 3; }
  std::size_t triangle_count() const { return indices.size(); }
  Vec3 vertex(std::size_t i) const { return {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]}; }
  std::size_t count_part(Part p) const;
};

/// Empty when every TriangleMesh invariant holds.
std::vector<std::string> mesh_problems(const TriangleMesh& mesh);

/// Area-weighted vertex normals; isolated vertices get +Y.
void compute_vertex_normals(TriangleMesh& mesh);

/// Sum of signed tetrahedron volumes against the origin (positive for outward winding).
double signed_volume(const TriangleMesh& mesh);

struct Bounds {
  Vec3 lo, hi;
  Vec3 center() const { return (lo + hi) * 0.5; }
};
Bounds mesh_bounds(const TriangleMesh& mesh);

/// Indices of the triangles whose label is not in `excluded`.
std::vector<Triangle> select_triangles(const TriangleMesh& mesh, std::span<const Part> excluded = {});

void write_obj(std::ostream& out, const TriangleMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
/// Reads v/vt/vn/f records and `g` groups; polygons are fan-triangulated.
TriangleMesh read_obj(std::istream& in);
TriangleMesh read_obj(const std::filesystem::path& path);

}  // namespace procrecon
