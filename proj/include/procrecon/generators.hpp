#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "procrecon/autodiff.hpp"
#include "procrecon/mesh.hpp"
#include "procrecon/params.hpp"

namespace procrecon {

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete fidelity tier; 0 is the coarsest.
struct LevelOfDetail {
  int tier = 0;
};

/// Mesh plus d(position)/d(P). The anchor is the point cameras orbit around; it moves with
/// the geometry so that framing does not depend on a guess of the object's extent.
struct GeneratorOutput {
  TriangleMesh mesh;
  Jacobian jacobian;
  Vec3 anchor;
  Jacobian anchor_jacobian;  // 3 x P
};

// Dish: surface of revolution of a thick Catmull-Rom profile plus an optional handle.
inline constexpr int kDishControlCount = 8;
inline constexpr int kDishHandleOffsets = 4;
const ParamSpecList& dish_specs();
GeneratorOutput generate_dish(const ParameterVector& p, LevelOfDetail lod);

/// (profile spline samples, lathe segments) for a dish tier.
struct DishResolution {
  int spline_samples;
  int lathe_segments;
};
DishResolution dish_resolution(LevelOfDetail lod);

// Building: box with per-floor window grid, a front door and a flat or gabled roof.
const ParamSpecList& building_specs();
GeneratorOutput generate_building(const ParameterVector& p, LevelOfDetail lod);

// Tree: stochastic rule-based branching; not differentiable.
const ParamSpecList& tree_specs();

struct TreeModel {
  TriangleMesh mesh;
  std::size_t graph_vertex_count = 0;  // skeleton joints, including branch tips
  std::size_t leaf_count = 0;
  double total_branch_length = 0.0;
};
TreeModel generate_tree_model(const ParameterVector& p, std::uint64_t seed);
TriangleMesh generate_tree(const ParameterVector& p, std::uint64_t seed);

using DifferentiableGenerator = std::function<GeneratorOutput(const ParameterVector&, LevelOfDetail)>;

struct GeneratorInfo {
  std::string id;
  const ParamSpecList* specs = nullptr;
  int min_tier = 0;
  int max_tier = 0;
  bool differentiable = false;
  /// Parts left out of silhouette masks (building windows are holes in the reference masks).
  std::vector<Part> mask_excluded_parts;
  /// Lowest tier whose geometry exposes every discrete parameter in the silhouette.
  int first_stage_tier = 0;
  DifferentiableGenerator generate;  // empty for non-differentiable generators
};

const std::vector<GeneratorInfo>& generator_registry();
/// Throws NotFoundError for unknown ids.
const GeneratorInfo& find_generator(const std::string& id);

/// Throws ValidationError when the tier is outside the generator's range.
void check_lod(const GeneratorInfo& info, LevelOfDetail lod);

}  // namespace procrecon
