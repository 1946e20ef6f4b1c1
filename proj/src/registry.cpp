#include "procrecon/generators.hpp"

namespace procrecon {

const std::vector<GeneratorInfo>& generator_registry() {
  static const std::vector<GeneratorInfo> registry = [] {
    std::vector<GeneratorInfo> r;
    r.push_back({"dish", &dish_specs(), 0, 3, true, {}, 0, generate_dish});
    r.push_back({"building", &building_specs(), 0, 3, true, {Part::Window}, 1, generate_building});
    r.push_back({"tree", &tree_specs(), 0, 0, false, {}, 0, {}});
    return r;
  }();
  return registry;
}

const GeneratorInfo& find_generator(const std::string& id) {
  for (const auto& g : generator_registry())
    if (g.id == id) return g;
  throw NotFoundError("unknown generator '" + id + "'");
}

void check_lod(const GeneratorInfo& info, LevelOfDetail lod) {
  if (lod.tier < info.min_tier || lod.tier > info.max_tier)
    throw ValidationError("LOD tier " + std::to_string(lod.tier) + " outside [" + std::to_string(info.min_tier) +
                          ", " + std::to_string(info.max_tier) + "] for generator '" + info.id + "'");
}

}  // namespace procrecon
