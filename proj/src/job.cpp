// Job files: JSON configuration in, reconstruction artefacts out.

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "procrecon/pipeline.hpp"

namespace procrecon {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_char(const json& j, const char* key, std::optional<double>& out) {
  if (j.contains(key)) out = j.at(key).get<double>();
}

}  // namespace

JobConfig parse_job_config(const std::string& text, const std::filesystem::path& base_dir) {
  JobConfig job;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("job config is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw ValidationError("job config must be a JSON object");
    job.generator = j.at("generator").get<std::string>();
    find_generator(job.generator);
    for (const auto& r : j.at("references")) {
      ReferenceSpec ref;
      if (r.is_string()) {
        ref.path = resolve(base_dir, r.get<std::string>());
      } else {
        ref.path = resolve(base_dir, r.at("path").get<std::string>());
        ref.type = r.value("type", std::string("mask"));
      }
      if (ref.type != "mask" && ref.type != "rgb" && ref.type != "semantic")
        throw ValidationError("reference type must be mask, rgb or semantic, got '" + ref.type + "'");
      if (!std::filesystem::exists(ref.path)) throw IoError("reference file not found: " + ref.path.string());
      job.references.push_back(ref);
    }
    if (job.references.empty()) throw ValidationError("job config lists no references");
    if (j.contains("presets_dir")) job.presets_dir = resolve(base_dir, j.at("presets_dir").get<std::string>());
    if (j.contains("stages")) {
      for (const auto& s : j.at("stages")) {
        StageConfig st;
        st.resolution = s.value("resolution", 128);
        st.method = stage_method_from_name(s.value("method", std::string("memetic")));
        st.iterations = s.value("iterations", std::size_t{0});
        if (s.contains("lod")) st.lod = s.at("lod").get<int>();
        check_stage(st);
        job.stages.push_back(st);
      }
      if (job.stages.empty()) throw ValidationError("job config has an empty stage list");
    }
    if (j.contains("ga")) {
      const json& g = j.at("ga");
      read_opt(g, "population_size", job.ga.population_size);
      read_opt(g, "generations", job.ga.generations);
      read_opt(g, "mutation_chance", job.ga.mutation_chance);
      read_opt(g, "mutation_genes", job.ga.mutation_genes);
      read_opt(g, "mutation_candidates", job.ga.mutation_candidates);
      read_opt(g, "genes_scale", job.ga.genes_scale);
      read_opt(g, "h", job.ga.h);
      read_opt(g, "bins", job.ga.bins);
      read_opt(g, "tree_depth", job.ga.tree_depth);
      read_opt(g, "elite_carryover", job.ga.elite_carryover);
      read_opt(g, "memetic_budget", job.memetic_budget);
      if (g.contains("tables")) job.tables_path = resolve(base_dir, g.at("tables").get<std::string>());
      check_ga_config(job.ga);
    }
    if (j.contains("characteristics")) {
      const json& c = j.at("characteristics");
      read_char(c, "vertex_count", job.characteristics.vertex_count);
      read_char(c, "height", job.characteristics.height);
      read_char(c, "width", job.characteristics.width);
      read_char(c, "branch_density", job.characteristics.branch_density);
      read_char(c, "leaf_density", job.characteristics.leaf_density);
      read_char(c, "leaf_size", job.characteristics.leaf_size);
    }
    job.seed = j.value("seed", std::uint64_t{0});
    job.out_dir = resolve(base_dir, j.value("out_dir", std::string("out")));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("job config: ") + e.what());
  } catch (const NotFoundError& e) {
    throw ValidationError(e.what());
  }
  return job;
}

JobConfig load_job_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read job config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_job_config(ss.str(), path.parent_path());
}

std::string cameras_to_json(const std::vector<Camera>& cams) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Camera& c : cams) {
    nlohmann::ordered_json j;
    j["azimuth"] = c.azimuth;
    j["elevation"] = c.elevation;
    j["distance"] = c.distance;
    j["fov_y"] = c.fov_y;
    j["target"] = {c.target.x, c.target.y, c.target.z};
    j["width"] = c.width;
    j["height"] = c.height;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

ReconstructionResult run_job(const JobConfig& job) {
  const GeneratorInfo& gen = find_generator(job.generator);
  ReconstructionConfig cfg;
  cfg.seed = job.seed;
  cfg.ga = job.ga;
  cfg.ga.rng_seed = job.seed;
  cfg.memetic.ga = job.ga;
  cfg.memetic.evaluation_budget = job.memetic_budget;
  if (job.tables_path) cfg.tables = QualityTables::load(*job.tables_path);

  ReconstructionResult result;
  if (!gen.differentiable) {
    if (job.references.size() != 1) throw ValidationError("tree reconstruction takes exactly one reference image");
    const ReferenceSpec& ref = job.references.front();
    Image8 rgb = ref.type == "semantic" ? semantic_to_color(load_semantic_png(ref.path)) : read_png(ref.path, PngLoad::Rgb);
    cfg.stages = job.stages.empty() ? std::vector<StageConfig>{{rgb.width, StageMethod::TreeGA, 50000, std::nullopt}}
                                    : job.stages;
    result = reconstruct_tree(rgb, job.characteristics, cfg);
  } else {
    std::vector<SilhouetteMask> refs;
    for (const auto& r : job.references) refs.push_back(load_mask_png(r.path));
    if (!job.presets_dir.empty()) {
      for (auto& p : load_presets(job.presets_dir, *gen.specs)) {
        if (!p.generator_id.empty() && p.generator_id != gen.id)
          throw ValidationError("preset '" + p.name + "' belongs to generator '" + p.generator_id + "'");
        cfg.presets.push_back(std::move(p));
      }
    }
    if (!job.stages.empty()) cfg.stages = job.stages;
    result = reconstruct_differentiable(job.generator, refs, cfg);
  }

  std::filesystem::create_directories(job.out_dir);
  write_obj(job.out_dir / "result.obj", result.mesh);
  {
    nlohmann::ordered_json p = nlohmann::ordered_json::parse(preset_to_json({"result", gen.id, result.best_params}));
    if (!gen.differentiable) p["seed"] = result.tree_seed;
    write_text(job.out_dir / "params.json", p.dump(2) + "\n");
  }
  write_text(job.out_dir / "cameras.json", cameras_to_json(result.best_cameras));
  {
    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << (result.maximized ? "evaluation,stage,fitness,best_fitness\n" : "evaluation,stage,loss,best_loss\n");
    for (const auto& h : result.history) csv << h.evaluation << ',' << h.stage + 1 << ',' << h.value << ',' << h.best << '\n';
    write_text(job.out_dir / "history.csv", csv.str());
  }
  for (std::size_t s = 0; s < result.stages.size(); ++s) {
    const StageResult& st = result.stages[s];
    for (std::size_t v = 0; v < st.masks.size(); ++v)
      save_mask_png(job.out_dir / ("stage_" + std::to_string(s + 1) + "_view_" + std::to_string(v + 1) + ".png"), st.masks[v]);
    if (st.semantic) save_semantic_png(job.out_dir / ("stage_" + std::to_string(s + 1) + "_semantic.png"), *st.semantic);
  }
  return result;
}

}  // namespace procrecon
