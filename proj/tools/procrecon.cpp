// procrecon: reconstruct, generate, evaluate and collect-tables commands.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "procrecon/pipeline.hpp"

using namespace procrecon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitReconstruction = 2;

int cmd_reconstruct(const std::string& config_path) {
  try {
    const JobConfig job = load_job_config(config_path);
    const ReconstructionResult r = run_job(job);
    const double best = r.stages.empty() ? 0.0 : r.stages.back().best_value;
    std::printf("%s %.6g, wrote %s (%.1f s)\n", r.maximized ? "best fitness" : "best loss", best,
                job.out_dir.string().c_str(), r.seconds);
    return kExitOk;
  } catch (const ReconstructionError& e) {
    std::fprintf(stderr, "reconstruction failed: %s\n", e.what());
    return kExitReconstruction;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}

int cmd_generate(const std::string& gen_id, const std::string& params_path, int lod, const std::string& out) {
  try {
    const GeneratorInfo& gen = find_generator(gen_id);
    std::ifstream in(params_path);
    if (!in) throw IoError("cannot read " + params_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const Preset preset = preset_from_json(ss.str(), *gen.specs);
    TriangleMesh mesh;
    if (gen.differentiable) {
      check_lod(gen, LevelOfDetail{lod});
      mesh = gen.generate(preset.vector, LevelOfDetail{lod}).mesh;
    } else {
      check_lod(gen, LevelOfDetail{lod});
      const auto j = nlohmann::json::parse(ss.str());
      mesh = generate_tree(preset.vector, j.value("seed", std::uint64_t{0}));
    }
    write_obj(std::filesystem::path(out), mesh);
    std::printf("wrote %s (%zu vertices, %zu triangles)\n", out.c_str(), mesh.vertex_count(), mesh.triangle_count());
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}

int cmd_evaluate(const std::string& a, const std::string& b, int views, int resolution) {
  try {
    for (const auto& p : {a, b})
      if (!std::filesystem::exists(p)) throw IoError("mesh file not found: " + p);
    const double iou = evaluate_iou(read_obj(std::filesystem::path(a)), read_obj(std::filesystem::path(b)), views, resolution);
    std::printf("%.3f\n", iou);
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}

int cmd_collect_tables(const std::string& gen_id, const std::string& config_path) {
  try {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot read " + config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    TableCollectionConfig cfg;
    cfg.quality.sample_count = j.value("sample_count", std::size_t{1000});
    cfg.quality.bins = j.value("bins", 16);
    cfg.quality.h = j.value("h", 0.05);
    cfg.quality.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("epsilon")) cfg.quality.epsilon = j.at("epsilon").get<double>();
    cfg.family_size = j.value("family_size", std::size_t{8});
    cfg.resolution = j.value("resolution", 64);
    if (cfg.quality.sample_count == 0) throw ValidationError("sample_count must be positive");
    const std::filesystem::path base = std::filesystem::path(config_path).parent_path();
    std::filesystem::path out = j.value("out", std::string("tables.json"));
    if (!out.is_absolute()) out = base / out;
    const QualityTables t = collect_generator_tables(gen_id, cfg);
    t.save(out);
    if (t.degenerate) std::fprintf(stderr, "warning: every sampled fitness was equal; Q tables are zero\n");
    std::printf("wrote %s (%zu genes x %d bins, %zu samples)\n", out.string().c_str(), t.gene_count, t.bins, t.sample_count);
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct procedural models from silhouette masks"};
  app.require_subcommand(1);

  std::string config;
  auto* rec = app.add_subcommand("reconstruct", "Run a reconstruction job");
  rec->add_option("config", config, "Job config JSON")->required();

  std::string gen_id, params_path, out = "out.obj";
  int lod = 0;
  auto* gen = app.add_subcommand("generate", "Generate a mesh from a parameter file");
  gen->add_option("generator", gen_id, "Generator id (dish, building, tree)")->required();
  gen->add_option("params", params_path, "Parameter JSON")->required();
  gen->add_option("--lod", lod, "Level-of-detail tier");
  gen->add_option("-o,--output", out, "Output OBJ path");

  std::string mesh_a, mesh_b;
  int views = 64, resolution = 256;
  auto* ev = app.add_subcommand("evaluate", "Mean silhouette IoU of two meshes");
  ev->add_option("a", mesh_a, "First OBJ")->required();
  ev->add_option("b", mesh_b, "Second OBJ")->required();
  ev->add_option("--views", views, "Number of viewpoints");
  ev->add_option("--resolution", resolution, "Render resolution");

  std::string table_gen, table_config;
  auto* ct = app.add_subcommand("collect-tables", "Collect mutation quality tables");
  ct->add_option("generator", table_gen, "Generator id")->required();
  ct->add_option("config", table_config, "Collection config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  if (*rec) return cmd_reconstruct(config);
  if (*gen) return cmd_generate(gen_id, params_path, lod, out);
  if (*ev) return cmd_evaluate(mesh_a, mesh_b, views, resolution);
  if (*ct) return cmd_collect_tables(table_gen, table_config);
  return kExitUsage;
}
