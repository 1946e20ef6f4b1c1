#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "procrecon/pipeline.hpp"

using namespace procrecon;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

// stdout and stderr together, so messages can be checked whichever stream they go to.
Run run(const std::string& args) {
  const std::string cmd = std::string(PROCRECON_BIN) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("procrecon_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const std::string kData = PROCRECON_DATA;
const std::string kMug = kData + "/presets/dish/mug.json";

}  // namespace

TEST_CASE("generate writes grouped OBJ") {
  const fs::path d = scratch_dir("generate");
  const Run r = run("generate dish " + kMug + " --lod 3 -o " + (d / "mug.obj").string());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const std::string obj = slurp(d / "mug.obj");
  CHECK(obj.find("g body") != std::string::npos);
  CHECK(obj.find("g handle") != std::string::npos);
  const TriangleMesh m = read_obj(d / "mug.obj");
  CHECK(m.triangle_count() > 0);
  CHECK(mesh_problems(m).empty());
}

TEST_CASE("generate rejects a tier out of range") {
  const fs::path d = scratch_dir("tier");
  const Run r = run("generate dish " + kMug + " --lod 9 -o " + (d / "x.obj").string());
  CHECK(r.code == 1);
  CHECK_FALSE(fs::exists(d / "x.obj"));
}

TEST_CASE("generate names an off-grid discrete parameter") {
  const fs::path d = scratch_dir("offgrid");
  std::string text = slurp(kMug);
  const auto at = text.find("\"handle\": 1");
  REQUIRE(at != std::string::npos);
  text.replace(at, 11, "\"handle\": 0.5");
  spit(d / "p.json", text);
  const Run r = run("generate dish " + (d / "p.json").string() + " -o " + (d / "x.obj").string());
  CHECK(r.code == 1);
  CHECK(r.output.find("handle") != std::string::npos);
}

TEST_CASE("evaluate") {
  const fs::path d = scratch_dir("evaluate");
  REQUIRE(run("generate dish " + kMug + " --lod 1 -o " + (d / "a.obj").string()).code == 0);

  SUBCASE("a mesh against itself") {
    const Run r = run("evaluate " + (d / "a.obj").string() + " " + (d / "a.obj").string() + " --views 8 --resolution 64");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("1.000") != std::string::npos);
  }
  SUBCASE("missing file") {
    const Run r = run("evaluate " + (d / "a.obj").string() + " " + (d / "nope.obj").string());
    CHECK(r.code == 1);
    CHECK(r.output.find("nope.obj") != std::string::npos);
  }
}

TEST_CASE("collect-tables") {
  const fs::path d = scratch_dir("tables");

  SUBCASE("zero samples") {
    spit(d / "c.json", R"({"sample_count": 0, "out": "t.json"})");
    CHECK(run("collect-tables dish " + (d / "c.json").string()).code == 1);
    CHECK_FALSE(fs::exists(d / "t.json"));
  }
  SUBCASE("shape and rerun") {
    spit(d / "c.json", R"({"sample_count": 12, "bins": 4, "family_size": 3, "resolution": 32, "seed": 5, "out": "t.json"})");
    const Run r = run("collect-tables dish " + (d / "c.json").string());
    REQUIRE_MESSAGE(r.code == 0, r.output);
    const QualityTables t = QualityTables::load(d / "t.json");
    // One reference view: the shape genes followed by that view's four camera genes.
    CHECK(t.gene_count == find_generator("dish").specs->size() + 4);
    CHECK(t.bins == 4);
    CHECK(t.Q.size() == t.gene_count);
    for (const auto& row : t.Q) CHECK(row.size() == 4);
    const std::string first = slurp(d / "t.json");
    REQUIRE(run("collect-tables dish " + (d / "c.json").string()).code == 0);
    CHECK(slurp(d / "t.json") == first);
  }
}

TEST_CASE("reconstruct") {
  const fs::path d = scratch_dir("reconstruct");
  const GeneratorInfo& gen = find_generator("dish");
  const auto presets = load_presets(kData + "/presets/dish", *gen.specs);

  SUBCASE("missing reference") {
    spit(d / "job.json", R"({"generator": "dish", "references": [{"path": "ref_missing.png"}], "presets_dir": ")" +
                             kData + R"(/presets/dish"})");
    const Run r = run("reconstruct " + (d / "job.json").string());
    CHECK(r.code == 1);
    CHECK(r.output.find("ref_missing.png") != std::string::npos);
  }

  SUBCASE("small job") {
    ParameterVector truth = presets.front().vector;
    for (const auto& p : presets)
      if (p.name == "mug") truth = p.vector;
    Camera cam;
    cam.azimuth = 0.5;
    cam.elevation = 25.0 * M_PI / 180.0;
    cam.fov_y = 40.0 * M_PI / 180.0;
    cam.distance = 3.0;
    cam.width = cam.height = 64;
    const GeneratorOutput out = gen.generate(truth, {gen.max_tier});
    save_mask_png(d / "ref.png", render_generator_view(out, gen, cam));
    const std::string job = R"({"generator": "dish", "references": [{"path": "ref.png"}], "presets_dir": ")" + kData +
                            R"(/presets/dish", "stages": [{"resolution": 64, "method": "memetic", "iterations": 300},
                            {"resolution": 64, "method": "adam", "iterations": 10}], "seed": 3, "out_dir": "OUT"})";
    std::string a = job, b = job;
    a.replace(a.find("OUT"), 3, "out_a");
    b.replace(b.find("OUT"), 3, "out_b");
    spit(d / "a.json", a);
    spit(d / "b.json", b);
    const Run ra = run("reconstruct " + (d / "a.json").string());
    REQUIRE_MESSAGE(ra.code == 0, ra.output);
    REQUIRE(run("reconstruct " + (d / "b.json").string()).code == 0);
    const std::string obj = slurp(d / "out_a" / "result.obj");
    CHECK(obj.find("g body") != std::string::npos);
    CHECK(obj == slurp(d / "out_b" / "result.obj"));
    CHECK(fs::exists(d / "out_a" / "params.json"));
    CHECK(fs::exists(d / "out_a" / "history.csv"));
  }
}
