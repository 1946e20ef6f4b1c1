#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "procrecon/pipeline.hpp"

using namespace procrecon;

namespace {

TriangleMesh cube(double half, Vec3 c = {}) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.positions.insert(m.positions.end(), {c.x + (i & 1 ? half : -half), c.y + (i & 2 ? half : -half),
                                           c.z + (i & 4 ? half : -half)});
  m.indices = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
               {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  m.part_labels.assign(m.indices.size(), Part::Unlabeled);
  return m;
}

TriangleMesh uv_sphere(double r, int rings, int segments) {
  TriangleMesh m;
  for (int i = 0; i <= rings; ++i) {
    double th = M_PI * i / rings;
    for (int j = 0; j < segments; ++j) {
      double ph = 2 * M_PI * j / segments;
      m.positions.insert(m.positions.end(), {r * std::sin(th) * std::cos(ph), r * std::cos(th), r * std::sin(th) * std::sin(ph)});
    }
  }
  for (int i = 0; i < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      std::uint32_t a = i * segments + j, b = i * segments + (j + 1) % segments;
      std::uint32_t c = a + segments, d = b + segments;
      m.indices.push_back({a, c, b});
      m.indices.push_back({b, c, d});
    }
  m.part_labels.assign(m.indices.size(), Part::Unlabeled);
  return m;
}

double cross2(const std::array<double, 2>& o, const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double hull_area(std::vector<std::array<double, 2>> p) {
  std::sort(p.begin(), p.end());
  std::vector<std::array<double, 2>> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  double a = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& u = h[i];
    const auto& v = h[(i + 1) % h.size()];
    a += u[0] * v[1] - v[0] * u[1];
  }
  return 0.5 * std::abs(a);
}

// Pinhole projection of the normalized cube against the normalized unit sphere: the cube lies
// inside the sphere, so per view IoU = cube hull area / sphere disc area on the image plane.
double cube_sphere_oracle(int n_views) {
  const double D = 3.5;
  const double a = 1.0 / std::sqrt(3.0);
  const double disc = M_PI / (D * D - 1.0);
  double sum = 0;
  for (const Camera& cam : uniform_viewpoints(n_views, D, {0, 0, 0})) {
    Vec3 e = cam.eye();
    Vec3 fwd = e * (-1.0 / D);
    Vec3 right = normalized(cross(fwd, Vec3{0, 1, 0}));
    Vec3 up = cross(right, fwd);
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < 8; ++i) {
      Vec3 q = Vec3{i & 1 ? a : -a, i & 2 ? a : -a, i & 4 ? a : -a} - e;
      double z = dot(q, fwd);
      pts.push_back({dot(q, right) / z, dot(q, up) / z});
    }
    sum += hull_area(pts) / disc;
  }
  return sum / n_views;
}

std::vector<SilhouetteMask> dish_refs(const ParameterVector& p, int views, int res, int tier = 3) {
  const GeneratorInfo& gen = find_generator("dish");
  GeneratorOutput out = gen.generate(p, {tier});
  std::vector<SilhouetteMask> refs;
  for (int v = 0; v < views; ++v) {
    Camera c;
    c.azimuth = 0.5 + 2 * M_PI * v / views;
    c.elevation = 25 * M_PI / 180;
    c.fov_y = 40 * M_PI / 180;
    c.distance = 3.0;
    c.width = c.height = res;
    refs.push_back(render_generator_view(out, gen, c));
  }
  return refs;
}

ParameterVector dish_preset(const std::string& name) {
  return load_preset(PROCRECON_DATA "/presets/dish/" + name + ".json", dish_specs()).vector;
}

std::vector<Preset> dish_pool() { return load_presets(PROCRECON_DATA "/presets/dish", dish_specs()); }

}  // namespace

TEST_CASE("evaluate_iou: identity, normalization and symmetry") {
  TriangleMesh m = generate_dish(dish_preset("mug"), {2}).mesh;
  CHECK(evaluate_iou(m, m) == 1.0);

  TriangleMesh big = m;
  for (double& x : big.positions) x *= 2.0;
  CHECK(evaluate_iou(m, big) == doctest::Approx(1.0).epsilon(1e-9));

  TriangleMesh moved = m;
  for (std::size_t i = 0; i < moved.vertex_count(); ++i) {
    moved.positions[3 * i] += 5.0;
    moved.positions[3 * i + 2] -= 2.5;
  }
  CHECK(evaluate_iou(m, moved) == doctest::Approx(1.0).epsilon(1e-9));

  TriangleMesh other = generate_dish(dish_preset("vase"), {2}).mesh;
  double ab = evaluate_iou(m, other), ba = evaluate_iou(other, m);
  CHECK(ab == ba);
  CHECK(ab < 1.0);
  CHECK_THROWS_AS(evaluate_iou(m, TriangleMesh{}), ValidationError);
}

TEST_CASE("evaluate_iou: cube against sphere matches the projection oracle") {
  double oracle = cube_sphere_oracle(64);
  double iou = evaluate_iou(cube(0.5, {1, 2, 3}), uv_sphere(2.0, 96, 192));
  MESSAGE("oracle " << oracle << " measured " << iou);
  CHECK(std::abs(iou - oracle) < 0.02);
}

TEST_CASE("camera genes round trip") {
  CameraBounds b = camera_bounds(5.0);
  Camera c;
  c.azimuth = 1.2;
  c.elevation = 0.4;
  c.distance = 6.0;
  c.fov_y = 0.9;
  auto g = camera_to_genes(c, b);
  for (double x : g) CHECK((x >= 0.0 && x <= 1.0));
  Camera back = camera_from_genes(g, b, 64, 32);
  CHECK(back.azimuth == doctest::Approx(c.azimuth));
  CHECK(back.elevation == doctest::Approx(c.elevation));
  CHECK(back.distance == doctest::Approx(c.distance));
  CHECK(back.fov_y == doctest::Approx(c.fov_y));
  CHECK(back.width == 64);
}

TEST_CASE("stage configuration") {
  auto s = default_stages();
  REQUIRE(s.size() == 4);
  CHECK(s[0].method == StageMethod::Memetic);
  CHECK(s[0].iterations == 5000);
  CHECK(s[0].resolution == 128);
  CHECK(s[2].resolution == 512);
  CHECK(s[3].method == StageMethod::Adam);
  CHECK(s[3].iterations == 250);
  CHECK_THROWS_AS(check_stage({100, StageMethod::Adam, 10, std::nullopt}), ValidationError);
  CHECK_THROWS_AS(check_stage({32, StageMethod::Adam, 10, std::nullopt}), ValidationError);
  CHECK_THROWS_AS(check_stage({128, StageMethod::Memetic, 0, std::nullopt}), ValidationError);
  CHECK(stage_method_from_name(stage_method_name(StageMethod::TreeGA)) == StageMethod::TreeGA);
}

TEST_CASE("reconstruction rejects empty references and tree generators") {
  ReconstructionConfig cfg;
  cfg.stages = {{64, StageMethod::Memetic, 100, std::nullopt}};
  CHECK_THROWS_AS(reconstruct_differentiable("dish", {SilhouetteMask(64, 64)}, cfg), ReconstructionError);
  CHECK_THROWS(reconstruct_differentiable("tree", dish_refs(dish_preset("cup"), 1, 64), cfg));
  Image8 white{64, 64, 3, std::vector<std::uint8_t>(64 * 64 * 3, 255)};
  cfg.stages = {{64, StageMethod::TreeGA, 100, std::nullopt}};
  CHECK_THROWS_AS(reconstruct_tree(white, {}, cfg), ReconstructionError);
}

TEST_CASE("zero-iteration refinement stages return the first stage's result") {
  auto refs = dish_refs(dish_preset("mug"), 1, 128);
  ReconstructionConfig cfg;
  cfg.presets = dish_pool();
  cfg.seed = 2;
  cfg.stages = {{128, StageMethod::Memetic, 600, std::nullopt}};
  ReconstructionResult one = reconstruct_differentiable("dish", refs, cfg);
  cfg.stages.push_back({256, StageMethod::Adam, 0, std::nullopt});
  cfg.stages.push_back({512, StageMethod::Adam, 0, std::nullopt});
  ReconstructionResult three = reconstruct_differentiable("dish", refs, cfg);
  CHECK(three.best_params.values() == one.best_params.values());
  CHECK(three.best_cameras[0].azimuth == one.best_cameras[0].azimuth);
  CHECK(three.best_cameras[0].distance == one.best_cameras[0].distance);
  CHECK(three.stages.size() == 3);
}

TEST_CASE("dish self-reconstruction at the first-stage resolution") {
  // the true preset is in the pool and the reference uses the first-stage tier; the camera is unknown
  auto refs = dish_refs(dish_preset("mug"), 1, 128, find_generator("dish").first_stage_tier);
  ReconstructionConfig cfg;
  cfg.presets = dish_pool();
  cfg.seed = 1;
  cfg.stages = {{128, StageMethod::Memetic, 5000, std::nullopt}, {256, StageMethod::Adam, 20, std::nullopt}};
  ReconstructionResult r = reconstruct_differentiable("dish", refs, cfg);
  MESSAGE("stage 1 loss " << r.stages[0].best_value << " in " << r.seconds << " s");
  CHECK(r.stages[0].best_value < 1e-3);
  // best-so-far never increases, including across the stage boundary
  for (std::size_t i = 1; i < r.history.size(); ++i)
    if (r.history[i].stage == r.history[i - 1].stage) CHECK(r.history[i].best <= r.history[i - 1].best);
  CHECK(mesh_problems(r.mesh).empty());
}

TEST_CASE("tree reconstruction keeps its best fitness monotone") {
  ParameterVector p = load_preset(PROCRECON_DATA "/presets/tree/oak.json", tree_specs()).vector;
  TreeModel m = generate_tree_model(p, 7);
  Camera cam;
  cam.target = mesh_bounds(m.mesh).center();
  cam.distance = 16.0;
  cam.fov_y = 0.7;
  cam.width = cam.height = 64;
  Image8 ref = semantic_to_color(render_semantic(m.mesh, cam));
  TreeCharacteristics ch;
  ch.vertex_count = static_cast<double>(m.graph_vertex_count);
  ReconstructionConfig cfg;
  cfg.seed = 3;
  cfg.ga.population_size = 8;
  cfg.ga.tree_depth = 2;
  cfg.stages = {{64, StageMethod::TreeGA, 200, std::nullopt}};
  ReconstructionResult r = reconstruct_tree(ref, ch, cfg);
  CHECK(r.maximized);
  CHECK(r.stages[0].evaluations <= 200);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].best >= r.history[i - 1].best);
  CHECK(r.stages[0].best_value > 0.0);
  CHECK(r.stages[0].best_value <= 1.0);
}

TEST_CASE("generator table collection has one row per gene") {
  TableCollectionConfig cfg;
  cfg.quality.sample_count = 1000;
  cfg.family_size = 2;
  cfg.resolution = 64;
  QualityTables t = collect_generator_tables("dish", cfg);
  CHECK(t.gene_count == dish_specs().size() + 4);
  CHECK(t.Q.size() == t.gene_count);
  CHECK(t.Q[0].size() == static_cast<std::size_t>(t.bins));
  for (std::size_t i = 0; i < t.gene_count; ++i)
    if (dish_specs().size() > i && dish_specs()[i].is_discrete()) CHECK(t.V[i] >= 0.0);
}
