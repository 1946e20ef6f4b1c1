#include <doctest.h>

#include <cmath>

#include "procrecon/loss.hpp"
#include "procrecon/random.hpp"

using namespace procrecon;

namespace {

Camera view(double az, double el, int res) {
  Camera c;
  c.azimuth = az;
  c.elevation = el;
  c.distance = 4.0;
  c.fov_y = 0.7;
  c.width = c.height = res;
  return c;
}

ParameterVector dish_preset(const std::string& name) {
  return load_preset(PROCRECON_DATA "/presets/dish/" + name + ".json", dish_specs()).vector;
}

// Loss with the coverage integrated on an 8x finer grid, for finite differences.
double fine_loss(const ParameterVector& p, const Camera& cam, const SilhouetteMask& ref) {
  const GeneratorInfo& gen = find_generator("dish");
  GeneratorOutput out = gen.generate(p, {0});
  SilhouetteMask hi = render_generator_view(out, gen, cam.with_resolution(cam.width * 8, cam.height * 8));
  return mse(resample(hi, cam.width, cam.height), ref).first;
}

struct GradCompare {
  double cosine;
  double norm_rel;
};

GradCompare compare_with_fd(const ParameterVector& p, const Camera& cam, const SilhouetteMask& ref, double gene_step) {
  MultiviewLoss ml = multiview_loss(p, {cam}, {ref}, "dish", {0});
  std::vector<double> an, fd;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const ParamSpec& s = p.specs()[k];
    if (s.is_discrete()) continue;
    const double h = gene_step * (s.max - s.min);
    if (p[k] - h < s.min || p[k] + h > s.max) continue;
    const double lp = fine_loss(p.with(s.name, p[k] + h), cam, ref);
    const double lm = fine_loss(p.with(s.name, p[k] - h), cam, ref);
    fd.push_back((lp - lm) / (2 * h));
    an.push_back(ml.d_params[k]);
  }
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < an.size(); ++i) {
    ab += an[i] * fd[i];
    aa += an[i] * an[i];
    bb += fd[i] * fd[i];
  }
  return {ab / std::sqrt(aa * bb), std::abs(std::sqrt(aa) - std::sqrt(bb)) / std::sqrt(bb)};
}

}  // namespace

TEST_CASE("multiview loss is zero at the reference parameters") {
  ParameterVector p = dish_preset("mug");
  std::vector<Camera> cams{view(0.3, 0.3, 96), view(2.0, 0.1, 96)};
  MultiviewOptions keep;
  keep.keep_renders = true;
  MultiviewLoss first = multiview_loss(p, cams, {SilhouetteMask(96, 96), SilhouetteMask(96, 96)}, "dish", {1}, keep);
  MultiviewLoss ml = multiview_loss(p, cams, first.rendered, "dish", {1});
  CHECK(ml.loss == 0.0);
  for (double d : ml.d_params) CHECK(d == 0.0);
}

TEST_CASE("duplicated views give the same loss and gradient as one view") {
  ParameterVector p = dish_preset("cup");
  ParameterVector q = dish_preset("jar");
  Camera cam = view(0.6, 0.35, 96);
  const GeneratorInfo& gen = find_generator("dish");
  SilhouetteMask ref = render_generator_view(gen.generate(q, {0}), gen, cam);
  // Each view draws its own edge samples, so the gradients agree up to sampling noise.
  MultiviewOptions dense;
  dense.render.edge_samples_per_pixel = 32;
  MultiviewLoss one = multiview_loss(p, {cam}, {ref}, "dish", {0}, dense);
  MultiviewLoss two = multiview_loss(p, {cam, cam}, {ref, ref}, "dish", {0}, dense);
  CHECK(two.loss == doctest::Approx(one.loss).epsilon(1e-12));
  double diff = 0, base = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    diff += (two.d_params[k] - one.d_params[k]) * (two.d_params[k] - one.d_params[k]);
    base += one.d_params[k] * one.d_params[k];
  }
  CHECK(std::sqrt(diff) < 0.03 * std::sqrt(base));
  CHECK(one.d_params[p.index_of("handle")] == 0.0);
}

TEST_CASE("multiview loss rejects the tree generator and mismatched views") {
  ParameterVector t = ParameterVector::midpoint(tree_specs());
  CHECK_THROWS_AS(multiview_loss(t, {view(0, 0, 32)}, {SilhouetteMask(32, 32)}, "tree", {0}), UnsupportedOperation);
  CHECK_THROWS_AS(multiview_loss(dish_preset("cup"), {view(0, 0, 32)}, {}, "dish", {0}), ValidationError);
}

TEST_CASE("dish gradient matches finite differences at 128x128") {
  const GeneratorInfo& gen = find_generator("dish");
  Camera cam = view(0.6, 0.35, 128);
  SilhouetteMask ref = render_generator_view(gen.generate(dish_preset("mug"), {0}), gen, cam);
  GradCompare g = compare_with_fd(dish_preset("jar"), cam, ref, 0.002);
  CHECK(g.cosine > 0.99);
  CHECK(g.norm_rel < 0.05);

  // radius alone: every profile offset scaled together
  ParameterVector p = dish_preset("jar");
  MultiviewLoss ml = multiview_loss(p, {cam}, {ref}, "dish", {0});
  const double h = 0.003;
  auto scaled = [&](double s) {
    ParameterVector q = p;
    for (int k = 0; k < kDishControlCount; ++k) {
      std::string name = "offset_" + std::to_string(k);
      q = q.with(name, p.get(name) * (1.0 + s));
    }
    return q;
  };
  double fd = (fine_loss(scaled(h), cam, ref) - fine_loss(scaled(-h), cam, ref)) / (2 * h);
  double an = 0.0;
  for (int k = 0; k < kDishControlCount; ++k) {
    std::string name = "offset_" + std::to_string(k);
    an += ml.d_params[p.index_of(name)] * p.get(name);
  }
  CHECK(std::abs(an - fd) < 0.05 * std::abs(fd));
}

TEST_CASE("dish gradient direction at random parameter points") {
  const GeneratorInfo& gen = find_generator("dish");
  SplitMix64 rng(17);
  Camera cam = view(0.6, 0.35, 128);
  SilhouetteMask ref = render_generator_view(gen.generate(dish_preset("cup"), {0}), gen, cam);
  int good = 0;
  for (int t = 0; t < 10; ++t) {
    std::vector<double> g(dish_specs().size());
    for (auto& x : g) x = 0.05 + 0.9 * uniform01(rng);
    GradCompare c = compare_with_fd(from_genes(g, dish_specs()), cam, ref, 0.002);
    if (c.cosine > 0.99) ++good;
    else MESSAGE("point " << t << " cosine " << c.cosine);
  }
  CHECK(good == 10);
}

TEST_CASE("color classification") {
  CHECK(classify_color(0, 255, 0) == SemanticClass::Foliage);
  CHECK(classify_color(255, 255, 255) == SemanticClass::Background);
  CHECK(classify_color(100, 100, 100) == SemanticClass::Branch);
  CHECK(classify_color(120, 80, 40) == SemanticClass::Branch);  // brown
  CHECK(classify_color(0, 0, 0) == SemanticClass::Background);
  CHECK(classify_color(0, 0, 255) == SemanticClass::Background);
  // every colour maps somewhere, and the palette round-trips
  SemanticMask m(3, 1);
  m.at(0, 0) = SemanticClass::Branch;
  m.at(1, 0) = SemanticClass::Foliage;
  SemanticMask back = semantic_from_color(semantic_to_color(m));
  CHECK(back.classes == m.classes);
}

TEST_CASE("stripe decomposition") {
  const int W = 100, H = 96;
  SemanticMask empty(W, H);
  StripeStats e = stripe_decompose(empty, 24);
  REQUIRE(e.stripe_count() == 24);
  for (const auto& s : e.stripes) {
    CHECK(s == StripeRecord{});
  }

  SemanticMask tree(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (y < H / 2) tree.at(x, y) = SemanticClass::Foliage;
      else if (x >= 45 && x < 55) tree.at(x, y) = SemanticClass::Branch;
    }
  StripeStats st = stripe_decompose(tree, 24);
  for (int i = 0; i < 12; ++i) {
    CHECK(st.stripes[i].kind == StripeKind::Crown);
    CHECK(st.stripes[i].a == 0);
    CHECK(st.stripes[i].d == W);
    CHECK(st.stripes[i].b == 0);
    CHECK(st.stripes[i].c == W);
    CHECK(st.stripes[i].L == 1.0);
  }
  for (int i = 12; i < 24; ++i) {
    CHECK(st.stripes[i].kind == StripeKind::Trunk);
    CHECK(st.stripes[i].d - st.stripes[i].a == W / 10);
    CHECK(st.stripes[i].B == doctest::Approx(0.1));
  }

  // swapping classes swaps the kind
  SemanticMask swapped = tree;
  for (auto& c : swapped.classes)
    if (c != SemanticClass::Background) c = c == SemanticClass::Branch ? SemanticClass::Foliage : SemanticClass::Branch;
  StripeStats sw = stripe_decompose(swapped, 24);
  CHECK(sw.stripes[0].kind == StripeKind::Trunk);
  CHECK(sw.stripes[23].kind == StripeKind::Crown);
}

TEST_CASE("tree similarity") {
  const int W = 80, H = 48;
  SemanticMask a(W, H), empty(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 20; x < 60; ++x) a.at(x, y) = y < 24 ? SemanticClass::Foliage : SemanticClass::Branch;
  SemanticMask b = a;
  for (int y = 0; y < 24; ++y) b.at(15, y) = SemanticClass::Foliage;
  StripeStats sa = stripe_decompose(a, 24), sb = stripe_decompose(b, 24), se = stripe_decompose(empty, 24);
  CHECK(tree_similarity(sa, sa) == 1.0);
  CHECK(tree_similarity(se, se) == 1.0);
  CHECK(tree_similarity(sa, sb) < 1.0);
  CHECK(tree_similarity(sa, sb) == tree_similarity(sb, sa));
  double s = tree_similarity(sa, se);
  CHECK(s < 0.5);
  CHECK(s < std::exp(-1.0));
  CHECK(s >= 0.0);
  CHECK_THROWS(tree_similarity(sa, stripe_decompose(a, 12)));
}

TEST_CASE("regularized tree loss multipliers") {
  TreeCharacteristics ref, gen;
  ref.vertex_count = 100;
  gen.vertex_count = 100;
  CHECK(regularized_tree_loss(0.7, gen, ref) == 0.7);
  gen.vertex_count = 200;
  CHECK(regularized_tree_loss(0.7, gen, ref) == doctest::Approx(0.35).epsilon(1e-15));
  gen.vertex_count = 50;
  CHECK(regularized_tree_loss(0.7, gen, ref) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(regularized_tree_loss(0.7, TreeCharacteristics{}, TreeCharacteristics{}) == 0.7);
  // the product does not grow as a characteristic moves away from the reference
  double prev = 1.0;
  for (double c = 100; c < 400; c += 10) {
    gen.vertex_count = c;
    double v = regularized_tree_loss(1.0, gen, ref);
    CHECK(v <= prev);
    CHECK(v > 0.0);
    CHECK((v == 1.0) == (c == 100));
    prev = v;
  }
  gen.vertex_count = 0.0;
  CHECK_THROWS_AS(regularized_tree_loss(1.0, gen, ref), ValidationError);
}

TEST_CASE("semantic rendering of a generated tree") {
  ParameterVector p = load_preset(PROCRECON_DATA "/presets/tree/oak.json", tree_specs()).vector;
  TreeModel m = generate_tree_model(p, 7);
  Bounds b = mesh_bounds(m.mesh);
  Camera cam;
  cam.target = b.center();
  cam.distance = 15.0;
  cam.fov_y = 0.8;
  cam.width = cam.height = 128;
  SemanticMask s = render_semantic(m.mesh, cam);
  CHECK(s.count(SemanticClass::Foliage) > 0);
  CHECK(s.count(SemanticClass::Branch) > 0);
  TreeCharacteristics c = measure_tree(m, p);
  REQUIRE(c.vertex_count);
  CHECK(*c.vertex_count == static_cast<double>(m.graph_vertex_count));
}
