#include <doctest.h>

#include <cmath>

#include "procrecon/autodiff.hpp"
#include "procrecon/generators.hpp"
#include "procrecon/random.hpp"

using namespace procrecon;

TEST_CASE("seed gives unit partials to continuous slots only") {
  ParamSpecList two{continuous("x", 0, 1), continuous("y", 0, 1)};
  auto s = seed(ParameterVector(two, {0.2, 0.3}));
  REQUIRE(s.size() == 2);
  CHECK(s[0].partial(0) == 1.0);
  CHECK(s[0].partial(1) == 0.0);
  CHECK(s[1].partial(0) == 0.0);
  CHECK(s[1].partial(1) == 1.0);

  ParamSpecList mixed{continuous("x", 0, 1), discrete("n", 0, 3)};
  auto m = seed(ParameterVector(mixed, {0.5, 2}));
  CHECK(m[1].value() == 2.0);
  for (std::size_t i = 0; i < 2; ++i) CHECK(m[1].partial(i) == 0.0);

  CHECK(seed(ParameterVector({}, {})).empty());
}

TEST_CASE("dual arithmetic follows the chain rule") {
  Dual x = Dual::variable(2.0, 1, 0);
  Dual y(3.0, 1);
  Dual p = x * y;
  CHECK(p.value() == 6.0);
  CHECK(p.partial(0) == 3.0);

  Dual z = Dual::variable(0.0, 1, 0);
  CHECK(sin(z).value() == 0.0);
  CHECK(sin(z).partial(0) == 1.0);
  CHECK(cos(z).partial(0) == 0.0);

  Dual a = Dual::variable(1.0, 1, 0);
  Dual b(2.0, 1);
  Dual m = max(a, b);
  CHECK(m.value() == 2.0);
  CHECK(m.partial(0) == 0.0);
  CHECK(min(a, b).partial(0) == 1.0);
  // ties take the first argument
  Dual c(1.0, 1);
  CHECK(max(a, c).partial(0) == 1.0);

  Dual q = Dual::variable(4.0, 1, 0);
  CHECK(sqrt(q).partial(0) == doctest::Approx(0.25));
  CHECK(pow(q, 3.0).partial(0) == doctest::Approx(48.0));
  CHECK((1.0 / q).partial(0) == doctest::Approx(-1.0 / 16.0));
}

TEST_CASE("dual domain errors name the operation") {
  Dual x = Dual::variable(-1.0, 1, 0);
  CHECK_THROWS_WITH_AS(sqrt(x), doctest::Contains("sqrt"), NumericError);
  CHECK_THROWS_WITH_AS(x / Dual(0.0), doctest::Contains("div"), NumericError);
  CHECK_THROWS_WITH_AS(pow(x, 0.5), doctest::Contains("pow"), NumericError);
  CHECK_THROWS_AS(Dual(0.0, kMaxGeneratorParams + 1), NumericError);
}

TEST_CASE("assemble_jacobian lays out positions and partials row-major") {
  std::vector<DVec3> one{{Dual::variable(0.7, 1, 0), Dual(0.0, 1), Dual(0.0, 1)}};
  auto g = assemble_jacobian(one, 1);
  CHECK(g.positions == std::vector<double>{0.7, 0.0, 0.0});
  CHECK(g.jacobian.rows == 3);
  CHECK(g.jacobian(0, 0) == 1.0);
  CHECK(g.jacobian(1, 0) == 0.0);
  CHECK(g.jacobian(2, 0) == 0.0);

  std::vector<DVec3> constant{{Dual(1.0), Dual(2.0), Dual(3.0)}};
  auto c = assemble_jacobian(constant, 2);
  for (double e : c.jacobian.entries) CHECK(e == 0.0);

  // lathe vertex (r cos t, h, r sin t) at t = 0 with r the only parameter
  Dual r = Dual::variable(0.8, 1, 0);
  double t = 0.0;
  std::vector<DVec3> lathe{{r * std::cos(t), Dual(0.5, 1), r * std::sin(t)}};
  auto l = assemble_jacobian(lathe, 1);
  CHECK(l.jacobian(0, 0) == 1.0);
  CHECK(l.jacobian(1, 0) == 0.0);
  CHECK(l.jacobian(2, 0) == 0.0);
}

TEST_CASE("transpose product accumulates J^T v") {
  Jacobian J{2, 2, {1, 2, 3, 4}};
  std::vector<double> v{1, 1}, out{0, 0};
  J.accumulate_transpose_product(v, out);
  CHECK(out == std::vector<double>{4, 6});
}

namespace {

// Central differences in gene space against the analytic Jacobian, scaled to gene units.
void check_generator_jacobian(const std::string& id, int tier, std::uint64_t rng_seed) {
  const GeneratorInfo& gen = find_generator(id);
  const ParamSpecList& specs = *gen.specs;
  SplitMix64 rng(rng_seed);
  const double h = 1e-4;
  for (int point = 0; point < 10; ++point) {
    std::vector<double> genes(specs.size());
    for (auto& g : genes) g = 0.02 + 0.96 * uniform01(rng);
    ParameterVector p = from_genes(genes, specs);
    GeneratorOutput out = gen.generate(p, {tier});
    REQUIRE(out.jacobian.rows == out.mesh.positions.size());
    REQUIRE(out.jacobian.cols == specs.size());
    std::size_t bad = 0;
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (specs[k].is_discrete()) {
        for (std::size_t r = 0; r < out.jacobian.rows; ++r)
          if (out.jacobian(r, k) != 0.0) ++bad;
        continue;
      }
      const double span = specs[k].max - specs[k].min;
      auto gp = genes, gm = genes;
      gp[k] += h;
      gm[k] -= h;
      GeneratorOutput op = gen.generate(from_genes(gp, specs), {tier});
      GeneratorOutput om = gen.generate(from_genes(gm, specs), {tier});
      REQUIRE(op.mesh.positions.size() == out.mesh.positions.size());
      for (std::size_t r = 0; r < out.jacobian.rows; ++r) {
        double fd = (op.mesh.positions[r] - om.mesh.positions[r]) / (2 * h);
        double an = out.jacobian(r, k) * span;
        double err = std::abs(fd - an);
        if (err > 1e-6 && err > 1e-4 * std::max(std::abs(fd), std::abs(an))) {
          if (bad < 5) MESSAGE(id << " point " << point << " param " << specs[k].name << " row " << r << " fd " << fd
                                  << " analytic " << an);
          ++bad;
        }
      }
    }
    CHECK(bad == 0);
  }
}

}  // namespace

TEST_CASE("dish jacobian matches finite differences") {
  check_generator_jacobian("dish", 1, 3);
}

TEST_CASE("building jacobian matches finite differences") {
  check_generator_jacobian("building", 3, 4);
}
