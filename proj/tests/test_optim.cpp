#include <doctest.h>

#include <cmath>

#include "procrecon/optim.hpp"
#include "procrecon/params.hpp"

using namespace procrecon;

namespace {

double neg_sq_dist(const std::vector<double>& x, const std::vector<double>& t) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - t[i]) * (x[i] - t[i]);
  return -s;
}

GAConfig small_config(std::uint64_t seed = 1) {
  GAConfig cfg;
  cfg.population_size = 16;
  cfg.generations = 10;
  cfg.mutation_candidates = 20;
  cfg.rng_seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("adam step") {
  AdamState s = AdamState::zeros(2, 0.1);
  std::vector<double> g{0.5, 0.5};
  adam_step(s, g, std::vector<double>{0.0, 0.0});
  CHECK(g == std::vector<double>{0.5, 0.5});
  CHECK(s.t == 1);

  AdamState f = AdamState::zeros(1, 0.1);
  std::vector<double> x{0.5};
  adam_step(f, x, std::vector<double>{3.0});
  CHECK(x[0] == doctest::Approx(0.4).epsilon(1e-3));

  AdamState fr = AdamState::zeros(2, 0.1);
  std::vector<double> y{0.5, 0.5};
  adam_step(fr, y, std::vector<double>{1.0, 1.0}, {true, false});
  CHECK(y[0] == 0.5);
  CHECK(y[1] < 0.5);

  // results stay in the unit interval
  AdamState c = AdamState::zeros(1, 0.5);
  std::vector<double> z{0.05};
  adam_step(c, z, std::vector<double>{1.0});
  CHECK(z[0] == 0.0);
}

TEST_CASE("quality tables: linear objective has unit rate of change") {
  QualityConfig qc;
  qc.sample_count = 1000;
  qc.h = 0.01;
  qc.seed = 3;
  auto family = [](std::size_t) -> Objective {
    return [](const std::vector<double>& x) { return x[0] + x[1] + x[2]; };
  };
  QualityTables t = collect_quality_tables(family, 1, 3, qc);
  for (double v : t.V) CHECK(std::abs(v - 1.0) < 1e-9);
  CHECK(t.P0 == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("quality tables: a gene the objective ignores gets near-zero quality") {
  QualityConfig qc;
  qc.sample_count = 10000;
  qc.seed = 4;
  auto family = [](std::size_t) -> Objective { return [](const std::vector<double>& x) { return x[0]; }; };
  // With 16 bins each bin holds ~625 samples, and |Q| < 1.2 is only a ~2.5 sigma band per bin;
  // 4 bins make the same bound a > 4.5 sigma band.
  qc.bins = 4;
  QualityTables coarse = collect_quality_tables(family, 1, 2, qc);
  for (int b = 0; b < coarse.bins; ++b) CHECK(std::abs(coarse.Q[1][b]) < 1.2);
  qc.bins = 16;
  QualityTables t = collect_quality_tables(family, 1, 2, qc);
  for (int b = 0; b < t.bins; ++b) CHECK(std::abs(t.Q[1][b]) < 1.5);
  CHECK(t.V[1] == 0.0);
  // gene 0 decides the outcome: its top bins are strongly positive, its bottom bins strongly negative
  CHECK(t.Q[0][t.bins - 1] > 1.2);
  CHECK(t.Q[0][0] < -1.2);
}

TEST_CASE("quality tables: equal probabilities and degenerate samplers give zero Q") {
  QualityConfig qc;
  qc.sample_count = 1000;
  auto flat = [](std::size_t) -> Objective { return [](const std::vector<double>&) { return 2.0; }; };
  QualityTables t = collect_quality_tables(flat, 1, 3, qc);
  CHECK(t.degenerate);
  CHECK(t.q_all_zero());
  for (const auto& row : t.P)
    for (double p : row) CHECK(p == t.P0);
  qc.sample_count = 0;
  CHECK_THROWS_AS(collect_quality_tables(flat, 1, 3, qc), ValidationError);
}

TEST_CASE("quality tables survive a json round trip") {
  QualityConfig qc;
  qc.sample_count = 1000;
  auto family = [](std::size_t k) -> Objective {
    return [k](const std::vector<double>& x) { return x[k % 2] - x[2]; };
  };
  QualityTables t = collect_quality_tables(family, 2, 3, qc);
  QualityTables back = QualityTables::from_json(t.to_json());
  CHECK(back.Q == t.Q);
  CHECK(back.V == t.V);
  CHECK(back.P0 == t.P0);
}

TEST_CASE("genome quality") {
  QualityTables t = QualityTables::uniform(2, 4);
  CHECK(genome_quality(std::vector<double>{0.3, 0.9}, t) == 0.0);
  t.Q = {{0, 1, 2, 3}, {0, -1, -2, -3}};
  CHECK(genome_quality(std::vector<double>{0.3, 0.9}, t) == -2.0);
  CHECK(genome_quality(std::vector<double>{1.0, 0.0}, t) == 3.0);
  CHECK(gene_bin(1.0, 4) == 3);
  CHECK(gene_bin(0.0, 4) == 0);
}

TEST_CASE("mutate") {
  GAConfig cfg = small_config();
  const std::size_t N = 8;
  Genome g{std::vector<double>(N, 0.5), std::nullopt};
  QualityTables flat = QualityTables::uniform(N, 16);

  SUBCASE("no genes selected leaves the genome unchanged") {
    cfg.mutation_genes = 0.05;  // round(8 * 0.05) = 0
    SplitMix64 rng(1);
    CHECK(mutate(g, flat, cfg, rng).genes == g.genes);
  }
  SUBCASE("zero rate of change excludes a gene") {
    QualityTables t = flat;
    t.V.assign(N, 0.0);
    t.V[0] = 1.0;
    SplitMix64 rng(2);
    for (int k = 0; k < 50; ++k) {
      Genome m = mutate(g, t, cfg, rng);
      for (std::size_t i = 1; i < N; ++i) CHECK(m.genes[i] == 0.5);
    }
  }
  SUBCASE("quality tables steer the changed genes") {
    QualityTables t = flat;
    for (auto& row : t.Q) row[0] = 1.0;
    cfg.mutation_genes = 0.125;  // one gene per candidate
    cfg.mutation_candidates = 500;
    SplitMix64 rng(3);
    int changed = 0, in_bin0 = 0;
    for (int k = 0; k < 100; ++k) {
      Genome m = mutate(g, t, cfg, rng);
      for (std::size_t i = 0; i < N; ++i)
        if (m.genes[i] != 0.5) {
          ++changed;
          in_bin0 += gene_bin(m.genes[i], 16) == 0;
        }
    }
    CHECK(changed > 0);
    CHECK(in_bin0 >= 0.9 * changed);
  }
  SUBCASE("deterministic under a fixed seed and never below the best candidate") {
    QualityTables t = flat;
    for (std::size_t i = 0; i < N; ++i)
      for (int b = 0; b < 16; ++b) t.Q[i][b] = std::sin(1.0 + i * 16 + b);
    SplitMix64 a(9), b(9);
    Genome ma = mutate(g, t, cfg, a), mb = mutate(g, t, cfg, b);
    CHECK(ma.genes == mb.genes);
    // rerun the candidates one at a time with the same stream
    GAConfig one = cfg;
    one.mutation_candidates = 1;
    SplitMix64 c(9);
    double best = -1e300;
    for (std::size_t k = 0; k < cfg.mutation_candidates; ++k) best = std::max(best, genome_quality(mutate(g, t, one, c).genes, t));
    CHECK(genome_quality(ma.genes, t) == best);
  }
}

TEST_CASE("fitness proportionate selection") {
  SplitMix64 rng(5);
  std::vector<double> f{1.0, 3.0};
  int second = 0;
  for (int i = 0; i < 10000; ++i) second += select_proportionate(f, rng) == 1;
  CHECK(second / 10000.0 == doctest::Approx(0.75).epsilon(0.02 / 0.75));

  // negative fitness is shifted, so the best is still preferred
  std::vector<double> neg{-5.0, -1.0};
  int best = 0;
  for (int i = 0; i < 1000; ++i) best += select_proportionate(neg, rng) == 1;
  CHECK(best > 900);
}

TEST_CASE("one-point crossover") {
  SplitMix64 rng(6);
  std::vector<double> a(6, 0.0), b(6, 1.0);
  for (int k = 0; k < 100; ++k) {
    auto c = crossover(a, b, rng);
    CHECK(c.front() == 0.0);
    CHECK(c.back() == 1.0);
    CHECK(std::is_sorted(c.begin(), c.end()));
  }
}

TEST_CASE("elementary GA invariants") {
  GAConfig cfg = small_config(7);
  cfg.generations = 30;
  const std::vector<double> target{0.2, 0.8, 0.5, 0.1, 0.9, 0.3};
  Objective f = [&](const std::vector<double>& x) { return neg_sq_dist(x, target); };
  QualityTables t = QualityTables::uniform(6, 16);

  SplitMix64 rng(7);
  EvaluationCounter counter;
  auto pop = elementary_ga(f, random_population(16, 6, rng), cfg, t, rng, counter);
  CHECK(pop.size() == 16);
  for (const auto& g : pop)
    for (double x : g.genes) CHECK((x >= 0.0 && x <= 1.0));
  const auto& h = counter.best_history();
  CHECK(std::is_sorted(h.begin(), h.end()));
  CHECK(std::is_sorted(pop.begin(), pop.end(), [](const Genome& a, const Genome& b) { return *a.fitness > *b.fitness; }));

  SUBCASE("identical parents without mutation stay put") {
    GAConfig still = cfg;
    still.mutation_chance = 0.0;
    std::vector<Genome> same(16, Genome{{0.3, 0.3, 0.3, 0.3, 0.3, 0.3}, std::nullopt});
    SplitMix64 r(1);
    auto out = elementary_ga(f, same, still, t, r);
    for (const auto& g : out) CHECK(g.genes == same[0].genes);
  }
}

TEST_CASE("elementary GA finds a known target") {
  GAConfig cfg;
  cfg.population_size = 32;
  cfg.generations = 200;
  cfg.mutation_candidates = 1;
  const std::vector<double> target{0.15, 0.85, 0.5, 0.3, 0.7, 0.05, 0.95, 0.4};
  Objective f = [&](const std::vector<double>& x) { return neg_sq_dist(x, target); };
  SplitMix64 rng(11);
  auto pop = elementary_ga(f, random_population(32, 8, rng), cfg, QualityTables::uniform(8, 16), rng);
  double linf = 0;
  for (std::size_t i = 0; i < 8; ++i) linf = std::max(linf, std::abs(pop[0].genes[i] - target[i]));
  CHECK(linf < 0.05);
}

TEST_CASE("tree-structured GA") {
  const std::vector<double> target{0.2, 0.8, 0.5, 0.1};
  Objective f = [&](const std::vector<double>& x) { return neg_sq_dist(x, target); };
  QualityTables t = QualityTables::uniform(4, 16);

  SUBCASE("depth 1 is one elementary GA from a random population") {
    GAConfig cfg = small_config(13);
    cfg.tree_depth = 1;
    TreeGAResult r = tree_structured_ga(f, 4, cfg, t);
    SplitMix64 rng(13);
    auto pop = elementary_ga(f, random_population(cfg.population_size, 4, rng), cfg, t, rng);
    REQUIRE(r.best.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.best[i].genes == pop[i].genes);
  }

  SUBCASE("inner nodes start from their children's best halves") {
    GAConfig cfg = small_config(14);
    cfg.tree_depth = 2;
    TreeGAResult r = tree_structured_ga(f, 4, cfg, t);
    SplitMix64 rng(14);
    auto left = elementary_ga(f, random_population(16, 4, rng), cfg, t, rng);
    auto right = elementary_ga(f, random_population(16, 4, rng), cfg, t, rng);
    std::vector<Genome> init(left.begin(), left.begin() + 8);
    init.insert(init.end(), right.begin(), right.begin() + 8);
    auto root = elementary_ga(f, init, cfg, t, rng);
    CHECK(r.best[0].genes == root[0].genes);
    CHECK(*r.best[0].fitness >= *left[0].fitness);
    CHECK(*r.best[0].fitness >= *right[0].fitness);
    CHECK(std::is_sorted(r.best_history.begin(), r.best_history.end()));
  }

  SUBCASE("reproducible and within budget") {
    GAConfig cfg = small_config(15);
    cfg.tree_depth = 3;
    cfg.evaluation_budget = 600;
    TreeGAResult a = tree_structured_ga(f, 4, cfg, t), b = tree_structured_ga(f, 4, cfg, t);
    CHECK(a.best[0].genes == b.best[0].genes);
    CHECK(a.evaluations <= 600);
    CHECK(a.evaluations == a.best_history.size());
  }
}

TEST_CASE("memetic optimizer") {
  MemeticConfig cfg;
  cfg.ga.population_size = 16;
  cfg.ga.mutation_candidates = 1;

  SUBCASE("a preset at the global minimum is kept") {
    std::vector<double> opt{0.3, 0.6};
    LossWithGrad loss = [&](const std::vector<double>& x) {
      return std::pair{-neg_sq_dist(x, opt), std::vector<double>{2 * (x[0] - opt[0]), 2 * (x[1] - opt[1])}};
    };
    cfg.evaluation_budget = 200;
    MemeticResult r = memetic_optimize(loss, {opt, {0.9, 0.9}}, {}, cfg);
    CHECK(r.best_genes == opt);
    CHECK(r.best_loss == 0.0);
  }

  SUBCASE("convex quadratic") {
    std::vector<double> opt{0.31, 0.72, 0.45, 0.18};
    LossWithGrad loss = [&](const std::vector<double>& x) {
      std::vector<double> g(4);
      for (int i = 0; i < 4; ++i) g[i] = 2 * (x[i] - opt[i]) * (i + 1);
      double l = 0;
      for (int i = 0; i < 4; ++i) l += (x[i] - opt[i]) * (x[i] - opt[i]) * (i + 1);
      return std::pair{l, g};
    };
    cfg.evaluation_budget = 2000;
    MemeticResult r = memetic_optimize(loss, {{0.5, 0.5, 0.5, 0.5}}, {}, cfg);
    CHECK(r.best_loss < 1e-4);
    CHECK(r.evaluations <= 2000);
    CHECK(std::is_sorted(r.best_history.rbegin(), r.best_history.rend()));
  }

  SUBCASE("discrete gene takes the better value") {
    // gene 2 is discrete with values {0, 1}; value 1 lowers the loss by 0.5
    ParamSpecList specs{continuous("a", 0, 1), continuous("b", 0, 1), discrete("d", 0, 1)};
    std::vector<bool> frozen = discrete_mask(specs);
    LossWithGrad loss = [&](const std::vector<double>& genes) {
      ParameterVector p = from_genes(genes, specs);
      double l = (p[0] - 0.4) * (p[0] - 0.4) + (p[1] - 0.6) * (p[1] - 0.6) + (p[2] == 1.0 ? 0.0 : 0.5);
      return std::pair{l, std::vector<double>{2 * (p[0] - 0.4), 2 * (p[1] - 0.6), 0.0}};
    };
    cfg.ga.population_size = 32;
    cfg.evaluation_budget = 5000;
    MemeticResult r = memetic_optimize(loss, {{0.5, 0.5, 0.0}}, frozen, cfg);
    CHECK(from_genes(r.best_genes, specs)[2] == 1.0);
  }
}
