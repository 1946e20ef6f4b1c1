#include <algorithm>
#include <cmath>
#include <numeric>

#include "procrecon/optim.hpp"
#include "procrecon/params.hpp"
#include "procrecon/parallel.hpp"

namespace procrecon {

void check_ga_config(const GAConfig& cfg) {
  if (cfg.population_size < 4 || cfg.population_size % 2 != 0)
    throw ValidationError("GA population_size must be even and >= 4");
  if (!(cfg.mutation_chance >= 0.0 && cfg.mutation_chance <= 1.0))
    throw ValidationError("GA mutation_chance must be in [0,1]");
  if (!(cfg.mutation_genes > 0.0 && cfg.mutation_genes <= 1.0))
    throw ValidationError("GA mutation_genes must be in (0,1]");
  if (cfg.mutation_candidates < 1) throw ValidationError("GA mutation_candidates must be >= 1");
  if (cfg.bins < 2) throw ValidationError("GA bins must be >= 2");
  if (cfg.tree_depth < 1) throw ValidationError("GA tree_depth must be >= 1");
}

void EvaluationCounter::record(double fitness) {
  best_ = std::max(best_, fitness);
  history_.push_back(best_);
  if (callback_) callback_(count_, fitness);
  ++count_;
}

Genome mutate(const Genome& g, const QualityTables& t, const GAConfig& cfg, SplitMix64& rng) {
  const std::size_t n = g.genes.size();
  if (t.gene_count != n || t.V.size() != n)
    throw ValidationError("mutate: quality tables do not match the genome length");
  std::size_t eligible = 0;
  for (double v : t.V) eligible += v > 0.0;
  const double scale = static_cast<double>(cfg.genes_scale == 0 ? n : cfg.genes_scale);
  const std::size_t k = std::min(eligible, static_cast<std::size_t>(std::lround(scale * cfg.mutation_genes)));
  if (k == 0) return g;

  // With a flat quality table every candidate ties and the first would win anyway.
  const std::size_t candidates = t.q_all_zero() ? 1 : cfg.mutation_candidates;
  Genome best;
  double best_q = -std::numeric_limits<double>::infinity();
  std::vector<double> weights(n);
  for (std::size_t c = 0; c < candidates; ++c) {
    std::vector<double> genes = g.genes;
    for (std::size_t i = 0; i < n; ++i) weights[i] = std::max(0.0, t.V[i]);
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (std::size_t s = 0; s < k; ++s) {
      double r = uniform01(rng) * total;
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] <= 0.0) continue;
        pick = i;  // falls back to the last eligible gene on rounding
        if (r < weights[i]) break;
        r -= weights[i];
      }
      total -= weights[pick];
      weights[pick] = 0.0;
      genes[pick] = uniform01(rng);
    }
    const double q = genome_quality(genes, t);
    if (q > best_q) {
      best_q = q;
      best.genes = std::move(genes);
    }
  }
  return best;
}

std::size_t select_proportionate(std::span<const double> fitness, SplitMix64& rng) {
  if (fitness.empty()) throw ValidationError("select_proportionate: empty population");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double f : fitness)
    if (std::isfinite(f)) {
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  std::vector<double> w(fitness.size(), 0.0);
  if (std::isfinite(lo)) {
    // Shift only when negative values occur, leaving the worst a small positive weight.
    const double shift = lo < 0.0 ? lo - (1e-6 * (hi - lo) + 1e-12) : 0.0;
    for (std::size_t i = 0; i < fitness.size(); ++i) w[i] = std::isfinite(fitness[i]) ? fitness[i] - shift : 0.0;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) return static_cast<std::size_t>(uniform_index(rng, fitness.size()));
  double r = uniform01(rng) * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (r < w[i]) return i;
    r -= w[i];
  }
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] > 0.0) return i;
  return 0;
}

std::vector<double> crossover(const std::vector<double>& a, const std::vector<double>& b, SplitMix64& rng) {
  if (a.size() != b.size()) throw ValidationError("crossover: parents differ in length");
  std::vector<double> child = a;
  if (a.size() < 2) return child;
  const std::size_t cut = 1 + static_cast<std::size_t>(uniform_index(rng, a.size() - 1));
  std::copy(b.begin() + static_cast<std::ptrdiff_t>(cut), b.end(), child.begin() + static_cast<std::ptrdiff_t>(cut));
  return child;
}

void evaluate_population(std::vector<Genome>& population, const Objective& objective, EvaluationCounter& counter) {
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < population.size(); ++i)
    if (!population[i].fitness) todo.push_back(i);
  const std::size_t run = std::min(todo.size(), counter.remaining());
  std::vector<double> values(run);
  parallel_for(run, [&](std::size_t k) {
    const double f = objective(population[todo[k]].genes);
    values[k] = std::isnan(f) ? -std::numeric_limits<double>::infinity() : f;
  });
  for (std::size_t k = 0; k < run; ++k) {
    population[todo[k]].fitness = values[k];
    counter.record(values[k]);
  }
  for (std::size_t k = run; k < todo.size(); ++k)
    population[todo[k]].fitness = -std::numeric_limits<double>::infinity();
}

namespace {

void sort_population(std::vector<Genome>& population) {
  std::stable_sort(population.begin(), population.end(),
                   [](const Genome& a, const Genome& b) { return *a.fitness > *b.fitness; });
}

}  // namespace

std::vector<Genome> random_population(std::size_t size, std::size_t gene_count, SplitMix64& rng) {
  std::vector<Genome> pop(size);
  for (auto& g : pop) {
    g.genes.resize(gene_count);
    for (double& x : g.genes) x = uniform01(rng);
  }
  return pop;
}

std::vector<Genome> elementary_ga(const Objective& objective, std::vector<Genome> population, const GAConfig& cfg,
                                  const QualityTables& tables, SplitMix64& rng, EvaluationCounter& counter) {
  check_ga_config(cfg);
  if (population.size() < 2 || population.size() % 2 != 0)
    throw ValidationError("elementary_ga: population size must be even and >= 2");
  evaluate_population(population, objective, counter);
  const std::size_t half = population.size() / 2;
  std::vector<double> fitness(half);
  for (std::size_t gen = 0; gen < cfg.generations && !counter.exhausted(); ++gen) {
    sort_population(population);
    for (std::size_t i = 0; i < half; ++i) fitness[i] = *population[i].fitness;
    for (std::size_t slot = half; slot < population.size(); ++slot) {
      const std::size_t a = select_proportionate(fitness, rng);
      const std::size_t b = select_proportionate(fitness, rng);
      Genome child{crossover(population[a].genes, population[b].genes, rng), std::nullopt};
      if (uniform01(rng) < cfg.mutation_chance) child = mutate(child, tables, cfg, rng);
      child.fitness.reset();
      population[slot] = std::move(child);
    }
    evaluate_population(population, objective, counter);
  }
  sort_population(population);
  return population;
}

std::vector<Genome> elementary_ga(const Objective& objective, std::vector<Genome> population, const GAConfig& cfg,
                                  const QualityTables& tables, SplitMix64& rng) {
  EvaluationCounter counter(cfg.evaluation_budget);
  return elementary_ga(objective, std::move(population), cfg, tables, rng, counter);
}

std::size_t tree_ga_generations(const GAConfig& cfg) {
  if (cfg.evaluation_budget == 0) return cfg.generations;
  const std::size_t leaves = std::size_t{1} << (cfg.tree_depth - 1);
  const std::size_t nodes = 2 * leaves - 1;
  const std::size_t initial = leaves * cfg.population_size;
  const std::size_t per_generation = nodes * (cfg.population_size / 2);
  if (cfg.evaluation_budget <= initial + per_generation) return 1;
  return (cfg.evaluation_budget - initial) / per_generation;
}

namespace {

std::vector<Genome> run_subtree(std::size_t level, const Objective& objective, std::size_t gene_count,
                                const GAConfig& cfg, const QualityTables& tables, SplitMix64& rng,
                                EvaluationCounter& counter) {
  std::vector<Genome> init;
  if (level == 1) {
    init = random_population(cfg.population_size, gene_count, rng);
  } else {
    auto left = run_subtree(level - 1, objective, gene_count, cfg, tables, rng, counter);
    auto right = run_subtree(level - 1, objective, gene_count, cfg, tables, rng, counter);
    const std::size_t half = cfg.population_size / 2;
    init.assign(left.begin(), left.begin() + static_cast<std::ptrdiff_t>(half));
    init.insert(init.end(), right.begin(), right.begin() + static_cast<std::ptrdiff_t>(half));
  }
  return elementary_ga(objective, std::move(init), cfg, tables, rng, counter);
}

}  // namespace

TreeGAResult tree_structured_ga(const Objective& objective, std::size_t gene_count, const GAConfig& cfg,
                                const QualityTables& tables, SplitMix64& rng, const EvaluationCallback& callback) {
  check_ga_config(cfg);
  GAConfig node_cfg = cfg;
  node_cfg.generations = tree_ga_generations(cfg);
  EvaluationCounter counter(cfg.evaluation_budget, callback);
  auto final_pop = run_subtree(cfg.tree_depth, objective, gene_count, node_cfg, tables, rng, counter);
  TreeGAResult r;
  const std::size_t k = std::min(std::max<std::size_t>(cfg.elite_carryover, 1), final_pop.size());
  r.best.assign(final_pop.begin(), final_pop.begin() + static_cast<std::ptrdiff_t>(k));
  r.evaluations = counter.count();
  r.best_history = counter.best_history();
  return r;
}

TreeGAResult tree_structured_ga(const Objective& objective, std::size_t gene_count, const GAConfig& cfg,
                                const QualityTables& tables, const EvaluationCallback& callback) {
  SplitMix64 rng(cfg.rng_seed);
  return tree_structured_ga(objective, gene_count, cfg, tables, rng, callback);
}

}  // namespace procrecon
