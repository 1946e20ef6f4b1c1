#include <algorithm>
#include <cmath>
#include <map>

#include "procrecon/optim.hpp"
#include "procrecon/params.hpp"

namespace procrecon {

namespace {

struct Individual {
  std::vector<double> genes;
  double loss = std::numeric_limits<double>::infinity();
  std::vector<double> grad;
  AdamState adam;  // kept across generations while the individual survives
  bool evaluated = false;
};

class MemeticRun {
 public:
  MemeticRun(const LossWithGrad& loss, const std::vector<bool>& frozen, const MemeticConfig& cfg,
             const std::function<void(std::size_t, double)>& on_eval)
      : loss_(loss), frozen_(frozen), cfg_(cfg), on_eval_(on_eval) {}

  bool exhausted() const { return result_.evaluations >= cfg_.evaluation_budget; }

  // Returns false once the budget is spent.
  bool evaluate(Individual& ind) {
    if (exhausted()) return false;
    auto [l, g] = loss_(ind.genes);
    if (std::isnan(l)) l = std::numeric_limits<double>::infinity();
    ind.loss = l;
    ind.grad = std::move(g);
    ind.evaluated = true;
    if (l < result_.best_loss || result_.best_genes.empty()) {
      result_.best_loss = l;
      result_.best_genes = ind.genes;
    }
    result_.best_history.push_back(result_.best_loss);
    if (on_eval_) on_eval_(result_.evaluations, l);
    ++result_.evaluations;
    return true;
  }

  // Adam steps from the individual's point; it moves to the best point visited.
  void refine(Individual& ind, std::size_t steps) {
    if (ind.adam.m.size() != ind.genes.size()) ind.adam = AdamState::zeros(ind.genes.size(), cfg_.adam_lr);
    Individual probe = ind;
    for (std::size_t s = 0; s < steps; ++s) {
      if (probe.grad.size() != probe.genes.size()) break;
      adam_step(probe.adam, probe.genes, probe.grad, frozen_);
      if (!evaluate(probe)) break;
      if (probe.loss < ind.loss) {
        ind.genes = probe.genes;
        ind.loss = probe.loss;
        ind.grad = probe.grad;
      }
    }
    ind.adam = probe.adam;
  }

  MemeticResult& result() { return result_; }

 private:
  const LossWithGrad& loss_;
  const std::vector<bool>& frozen_;
  const MemeticConfig& cfg_;
  const std::function<void(std::size_t, double)>& on_eval_;
  MemeticResult result_;
};

void sort_by_loss(std::vector<Individual>& pop) {
  std::stable_sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.loss < b.loss; });
}

// Loss order, except that no more than `cap` individuals sharing the same frozen (discrete)
// genes come before everyone else. Keeps runner-up structures alive long enough for their
// continuous genes to catch up.
void rank_with_diversity(std::vector<Individual>& pop, const std::vector<bool>& frozen, std::size_t cap) {
  sort_by_loss(pop);
  if (frozen.empty()) return;
  auto key = [&](const Individual& ind) {
    std::vector<double> k;
    for (std::size_t i = 0; i < frozen.size(); ++i)
      if (frozen[i]) k.push_back(ind.genes[i]);
    return k;
  };
  std::map<std::vector<double>, std::size_t> taken;
  std::vector<Individual> first, rest;
  for (auto& ind : pop) {
    std::size_t& n = taken[key(ind)];
    if (n < cap) {
      ++n;
      first.push_back(std::move(ind));
    } else {
      rest.push_back(std::move(ind));
    }
  }
  pop.clear();
  for (auto& ind : first) pop.push_back(std::move(ind));
  for (auto& ind : rest) pop.push_back(std::move(ind));
}

}  // namespace

MemeticResult memetic_optimize(const LossWithGrad& loss, const std::vector<std::vector<double>>& seeds,
                               const std::vector<bool>& frozen, const MemeticConfig& cfg,
                               const std::function<void(std::size_t, double)>& on_evaluation) {
  check_ga_config(cfg.ga);
  if (seeds.empty()) throw ValidationError("memetic_optimize: need at least one seed genome");
  const std::size_t n = seeds.front().size();
  for (const auto& s : seeds)
    if (s.size() != n) throw ValidationError("memetic_optimize: seed genomes differ in length");
  if (!frozen.empty() && frozen.size() != n) throw ValidationError("memetic_optimize: frozen mask length mismatch");

  SplitMix64 rng(cfg.ga.rng_seed);
  const QualityTables tables = QualityTables::uniform(n, cfg.ga.bins);
  const std::size_t P = cfg.ga.population_size;
  const std::size_t refined = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.refine_fraction * P)));
  const std::size_t cap = (refined + 1) / 2;
  MemeticRun run(loss, frozen, cfg, on_evaluation);
  std::vector<Individual> pop;
  if (seeds.size() >= P) {
    // More seeds than slots: give each a short descent, then keep the best.
    for (const auto& s : seeds) {
      Individual ind;
      ind.genes = s;
      run.evaluate(ind);
      run.refine(ind, cfg.seed_refine_steps);
      pop.push_back(std::move(ind));
    }
    rank_with_diversity(pop, frozen, cap);
    pop.resize(P);
  } else {
    pop.resize(P);
    for (std::size_t i = 0; i < P; ++i) {
      pop[i].genes = seeds[i % seeds.size()];
      if (i >= seeds.size())
        for (double& g : pop[i].genes) g = std::clamp(g + cfg.jitter * normal(rng), 0.0, 1.0);
    }
    for (auto& ind : pop) run.evaluate(ind);
  }

  const std::size_t half = P / 2;
  std::vector<double> fitness(half);
  while (!run.exhausted()) {
    rank_with_diversity(pop, frozen, cap);
    for (std::size_t i = 0; i < refined && i < P && !run.exhausted(); ++i) run.refine(pop[i], cfg.adam_steps);
    rank_with_diversity(pop, frozen, cap);
    for (std::size_t i = 0; i < half; ++i) fitness[i] = -pop[i].loss;
    for (std::size_t slot = half; slot < P; ++slot) {
      const std::size_t a = select_proportionate(fitness, rng);
      const std::size_t b = select_proportionate(fitness, rng);
      Genome child{crossover(pop[a].genes, pop[b].genes, rng), std::nullopt};
      if (uniform01(rng) < cfg.ga.mutation_chance) child = mutate(child, tables, cfg.ga, rng);
      pop[slot] = Individual{};
      pop[slot].genes = std::move(child.genes);
    }
    for (std::size_t slot = half; slot < P; ++slot) run.evaluate(pop[slot]);
  }
  return std::move(run.result());
}

}  // namespace procrecon
