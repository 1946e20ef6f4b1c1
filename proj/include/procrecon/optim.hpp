#pragma once

// Optimizers over genomes in [0,1]^N: Adam for the continuous genes, a genetic algorithm with
// quality-table-guided mutation, its tree-structured variant, and the memetic hybrid.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "procrecon/random.hpp"

namespace procrecon {

// ---------------------------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<double> m, v;
  std::size_t t = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(std::size_t n, double lr = 0.01) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.lr = lr;
    return s;
  }
};

/// One bias-corrected Adam descent step. Frozen slots keep their value and moments; results
/// are clamped to [0,1]. An empty mask freezes nothing.
void adam_step(AdamState& state, std::vector<double>& genes, std::span<const double> grad,
               const std::vector<bool>& frozen = {});

// ---------------------------------------------------------------------------------------------
// Genetic algorithm

struct Genome {
  std::vector<double> genes;
  std::optional<double> fitness;  // higher is better
};

/// Fitness of a gene vector; larger is better. Must be safe to call concurrently.
using Objective = std::function<double(const std::vector<double>&)>;

struct QualityTables {
  std::size_t gene_count = 0;
  int bins = 16;
  std::vector<double> V;               // per gene
  std::vector<std::vector<double>> P;  // gene x bin
  double P0 = 0.0;
  std::vector<std::vector<double>> Q;  // gene x bin
  double epsilon = 0.0;
  std::size_t sample_count = 0;
  bool degenerate = false;  // every sampled fitness was equal

  /// V = 1, P = P0 = 0.5, Q = 0: mutation with no learned preference.
  static QualityTables uniform(std::size_t gene_count, int bins = 16);
  bool q_all_zero() const;

  std::string to_json() const;
  static QualityTables from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static QualityTables load(const std::filesystem::path& path);
};

struct QualityConfig {
  std::size_t sample_count = 1000;
  int bins = 16;
  double h = 0.05;
  std::optional<double> epsilon;  // default: 75th percentile of sampled fitness
  std::uint64_t seed = 0;
};

/// Member `index` of an objective family; collection draws sample s from member s % family_size.
using ObjectiveFamily = std::function<Objective(std::size_t index)>;

QualityTables collect_quality_tables(const ObjectiveFamily& family, std::size_t family_size, std::size_t gene_count,
                                     const QualityConfig& cfg);

/// Bin used for gene value g: floor(g * B) clamped to [0, B-1].
int gene_bin(double g, int bins);
double genome_quality(std::span<const double> genes, const QualityTables& tables);

struct GAConfig {
  std::size_t population_size = 32;
  std::size_t generations = 50;
  double mutation_chance = 0.8;
  double mutation_genes = 0.2;
  std::size_t mutation_candidates = 500;
  std::size_t genes_scale = 0;  // n in round(n * M_genes); 0 means the gene count
  double h = 0.05;
  int bins = 16;
  std::size_t tree_depth = 3;
  std::size_t elite_carryover = 4;  // genomes returned by the tree-structured GA
  std::uint64_t rng_seed = 0;
  /// Upper bound on objective evaluations; 0 means unbounded. The tree-structured GA derives
  /// its per-node generation count from it.
  std::size_t evaluation_budget = 0;
};

/// Throws ValidationError when an invariant of the config does not hold.
void check_ga_config(const GAConfig& cfg);

/// Called once per objective evaluation, in a deterministic order.
using EvaluationCallback = std::function<void(std::size_t index, double fitness)>;

/// Resamples round(n * M_genes) distinct genes, chosen with probability proportional to V, for
/// each of cfg.mutation_candidates candidates and returns the one with the highest quality
/// (earliest on ties). The result carries no fitness.
Genome mutate(const Genome& g, const QualityTables& tables, const GAConfig& cfg, SplitMix64& rng);

/// Index drawn with probability proportional to fitness; values are shifted to be nonnegative
/// when any is negative.
std::size_t select_proportionate(std::span<const double> fitness, SplitMix64& rng);

/// One-point crossover with cut uniform in [1, N-1]; a copy of `a` when N < 2.
std::vector<double> crossover(const std::vector<double>& a, const std::vector<double>& b, SplitMix64& rng);

/// Shared evaluation bookkeeping: counts calls, tracks the best-so-far and forwards to a callback.
class EvaluationCounter {
 public:
  EvaluationCounter(std::size_t budget = 0, EvaluationCallback callback = {})
      : budget_(budget), callback_(std::move(callback)) {}
  std::size_t count() const { return count_; }
  std::size_t remaining() const {
    return budget_ == 0 ? std::numeric_limits<std::size_t>::max() : (count_ >= budget_ ? 0 : budget_ - count_);
  }
  bool exhausted() const { return remaining() == 0; }
  double best() const { return best_; }
  const std::vector<double>& best_history() const { return history_; }
  void record(double fitness);

 private:
  std::size_t budget_;
  EvaluationCallback callback_;
  std::size_t count_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
  std::vector<double> history_;  // best-so-far after each evaluation
};

/// Evaluates every genome without a fitness, in parallel, recording in index order. Stops
/// assigning fitness once the counter's budget is spent; unevaluated genomes get -inf.
void evaluate_population(std::vector<Genome>& population, const Objective& objective, EvaluationCounter& counter);

/// `size` genomes with uniform random genes and no fitness.
std::vector<Genome> random_population(std::size_t size, std::size_t gene_count, SplitMix64& rng);

/// Runs cfg.generations generations (fewer if the counter's budget runs out) and returns the
/// population sorted by fitness, best first.
std::vector<Genome> elementary_ga(const Objective& objective, std::vector<Genome> population, const GAConfig& cfg,
                                  const QualityTables& tables, SplitMix64& rng, EvaluationCounter& counter);
std::vector<Genome> elementary_ga(const Objective& objective, std::vector<Genome> population, const GAConfig& cfg,
                                  const QualityTables& tables, SplitMix64& rng);

/// Generations per node so a tree of the given depth fits in `budget` evaluations.
std::size_t tree_ga_generations(const GAConfig& cfg);

struct TreeGAResult {
  std::vector<Genome> best;  // top cfg.elite_carryover, best first
  std::size_t evaluations = 0;
  std::vector<double> best_history;
};

/// Binary tree of elementary GAs: leaves start random, inner nodes start from the top halves of
/// their children's final populations. Generation count comes from cfg.generations, or from
/// the evaluation budget when that is set.
TreeGAResult tree_structured_ga(const Objective& objective, std::size_t gene_count, const GAConfig& cfg,
                                const QualityTables& tables, const EvaluationCallback& callback = {});
TreeGAResult tree_structured_ga(const Objective& objective, std::size_t gene_count, const GAConfig& cfg,
                                const QualityTables& tables, SplitMix64& rng, const EvaluationCallback& callback = {});

// ---------------------------------------------------------------------------------------------
// Memetic algorithm

/// Loss (lower is better) and its gradient with respect to the genes.
using LossWithGrad = std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>;

struct MemeticConfig {
  GAConfig ga;
  std::size_t evaluation_budget = 5000;
  std::size_t adam_steps = 5;
  std::size_t seed_refine_steps = 20;  // descent given to each seed when seeds outnumber slots
  double refine_fraction = 0.25;
  double adam_lr = 0.02;
  double jitter = 0.05;
};

struct MemeticResult {
  std::vector<double> best_genes;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  std::vector<double> best_history;  // best-so-far loss after each evaluation
};

/// Population seeded from `seeds`: copied, with jittered copies filling the rest, or the best
/// population_size of them when there are more seeds than slots. Evolves like the
/// elementary GA with fitness = -loss, and the top fraction gets Adam refinement on the
/// non-frozen genes every generation. Returns the best genome ever evaluated.
MemeticResult memetic_optimize(const LossWithGrad& loss, const std::vector<std::vector<double>>& seeds,
                               const std::vector<bool>& frozen, const MemeticConfig& cfg,
                               const std::function<void(std::size_t, double)>& on_evaluation = {});

}  // namespace procrecon
