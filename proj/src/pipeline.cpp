#include "procrecon/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "procrecon/parallel.hpp"

namespace procrecon {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr std::size_t kAzimuthSweep = 64;
constexpr std::size_t kDiscreteRounds = 2;
constexpr std::size_t kDiscreteRefitSteps = 60;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

std::string_view stage_method_name(StageMethod m) {
  switch (m) {
    case StageMethod::Memetic: return "memetic";
    case StageMethod::Adam: return "adam";
    case StageMethod::TreeGA: return "tree_ga";
  }
  return "memetic";
}

StageMethod stage_method_from_name(std::string_view name) {
  if (name == "memetic") return StageMethod::Memetic;
  if (name == "adam") return StageMethod::Adam;
  if (name == "tree_ga" || name == "ga") return StageMethod::TreeGA;
  throw ValidationError("unknown stage method '" + std::string(name) + "' (expected memetic, adam or tree_ga)");
}

void check_stage(const StageConfig& s) {
  if (s.resolution < 64 || !is_power_of_two(s.resolution))
    throw ValidationError("stage resolution must be a power of two >= 64, got " + std::to_string(s.resolution));
  if (s.method != StageMethod::Adam && s.iterations < 1) throw ValidationError("stage budget must be >= 1");
}

std::vector<StageConfig> default_stages(std::size_t stage_count, std::size_t memetic_budget,
                                        std::size_t adam_iterations) {
  std::vector<StageConfig> stages;
  for (std::size_t i = 0; i < stage_count; ++i)
    stages.push_back({128 << i, i == 0 ? StageMethod::Memetic : StageMethod::Adam,
                      i == 0 ? memetic_budget : adam_iterations, std::nullopt});
  return stages;
}

CameraBounds camera_bounds(double d0) {
  return {-std::numbers::pi, std::numbers::pi, -30.0 * kDeg, 75.0 * kDeg, 0.4 * d0, 2.5 * d0, 15.0 * kDeg, 75.0 * kDeg};
}

std::array<double, 4> camera_gene_scale(const CameraBounds& b) {
  return {b.azimuth_max - b.azimuth_min, b.elevation_max - b.elevation_min, b.distance_max - b.distance_min,
          b.fov_max - b.fov_min};
}

std::array<double, 4> camera_to_genes(const Camera& cam, const CameraBounds& b) {
  auto g = [](double v, double lo, double hi) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); };
  const double az = std::remainder(cam.azimuth, 2.0 * std::numbers::pi);
  return {g(az, b.azimuth_min, b.azimuth_max), g(cam.elevation, b.elevation_min, b.elevation_max),
          g(cam.distance, b.distance_min, b.distance_max), g(cam.fov_y, b.fov_min, b.fov_max)};
}

Camera camera_from_genes(std::span<const double> genes, const CameraBounds& b, int width, int height) {
  Camera c;
  c.azimuth = b.azimuth_min + genes[0] * (b.azimuth_max - b.azimuth_min);
  c.elevation = b.elevation_min + genes[1] * (b.elevation_max - b.elevation_min);
  c.distance = b.distance_min + genes[2] * (b.distance_max - b.distance_min);
  c.fov_y = b.fov_min + genes[3] * (b.fov_max - b.fov_min);
  c.width = width;
  c.height = height;
  return c;
}

double distance_for_fraction(double radius, double fraction) {
  return radius / (std::max(fraction, 1e-3) * std::tan(kInitialFov / 2));
}

double silhouette_extent(const SilhouetteMask& mask) {
  int x0 = mask.width, x1 = -1, y0 = mask.height, y1 = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y) >= 0.5) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return 0.0;
  return std::max(static_cast<double>(x1 - x0 + 1) / mask.width, static_cast<double>(y1 - y0 + 1) / mask.height);
}

namespace {

double bounding_radius(const TriangleMesh& mesh, const Vec3& center) {
  double r = 0.0;
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3 d = mesh.vertex(i) - center;
    r = std::max(r, std::sqrt(dot(d, d)));
  }
  return r;
}

// Records every evaluation and keeps the logged subset.
class HistoryLog {
 public:
  HistoryLog(ReconstructionResult& result, const ReconstructionConfig& cfg, bool maximize)
      : result_(result), cfg_(cfg), maximize_(maximize) {
    best_ = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  }

  void record(std::size_t stage, double value) {
    if (maximize_ ? value > best_ : value < best_) best_ = value;
    last_ = {count_, stage, value, best_};
    if (cfg_.log_every > 0 && count_ % cfg_.log_every == 0) push(last_);
    ++count_;
  }

  // Makes sure each stage's final state appears in the log.
  void close_stage() {
    if (count_ > 0 && (result_.history.empty() || result_.history.back().evaluation != last_.evaluation)) push(last_);
  }

 private:
  void push(const HistoryEntry& e) {
    result_.history.push_back(e);
    if (cfg_.on_log) cfg_.on_log(e);
  }

  ReconstructionResult& result_;
  const ReconstructionConfig& cfg_;
  bool maximize_;
  double best_;
  std::size_t count_ = 0;
  HistoryEntry last_;
};

struct DiffGenome {
  const GeneratorInfo& gen;
  std::size_t param_count;
  std::size_t views;
  CameraBounds bounds;

  std::size_t size() const { return param_count + 4 * views; }

  ParameterVector params(const std::vector<double>& genes) const {
    return from_genes({genes.begin(), genes.begin() + static_cast<std::ptrdiff_t>(param_count)}, *gen.specs);
  }
  std::vector<Camera> cameras(const std::vector<double>& genes, int res) const {
    std::vector<Camera> cams;
    for (std::size_t v = 0; v < views; ++v)
      cams.push_back(camera_from_genes(std::span(genes).subspan(param_count + 4 * v, 4), bounds, res, res));
    return cams;
  }
  std::vector<bool> frozen() const {
    std::vector<bool> f = discrete_mask(*gen.specs);
    f.resize(size(), false);
    return f;
  }
};

}  // namespace

ReconstructionResult reconstruct_differentiable(const std::string& gen_id, const std::vector<SilhouetteMask>& refs,
                                                const ReconstructionConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const GeneratorInfo& gen = find_generator(gen_id);
  if (!gen.differentiable || !gen.generate)
    throw UnsupportedOperation("generator '" + gen_id + "' is not differentiable; use reconstruct_tree");
  if (refs.empty() || refs.size() > 16) throw ValidationError("need between 1 and 16 reference views");
  if (cfg.stages.empty()) throw ValidationError("reconstruction needs at least one stage");
  if (cfg.camera_hint && cfg.camera_hint->size() != refs.size())
    throw ValidationError("camera hint has " + std::to_string(cfg.camera_hint->size()) + " cameras for " +
                          std::to_string(refs.size()) + " references");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].width != refs[i].height) throw ValidationError("reference masks must be square");
    if (silhouette_extent(refs[i]) == 0.0)
      throw ReconstructionError("reference " + std::to_string(i) + " contains no object pixels");
  }
  for (const auto& s : cfg.stages) {
    check_stage(s);
    if (s.method == StageMethod::TreeGA) throw ValidationError("tree_ga stages apply only to the tree generator");
  }

  // Seeds: presets, or the midpoint when none are given.
  std::vector<ParameterVector> seeds;
  for (const auto& p : cfg.presets) {
    if (p.vector.specs().size() != gen.specs->size()) throw ValidationError("preset '" + p.name + "' does not match generator");
    seeds.push_back(p.vector);
  }
  if (seeds.empty()) seeds.push_back(ParameterVector::midpoint(*gen.specs));

  // Framing: the first seed at its first-stage tier fills the reference's share of the image.
  const LevelOfDetail seed_lod{gen.first_stage_tier};
  const GeneratorOutput seed_out = gen.generate(seeds.front(), seed_lod);
  const double radius = std::max(1e-6, bounding_radius(seed_out.mesh, seed_out.anchor));
  double extent = 0.0;
  for (const auto& r : refs) extent += silhouette_extent(r) / static_cast<double>(refs.size());
  const double d0 = cfg.camera_hint ? cfg.camera_hint->front().distance : distance_for_fraction(radius, extent);
  const DiffGenome layout{gen, gen.specs->size(), refs.size(), camera_bounds(d0)};

  // Initial cameras: the hint, or uniform azimuths at a common elevation and distance.
  std::vector<double> cam_genes;
  for (std::size_t v = 0; v < refs.size(); ++v) {
    Camera c;
    if (cfg.camera_hint) {
      c = (*cfg.camera_hint)[v];
    } else {
      c.azimuth = 2.0 * std::numbers::pi * static_cast<double>(v) / static_cast<double>(refs.size());
      c.elevation = kInitialElevation;
      c.distance = d0;
      c.fov_y = kInitialFov;
    }
    const auto g = camera_to_genes(c, layout.bounds);
    cam_genes.insert(cam_genes.end(), g.begin(), g.end());
  }

  ReconstructionResult result;
  HistoryLog log(result, cfg, false);
  const std::vector<bool> frozen = layout.frozen();
  const auto cam_scale = camera_gene_scale(layout.bounds);

  std::vector<double> best = to_genes(seeds.front());  // best genome so far
  best.insert(best.end(), cam_genes.begin(), cam_genes.end());

  for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
    const StageConfig& stage = cfg.stages[si];
    const int tier = stage.lod ? *stage.lod : std::min(gen.max_tier, gen.first_stage_tier + static_cast<int>(si));
    const LevelOfDetail lod{tier};
    check_lod(gen, lod);
    std::vector<SilhouetteMask> stage_refs;
    for (const auto& r : refs) stage_refs.push_back(resample(r, stage.resolution, stage.resolution));

    std::size_t stage_evals = 0;
    // Loss over the first `n_views` views; the remaining cameras get zero gradient.
    const auto make_loss = [&](std::size_t n_views) -> LossWithGrad {
      return [&, n_views](const std::vector<double>& genes) {
        MultiviewOptions opts;
        opts.seed = mix_seed(cfg.seed, 1000003 * si + stage_evals);
        std::vector<Camera> cams = layout.cameras(genes, stage.resolution);
        cams.resize(n_views);
        const std::vector<SilhouetteMask> sub(stage_refs.begin(), stage_refs.begin() + static_cast<std::ptrdiff_t>(n_views));
        const MultiviewLoss ml = multiview_loss(layout.params(genes), cams, sub, gen, lod, opts);
        std::vector<double> grad(layout.size(), 0.0);
        for (std::size_t k = 0; k < layout.param_count; ++k) {
          const auto& spec = (*gen.specs)[k];
          grad[k] = spec.is_discrete() ? 0.0 : ml.d_params[k] * (spec.max - spec.min);
        }
        for (std::size_t v = 0; v < n_views; ++v)
          for (std::size_t j = 0; j < 4; ++j) grad[layout.param_count + 4 * v + j] = ml.d_cameras[v][j] * cam_scale[j];
        return std::pair{ml.loss, std::move(grad)};
      };
    };
    const LossWithGrad loss = make_loss(layout.views);
    const auto record = [&](std::size_t, double value) {
      ++stage_evals;
      log.record(si, value);
    };

    double stage_best = std::numeric_limits<double>::infinity();
    if (stage.method == StageMethod::Memetic) {
      struct Best {
        std::vector<double> genes;
        double loss = std::numeric_limits<double>::infinity();
      };
      std::size_t used = 0;
      const auto probe = [&](const LossWithGrad& f, const std::vector<double>& g, Best& b) {
        auto [l, grad] = f(g);
        record(used++, l);
        if (l < b.loss) b = {g, l};
        return grad;
      };
      const auto descend = [&](const LossWithGrad& f, Best& b, std::size_t limit,
                               std::size_t steps) {
        std::vector<double> g = b.genes;
        AdamState st = AdamState::zeros(g.size(), cfg.memetic.adam_lr);
        for (std::size_t it = 0; it < steps && used < limit; ++it) {
          const auto grad = probe(f, g, b);
          adam_step(st, g, grad, frozen);
        }
      };
      // Azimuth grid around b for views [first, last) turned together. Symmetric parts leave the
      // loss flat in azimuth, so asymmetric ones (handles, doors) decide where this lands.
      const auto sweep = [&](const LossWithGrad& f, Best& b, std::size_t first, std::size_t last, std::size_t limit) {
        const std::vector<double> base = b.genes;
        for (std::size_t k = 1; k < kAzimuthSweep && used < limit; ++k) {
          std::vector<double> r = base;
          for (std::size_t v = first; v < last; ++v) {
            double& a = r[layout.param_count + 4 * v];
            a = std::fmod(a + static_cast<double>(k) / static_cast<double>(kAzimuthSweep), 1.0);
          }
          probe(f, r, b);
        }
      };
      const auto evolve = [&](const LossWithGrad& f, const std::vector<std::vector<double>>& seed_genomes,
                              std::size_t limit, Best& b, std::uint64_t salt = 0) {
        if (used >= limit || seed_genomes.empty()) return;
        MemeticConfig mc = cfg.memetic;
        mc.evaluation_budget = limit - used;
        mc.ga.rng_seed = mix_seed(mix_seed(cfg.seed, si), salt);
        const MemeticResult mr = memetic_optimize(f, seed_genomes, frozen, mc, record);
        used += mr.evaluations;
        if (mr.best_loss < b.loss) b = {mr.best_genes, mr.best_loss};
      };

      // One grid step up or down in a discrete parameter, refitted by a short descent; kept when
      // it lowers the loss. Counts and flags rarely pay off without the continuous genes moving.
      std::vector<std::size_t> discrete_slots;
      for (std::size_t k = 0; k < layout.param_count; ++k)
        if ((*gen.specs)[k].is_discrete()) discrete_slots.push_back(k);
      const auto step_discrete = [&](Best& b, std::size_t limit) {
        for (std::size_t round = 0; round < kDiscreteRounds; ++round) {
          bool improved = false;
          for (std::size_t k : discrete_slots) {
            const ParamSpec& spec = (*gen.specs)[k];
            const double value = spec.snap(spec.min + b.genes[k] * (spec.max - spec.min));
            for (double dir : {-1.0, 1.0, -2.0, 2.0}) {
              const double next = value + dir * spec.step;
              if (next < spec.min - 1e-9 || next > spec.max + 1e-9 || used >= limit) continue;
              Best trial;
              trial.genes = b.genes;
              trial.genes[k] = (next - spec.min) / (spec.max - spec.min);
              probe(loss, trial.genes, trial);
              descend(loss, trial, limit, kDiscreteRefitSteps);
              if (trial.loss < b.loss) {
                b = trial;
                improved = true;
              }
            }
          }
          if (!improved) break;
        }
      };

      const bool sweeps = !cfg.camera_hint;
      const std::size_t trial_cost = kDiscreteRefitSteps + 1;
      const std::size_t discrete_reserve = std::min(stage.iterations / 5, kDiscreteRounds * 4 * discrete_slots.size() * trial_cost);
      const std::size_t polish = sweeps ? std::min(stage.iterations / 8, layout.views * (kAzimuthSweep - 1)) : 0;
      const std::size_t limit = stage.iterations - polish - discrete_reserve;
      Best cur;
      if (si > 0) {
        evolve(loss, {best}, limit, cur);
      } else if (!sweeps) {
        std::vector<std::vector<double>> seed_genomes;
        for (const auto& s : seeds) {
          auto g = to_genes(s);
          g.insert(g.end(), cam_genes.begin(), cam_genes.end());
          seed_genomes.push_back(std::move(g));
        }
        evolve(loss, seed_genomes, limit, cur);
      } else {
        // Views are registered one after another: the first view alone fixes the shape well
        // enough that asymmetric parts become findable from the others.
        const bool staged = layout.views > 1;
        const LossWithGrad first = staged ? make_loss(1) : loss;
        const std::size_t first_limit = staged ? limit / 2 : limit;
        std::vector<std::vector<double>> seed_genomes;
        for (const auto& s : seeds) {
          if (used >= first_limit) break;
          std::vector<double> g = to_genes(s);
          g.insert(g.end(), cam_genes.begin(), cam_genes.end());
          // Aiming the untouched preset keeps an exact match from drifting before it is
          // registered; aiming after a fit copes better when the framing guess is poor. Only the
          // better of the two goes into the population.
          Best a{g};
          probe(first, a.genes, a);
          sweep(first, a, 0, 1, first_limit);
          descend(first, a, first_limit, cfg.memetic.seed_refine_steps);
          Best b{g};
          descend(first, b, first_limit, cfg.memetic.seed_refine_steps);
          sweep(first, b, 0, 1, first_limit);
          descend(first, b, first_limit, cfg.memetic.seed_refine_steps);
          Best& pick = a.loss < b.loss ? a : b;
          if (!pick.genes.empty()) seed_genomes.push_back(std::move(pick.genes));
        }
        Best one;
        evolve(first, seed_genomes, first_limit, one);
        if (!staged) {
          cur = one;
        } else if (!one.genes.empty()) {
          std::vector<double> g = one.genes;
          for (std::size_t v = 1; v < layout.views; ++v)
            for (std::size_t j = 1; j < 4; ++j) g[layout.param_count + 4 * v + j] = g[layout.param_count + j];
          probe(loss, g, cur);
          for (std::size_t v = 1; v < layout.views; ++v) sweep(loss, cur, v, v + 1, limit);
          descend(loss, cur, limit, cfg.memetic.seed_refine_steps);
          evolve(loss, {cur.genes}, limit, cur);
        }
      }
      if (!cur.genes.empty()) step_discrete(cur, stage.iterations - polish);
      // The shape now fits, so a misplaced asymmetric part costs more than a hidden one:
      // re-aim each view.
      if (sweeps && !cur.genes.empty())
        for (std::size_t v = 0; v < layout.views; ++v) sweep(loss, cur, v, v + 1, stage.iterations);
      if (!cur.genes.empty()) {
        best = cur.genes;
        stage_best = cur.loss;
      }
    } else {
      std::vector<double> x = best;
      AdamState st = AdamState::zeros(x.size(), cfg.adam_lr);
      for (std::size_t it = 0; it < stage.iterations; ++it) {
        auto [l, g] = loss(x);
        record(it, l);
        if (l < stage_best) {
          stage_best = l;
          best = x;
        }
        adam_step(st, x, g, frozen);
      }
      if (stage.iterations == 0) stage_best = loss(best).first;
    }
    log.close_stage();

    StageResult sr;
    sr.method = stage.method;
    sr.resolution = stage.resolution;
    sr.lod = tier;
    sr.best_value = stage_best;
    sr.evaluations = stage_evals;
    const GeneratorOutput out = gen.generate(layout.params(best), lod);
    for (const Camera& c : layout.cameras(best, stage.resolution))
      sr.masks.push_back(render_generator_view(out, gen, c));
    result.stages.push_back(std::move(sr));
  }

  result.best_params = layout.params(best);
  const GeneratorOutput final_out = gen.generate(result.best_params, LevelOfDetail{gen.max_tier});
  result.best_cameras = layout.cameras(best, refs.front().width);
  for (Camera& c : result.best_cameras) c.target = final_out.anchor;
  result.mesh = final_out.mesh;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::uint64_t tree_seed_from_gene(double g) {
  return std::min<std::uint64_t>(kTreeSeedCount - 1, static_cast<std::uint64_t>(std::floor(g * kTreeSeedCount)));
}

namespace {

constexpr std::size_t kTreeCamOffset = 10;

struct TreeView {
  TreeModel model;
  Camera cam;
};

TreeView tree_view(const std::vector<double>& genes, const CameraBounds& bounds, int width, int height,
                   ParameterVector* params_out = nullptr) {
  const ParamSpecList& specs = tree_specs();
  const ParameterVector params = from_genes({genes.begin(), genes.begin() + static_cast<std::ptrdiff_t>(specs.size())}, specs);
  TreeView tv{generate_tree_model(params, tree_seed_from_gene(genes[specs.size() + 4])),
              camera_from_genes(std::span(genes).subspan(specs.size(), 4), bounds, width, height)};
  tv.cam.target = mesh_bounds(tv.model.mesh).center();
  if (params_out) *params_out = params;
  return tv;
}

}  // namespace

ReconstructionResult reconstruct_tree(const Image8& ref_rgb, const TreeCharacteristics& ref_chars,
                                      const ReconstructionConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const SemanticMask ref = semantic_from_color(ref_rgb);
  if (ref.count(SemanticClass::Background) == ref.classes.size())
    throw ReconstructionError("tree reference contains no branch or foliage pixels");
  const int W = ref.width, H = ref.height;
  const StripeStats ref_stats = stripe_decompose(ref);

  std::size_t budget = 50000;
  for (const auto& s : cfg.stages)
    if (s.method == StageMethod::TreeGA) budget = s.iterations;

  const ParamSpecList& specs = tree_specs();
  const std::size_t n_genes = specs.size() + 4 + 1;
  static_assert(kTreeCamOffset == 10);

  SilhouetteMask ref_cov(W, H);
  for (std::size_t i = 0; i < ref.classes.size(); ++i) ref_cov.coverage[i] = ref.classes[i] != SemanticClass::Background;
  const TreeModel mid = generate_tree_model(ParameterVector::midpoint(specs), 0);
  const Bounds mb = mesh_bounds(mid.mesh);
  const double d0 = distance_for_fraction(bounding_radius(mid.mesh, mb.center()), silhouette_extent(ref_cov));
  const CameraBounds bounds = camera_bounds(d0);

  const Objective fitness = [&](const std::vector<double>& genes) {
    ParameterVector params;
    const TreeView tv = tree_view(genes, bounds, W, H, &params);
    const StripeStats gen_stats = stripe_decompose(render_semantic(tv.model.mesh, tv.cam));
    return regularized_tree_loss(tree_similarity(ref_stats, gen_stats), measure_tree(tv.model, params), ref_chars);
  };

  QualityTables tables = cfg.tables ? *cfg.tables : QualityTables::uniform(n_genes, cfg.ga.bins);
  if (tables.gene_count != n_genes)
    throw ValidationError("quality tables cover " + std::to_string(tables.gene_count) + " genes, tree genome has " +
                          std::to_string(n_genes));

  ReconstructionResult result;
  result.maximized = true;
  HistoryLog log(result, cfg, true);
  GAConfig ga = cfg.ga;
  ga.evaluation_budget = budget;
  ga.rng_seed = mix_seed(cfg.seed, 0);
  const TreeGAResult gr = tree_structured_ga(fitness, n_genes, ga, tables, [&](std::size_t, double f) { log.record(0, f); });
  log.close_stage();

  const std::vector<double>& best = gr.best.front().genes;
  ParameterVector params;
  TreeView tv = tree_view(best, bounds, W, H, &params);
  StageResult sr;
  sr.method = StageMethod::TreeGA;
  sr.resolution = W;
  sr.best_value = *gr.best.front().fitness;
  sr.evaluations = gr.evaluations;
  SemanticMask sem = render_semantic(tv.model.mesh, tv.cam);
  SilhouetteMask cov(W, H);
  for (std::size_t i = 0; i < sem.classes.size(); ++i) cov.coverage[i] = sem.classes[i] != SemanticClass::Background;
  sr.masks.push_back(std::move(cov));
  sr.semantic = std::move(sem);
  result.stages.push_back(std::move(sr));

  result.best_params = params;
  result.best_cameras = {tv.cam};
  result.tree_seed = tree_seed_from_gene(best[specs.size() + 4]);
  result.mesh = std::move(tv.model.mesh);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double evaluate_iou(const TriangleMesh& a, const TriangleMesh& b, int n_views, int resolution) {
  auto normalized_positions = [](const TriangleMesh& m, const char* which) {
    if (m.vertex_count() == 0 || m.triangle_count() == 0)
      throw ValidationError(std::string("evaluate_iou: mesh ") + which + " is empty");
    const Vec3 c = mesh_bounds(m).center();
    const double r = bounding_radius(m, c);
    if (!(r > 0.0)) throw ValidationError(std::string("evaluate_iou: mesh ") + which + " is degenerate");
    std::vector<double> p(m.positions.size());
    for (std::size_t i = 0; i < m.vertex_count(); ++i) {
      p[3 * i] = (m.positions[3 * i] - c.x) / r;
      p[3 * i + 1] = (m.positions[3 * i + 1] - c.y) / r;
      p[3 * i + 2] = (m.positions[3 * i + 2] - c.z) / r;
    }
    return p;
  };
  const auto pa = normalized_positions(a, "a");
  const auto pb = normalized_positions(b, "b");
  const auto cams = uniform_viewpoints(n_views, 3.5, Vec3{0, 0, 0}, 40.0 * kDeg, resolution, resolution);
  // Both sides of every triangle count, so arbitrary input winding does not matter.
  RenderOptions opts;
  opts.cull_backfaces = false;
  std::vector<double> ious(cams.size());
  parallel_for(cams.size(), [&](std::size_t i) {
    ious[i] = silhouette_iou(render_silhouette(pa, a.indices, cams[i], opts), render_silhouette(pb, b.indices, cams[i], opts));
  });
  double sum = 0.0;
  for (double v : ious) sum += v;
  return sum / static_cast<double>(ious.size());
}

QualityTables collect_generator_tables(const std::string& gen_id, const TableCollectionConfig& cfg) {
  const GeneratorInfo& gen = find_generator(gen_id);
  const int R = cfg.resolution;
  if (R < 16) throw ValidationError("table collection resolution must be >= 16");
  const ParamSpecList& specs = *gen.specs;

  if (!gen.differentiable) {
    const std::size_t n_genes = specs.size() + 5;
    const TreeModel mid = generate_tree_model(ParameterVector::midpoint(specs), 0);
    const CameraBounds bounds = camera_bounds(distance_for_fraction(bounding_radius(mid.mesh, mesh_bounds(mid.mesh).center()), 0.6));
    const ObjectiveFamily family = [&, bounds](std::size_t index) -> Objective {
      SplitMix64 rng(mix_seed(cfg.quality.seed, 7919 + index));
      std::vector<double> ref_genes(n_genes);
      for (double& g : ref_genes) g = uniform01(rng);
      const TreeView tv = tree_view(ref_genes, bounds, R, R);
      const StripeStats ref = stripe_decompose(render_semantic(tv.model.mesh, tv.cam));
      return [ref, bounds, R](const std::vector<double>& genes) {
        const TreeView g = tree_view(genes, bounds, R, R);
        return tree_similarity(ref, stripe_decompose(render_semantic(g.model.mesh, g.cam)));
      };
    };
    return collect_quality_tables(family, cfg.family_size, n_genes, cfg.quality);
  }

  const GeneratorOutput mid = gen.generate(ParameterVector::midpoint(specs), LevelOfDetail{gen.first_stage_tier});
  const DiffGenome layout{gen, specs.size(), 1, camera_bounds(distance_for_fraction(bounding_radius(mid.mesh, mid.anchor), 0.6))};
  const LevelOfDetail lod{gen.first_stage_tier};
  const ObjectiveFamily family = [&, layout](std::size_t index) -> Objective {
    SplitMix64 rng(mix_seed(cfg.quality.seed, 7919 + index));
    std::vector<double> ref_genes(layout.size());
    for (double& g : ref_genes) g = uniform01(rng);
    const GeneratorOutput out = gen.generate(layout.params(ref_genes), lod);
    const SilhouetteMask ref = render_generator_view(out, gen, layout.cameras(ref_genes, R).front());
    return [ref, layout, lod, R, &gen](const std::vector<double>& genes) {
      const GeneratorOutput o = gen.generate(layout.params(genes), lod);
      return -mse(render_generator_view(o, gen, layout.cameras(genes, R).front()), ref).first;
    };
  };
  return collect_quality_tables(family, cfg.family_size, layout.size(), cfg.quality);
}

}  // namespace procrecon
