#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "procrecon/generators.hpp"
#include "procrecon/loss.hpp"
#include "procrecon/optim.hpp"
#include "procrecon/render.hpp"

namespace procrecon {

/// The reference cannot be reconstructed (e.g. it contains no object pixels).
class ReconstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StageMethod { Memetic, Adam, TreeGA };
std::string_view stage_method_name(StageMethod m);
StageMethod stage_method_from_name(std::string_view name);

struct StageConfig {
  int resolution = 128;  // square, power of two >= 64
  StageMethod method = StageMethod::Memetic;
  std::size_t iterations = 5000;  // evaluation budget (memetic, tree GA) or Adam steps
  std::optional<int> lod;         // default: first_stage_tier + stage index, capped
};

void check_stage(const StageConfig& s);

/// Memetic at 128, then Adam stages at doubling resolution.
std::vector<StageConfig> default_stages(std::size_t stage_count = 4, std::size_t memetic_budget = 5000,
                                        std::size_t adam_iterations = 250);

// ---------------------------------------------------------------------------------------------
// Camera genes: four per view, each mapped linearly from [0,1].

struct CameraBounds {
  double azimuth_min, azimuth_max;
  double elevation_min, elevation_max;
  double distance_min, distance_max;
  double fov_min, fov_max;
};

/// Azimuth over a full turn, elevation in [-30, 75] degrees, distance in [0.4, 2.5] x d0,
/// vertical field of view in [15, 75] degrees.
CameraBounds camera_bounds(double d0);
std::array<double, 4> camera_to_genes(const Camera& cam, const CameraBounds& b);
Camera camera_from_genes(std::span<const double> genes, const CameraBounds& b, int width, int height);
/// d(camera dof)/d(gene) for each of the four genes.
std::array<double, 4> camera_gene_scale(const CameraBounds& b);

inline constexpr double kInitialElevation = 15.0 * 3.14159265358979323846 / 180.0;
inline constexpr double kInitialFov = 40.0 * 3.14159265358979323846 / 180.0;

/// Distance at which an object of bounding radius `radius` fills `fraction` of the image height
/// at the initial field of view.
double distance_for_fraction(double radius, double fraction);
/// Largest side of the mask's thresholded bounding box divided by the image size.
double silhouette_extent(const SilhouetteMask& mask);

// ---------------------------------------------------------------------------------------------
// Reconstruction

struct HistoryEntry {
  std::size_t evaluation = 0;
  std::size_t stage = 0;
  double value = 0.0;
  double best = 0.0;
};

struct StageResult {
  StageMethod method = StageMethod::Memetic;
  int resolution = 0;
  int lod = 0;
  double best_value = 0.0;
  std::size_t evaluations = 0;
  std::vector<SilhouetteMask> masks;  // best model rendered from each best camera
  std::optional<SemanticMask> semantic;
};

struct ReconstructionResult {
  ParameterVector best_params;
  std::vector<Camera> best_cameras;
  std::vector<StageResult> stages;
  std::vector<HistoryEntry> history;  // every `log_every` evaluations plus each stage's last
  bool maximized = false;             // history values are fitness (tree) rather than loss
  TriangleMesh mesh;
  double seconds = 0.0;
  std::uint64_t tree_seed = 0;
};

struct ReconstructionConfig {
  std::vector<StageConfig> stages = default_stages();
  std::vector<Preset> presets;                    // memetic seeds; generator midpoint when empty
  std::optional<std::vector<Camera>> camera_hint;  // initial cameras, one per view
  MemeticConfig memetic;
  GAConfig ga;
  std::optional<QualityTables> tables;  // tree GA mutation guidance; flat when absent
  double adam_lr = 0.004;
  std::uint64_t seed = 0;
  std::size_t log_every = 50;
  std::function<void(const HistoryEntry&)> on_log;
};

ReconstructionResult reconstruct_differentiable(const std::string& gen_id, const std::vector<SilhouetteMask>& refs,
                                                const ReconstructionConfig& cfg);

/// Number of distinct generator seeds reachable from the embedded seed gene.
inline constexpr std::uint64_t kTreeSeedCount = 1024;
std::uint64_t tree_seed_from_gene(double g);

/// Genome = tree genes, 4 camera genes, seed gene. The camera orbits the generated tree's
/// bounding-box centre and renders at the reference resolution.
ReconstructionResult reconstruct_tree(const Image8& ref_rgb, const TreeCharacteristics& ref_chars,
                                      const ReconstructionConfig& cfg);

/// Mean silhouette IoU over uniform viewpoints after normalizing both meshes to the unit
/// bounding sphere about their bounding-box centres.
double evaluate_iou(const TriangleMesh& a, const TriangleMesh& b, int n_views = 64, int resolution = 256);

// ---------------------------------------------------------------------------------------------
// Quality-table collection for a generator's objective family

struct TableCollectionConfig {
  QualityConfig quality;
  std::size_t family_size = 8;
  int resolution = 64;
};

/// Random references come from random genomes; each family member scores genomes against one.
QualityTables collect_generator_tables(const std::string& gen_id, const TableCollectionConfig& cfg);

// ---------------------------------------------------------------------------------------------
// Job files

struct ReferenceSpec {
  std::filesystem::path path;
  std::string type = "mask";  // "mask" or "rgb"
};

struct JobConfig {
  std::string generator;
  std::vector<ReferenceSpec> references;
  std::filesystem::path presets_dir;
  std::vector<StageConfig> stages;
  GAConfig ga;
  std::size_t memetic_budget = 5000;
  std::optional<std::filesystem::path> tables_path;
  TreeCharacteristics characteristics;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
};

/// Parses a job file; relative paths resolve against the file's directory. Throws
/// ValidationError for malformed content and IoError for unreadable files.
JobConfig load_job_config(const std::filesystem::path& path);
JobConfig parse_job_config(const std::string& text, const std::filesystem::path& base_dir);

/// Runs a job and writes result.obj, params.json, cameras.json, history.csv and stage masks.
ReconstructionResult run_job(const JobConfig& job);

std::string cameras_to_json(const std::vector<Camera>& cams);

}  // namespace procrecon
