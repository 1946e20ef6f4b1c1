#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "procrecon/generators.hpp"
#include "procrecon/image_io.hpp"
#include "procrecon/render.hpp"

namespace procrecon {

class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------------------------
// Silhouette loss for differentiable generators

struct MultiviewLoss {
  double loss = 0.0;
  std::vector<double> d_params;                               // one per parameter, 0 at discrete slots
  std::vector<std::array<double, kCameraDofCount>> d_cameras;  // one per view
  std::vector<SilhouetteMask> rendered;                        // filled when requested
};

struct MultiviewOptions {
  RenderOptions render;
  std::uint64_t seed = 0;
  bool keep_renders = false;
};

/// Mean over views of mse(render(generate(P), cam_i), ref_i) with its gradient. Each camera
/// orbits the generator's anchor (its `target` field is ignored), so moving the anchor is part
/// of d_params. Views are rendered at their reference's resolution.
MultiviewLoss multiview_loss(const ParameterVector& params, const std::vector<Camera>& cams,
                             const std::vector<SilhouetteMask>& refs, const GeneratorInfo& gen, LevelOfDetail lod,
                             const MultiviewOptions& opts = {});
MultiviewLoss multiview_loss(const ParameterVector& params, const std::vector<Camera>& cams,
                             const std::vector<SilhouetteMask>& refs, const std::string& gen_id, LevelOfDetail lod,
                             const MultiviewOptions& opts = {});

/// Silhouette of a generator output as the loss sees it (excluded parts removed, camera on the anchor).
SilhouetteMask render_generator_view(const GeneratorOutput& out, const GeneratorInfo& gen, Camera cam,
                                     const RenderOptions& opts = {});

// ---------------------------------------------------------------------------------------------
// Tree similarity

enum class SemanticClass : std::uint8_t { Background = 0, Branch = 1, Foliage = 2 };

struct SemanticMask {
  int width = 0;
  int height = 0;
  std::vector<SemanticClass> classes;  // row-major

  SemanticMask() = default;
  SemanticMask(int w, int h) : width(w), height(h), classes(static_cast<std::size_t>(w) * h, SemanticClass::Background) {}
  SemanticClass at(int x, int y) const { return classes[static_cast<std::size_t>(y) * width + x]; }
  SemanticClass& at(int x, int y) { return classes[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count(SemanticClass c) const;
};

/// HSV thresholds; hue in degrees, saturation and value in [0,1].
struct ColorThresholds {
  double foliage_hue_min = 60.0;
  double foliage_hue_max = 180.0;
  double foliage_min_saturation = 0.25;
  double foliage_min_value = 0.15;
  double branch_hue_max = 60.0;
  double branch_max_saturation = 0.25;
  double branch_min_value = 0.1;
  double branch_max_value = 0.8;
};

SemanticClass classify_color(std::uint8_t r, std::uint8_t g, std::uint8_t b, const ColorThresholds& t = {});
SemanticMask semantic_from_color(const Image8& rgb, const ColorThresholds& t = {});
/// Brown branches and green foliage on white; round-trips through semantic_from_color.
Image8 semantic_to_color(const SemanticMask& mask);

/// Indexed PNG: 0 background, 1 branch, 2 foliage.
void save_semantic_png(const std::filesystem::path& path, const SemanticMask& mask);
SemanticMask load_semantic_png(const std::filesystem::path& path);

enum class StripeKind : std::uint8_t { Background, Trunk, Crown };

struct StripeRecord {
  int a = 0, b = 0, c = 0, d = 0;  // column borders, d exclusive
  double B = 0.0;                  // branch pixels / stripe area
  double L = 0.0;                  // foliage pixels / stripe area
  StripeKind kind = StripeKind::Background;
  bool operator==(const StripeRecord&) const = default;
};

struct StripeStats {
  int width = 0;
  std::vector<StripeRecord> stripes;
  std::size_t stripe_count() const { return stripes.size(); }
};

inline constexpr int kDefaultStripeCount = 24;

StripeStats stripe_decompose(const SemanticMask& mask, int n_stripes = kDefaultStripeCount);

/// Mean per-stripe similarity in [0,1]; 1 when both inputs are entirely background.
double tree_similarity(const StripeStats& ref, const StripeStats& gen);

/// Scalar tree characteristics; absent entries do not take part in regularization.
struct TreeCharacteristics {
  std::optional<double> vertex_count;
  std::optional<double> height;
  std::optional<double> width;
  std::optional<double> branch_density;
  std::optional<double> leaf_density;
  std::optional<double> leaf_size;
};

/// tsim times min/max ratios over characteristics present in both inputs. A fitness: higher
/// is more similar. Throws ValidationError on nonpositive characteristics.
double regularized_tree_loss(double tsim, const TreeCharacteristics& gen, const TreeCharacteristics& ref);

/// Characteristics of a generated tree.
TreeCharacteristics measure_tree(const TreeModel& model, const ParameterVector& params);

/// Foliage wherever leaf coverage reaches 0.5, else branch wherever trunk/branch coverage does.
SemanticMask render_semantic(const TriangleMesh& mesh, const Camera& cam);

}  // namespace procrecon
