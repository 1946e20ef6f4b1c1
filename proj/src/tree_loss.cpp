#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "procrecon/loss.hpp"

namespace procrecon {

std::size_t SemanticMask::count(SemanticClass c) const {
  return static_cast<std::size_t>(std::count(classes.begin(), classes.end(), c));
}

SemanticClass classify_color(std::uint8_t r, std::uint8_t g, std::uint8_t b, const ColorThresholds& t) {
  const double rf = r / 255.0, gf = g / 255.0, bf = b / 255.0;
  const double hi = std::max({rf, gf, bf}), lo = std::min({rf, gf, bf});
  const double chroma = hi - lo;
  const double v = hi;
  const double s = hi > 0.0 ? chroma / hi : 0.0;
  double h = 0.0;
  if (chroma > 0.0) {
    if (hi == rf)
      h = 60.0 * std::fmod((gf - bf) / chroma + 6.0, 6.0);
    else if (hi == gf)
      h = 60.0 * ((bf - rf) / chroma + 2.0);
    else
      h = 60.0 * ((rf - gf) / chroma + 4.0);
  }
  if (h >= t.foliage_hue_min && h <= t.foliage_hue_max && s > t.foliage_min_saturation && v > t.foliage_min_value)
    return SemanticClass::Foliage;
  const bool branch_value = v > t.branch_min_value && v <= t.branch_max_value;
  if (branch_value && (h < t.branch_hue_max || s <= t.branch_max_saturation)) return SemanticClass::Branch;
  return SemanticClass::Background;
}

SemanticMask semantic_from_color(const Image8& rgb, const ColorThresholds& t) {
  if (rgb.channels != 3) throw ValidationError("semantic_from_color: expected an RGB image");
  SemanticMask m(rgb.width, rgb.height);
  for (std::size_t i = 0; i < m.classes.size(); ++i)
    m.classes[i] = classify_color(rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2], t);
  return m;
}

namespace {

constexpr std::array<std::uint8_t, 9> kSemanticPalette = {255, 255, 255, 110, 70, 30, 40, 160, 40};

}  // namespace

Image8 semantic_to_color(const SemanticMask& mask) {
  Image8 img{mask.width, mask.height, 3, std::vector<std::uint8_t>(mask.classes.size() * 3)};
  for (std::size_t i = 0; i < mask.classes.size(); ++i) {
    const auto k = static_cast<std::size_t>(mask.classes[i]);
    for (int c = 0; c < 3; ++c) img.data[3 * i + c] = kSemanticPalette[3 * k + c];
  }
  return img;
}

void save_semantic_png(const std::filesystem::path& path, const SemanticMask& mask) {
  Image8 idx{mask.width, mask.height, 1, std::vector<std::uint8_t>(mask.classes.size())};
  for (std::size_t i = 0; i < mask.classes.size(); ++i) idx.data[i] = static_cast<std::uint8_t>(mask.classes[i]);
  write_png_indexed(path, idx, {kSemanticPalette.begin(), kSemanticPalette.end()});
}

SemanticMask load_semantic_png(const std::filesystem::path& path) {
  Image8 idx = read_png(path, PngLoad::Index);
  SemanticMask m(idx.width, idx.height);
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    if (idx.data[i] > 2) throw IoError(path.string() + ": semantic index " + std::to_string(idx.data[i]) + " out of range");
    m.classes[i] = static_cast<SemanticClass>(idx.data[i]);
  }
  return m;
}

StripeStats stripe_decompose(const SemanticMask& mask, int n_stripes) {
  if (n_stripes < 1) throw ValidationError("stripe_decompose: need at least one stripe");
  const int W = mask.width, H = mask.height;
  StripeStats stats;
  stats.width = W;
  stats.stripes.resize(n_stripes);
  std::vector<int> solid(W), foliage(W);
  for (int k = 0; k < n_stripes; ++k) {
    const int r0 = static_cast<int>(static_cast<long long>(H) * k / n_stripes);
    const int r1 = static_cast<int>(static_cast<long long>(H) * (k + 1) / n_stripes);
    std::fill(solid.begin(), solid.end(), 0);
    std::fill(foliage.begin(), foliage.end(), 0);
    std::size_t branch_px = 0, leaf_px = 0;
    for (int y = r0; y < r1; ++y)
      for (int x = 0; x < W; ++x) {
        const SemanticClass c = mask.at(x, y);
        if (c == SemanticClass::Background) continue;
        ++solid[x];
        if (c == SemanticClass::Foliage) {
          ++foliage[x];
          ++leaf_px;
        } else {
          ++branch_px;
        }
      }
    StripeRecord& s = stats.stripes[k];
    if (branch_px + leaf_px == 0) continue;  // all background: zeros
    s.a = static_cast<int>(std::find_if(solid.begin(), solid.end(), [](int v) { return v > 0; }) - solid.begin());
    s.d = W - static_cast<int>(std::find_if(solid.rbegin(), solid.rend(), [](int v) { return v > 0; }) - solid.rbegin());
    // Longest run of dense-foliage columns (first one on ties).
    int best_start = 0, best_len = 0;
    for (int x = s.a; x < s.d;) {
      if (!(solid[x] > 0 && 4 * foliage[x] > 3 * solid[x])) {
        ++x;
        continue;
      }
      int start = x;
      while (x < s.d && solid[x] > 0 && 4 * foliage[x] > 3 * solid[x]) ++x;
      if (x - start > best_len) {
        best_len = x - start;
        best_start = start;
      }
    }
    if (best_len > 0) {
      s.b = best_start;
      s.c = best_start + best_len;
    } else {
      s.b = s.c = (s.a + s.d) / 2;
    }
    const double area = static_cast<double>(r1 - r0) * W;
    s.B = branch_px / area;
    s.L = leaf_px / area;
    s.kind = s.L > s.B ? StripeKind::Crown : StripeKind::Trunk;
  }
  return stats;
}

double tree_similarity(const StripeStats& ref, const StripeStats& gen) {
  if (ref.stripe_count() != gen.stripe_count())
    throw ValidationError("tree_similarity: stripe counts differ (" + std::to_string(ref.stripe_count()) + " vs " +
                          std::to_string(gen.stripe_count()) + ")");
  if (ref.width != gen.width) throw ValidationError("tree_similarity: mask widths differ");
  constexpr double kEps = 1e-3;
  double sum = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < ref.stripes.size(); ++i) {
    const StripeRecord &r = ref.stripes[i], &g = gen.stripes[i];
    if (r.kind == StripeKind::Background && g.kind == StripeKind::Background) continue;
    const double shift = std::abs(r.a - g.a) + std::abs(r.b - g.b) + std::abs(r.c - g.c) + std::abs(r.d - g.d);
    const double rho_r = (r.B + kEps) / (r.L + kEps), rho_g = (g.B + kEps) / (g.L + kEps);
    double s = std::exp(-shift / std::max(1, ref.width)) * std::min(rho_r, rho_g) / std::max(rho_r, rho_g);
    if (r.kind != g.kind) s *= 0.5;
    sum += s;
    ++counted;
  }
  return counted == 0 ? 1.0 : sum / counted;
}

double regularized_tree_loss(double tsim, const TreeCharacteristics& gen, const TreeCharacteristics& ref) {
  double f = tsim;
  auto term = [&](const std::optional<double>& c, const std::optional<double>& c_ref, const char* name) {
    if (!c || !c_ref) return;
    if (!(*c > 0.0) || !(*c_ref > 0.0))
      throw ValidationError(std::string("tree characteristic '") + name + "' must be positive");
    f *= std::min(*c, *c_ref) / std::max(*c, *c_ref);
  };
  term(gen.vertex_count, ref.vertex_count, "vertex_count");
  term(gen.height, ref.height, "height");
  term(gen.width, ref.width, "width");
  term(gen.branch_density, ref.branch_density, "branch_density");
  term(gen.leaf_density, ref.leaf_density, "leaf_density");
  term(gen.leaf_size, ref.leaf_size, "leaf_size");
  return f;
}

TreeCharacteristics measure_tree(const TreeModel& model, const ParameterVector& params) {
  TreeCharacteristics c;
  auto positive = [](double v) { return v > 0.0 ? std::optional<double>(v) : std::nullopt; };
  c.vertex_count = positive(static_cast<double>(model.graph_vertex_count));
  if (model.mesh.vertex_count() > 0) {
    const Bounds b = mesh_bounds(model.mesh);
    c.height = positive(b.hi.y - b.lo.y);
    c.width = positive(std::max(b.hi.x - b.lo.x, b.hi.z - b.lo.z));
    if (c.height) c.branch_density = positive(model.total_branch_length / *c.height);
  }
  if (model.total_branch_length > 0.0) c.leaf_density = positive(model.leaf_count / model.total_branch_length);
  if (model.leaf_count > 0) c.leaf_size = positive(params.get("leaf_size"));
  return c;
}

SemanticMask render_semantic(const TriangleMesh& mesh, const Camera& cam) {
  std::vector<Triangle> wood, leaves;
  for (std::size_t t = 0; t < mesh.indices.size(); ++t)
    (mesh.part_labels[t] == Part::Leaf ? leaves : wood).push_back(mesh.indices[t]);
  RenderOptions opts;
  opts.cull_backfaces = false;
  const SilhouetteMask w = render_silhouette(mesh.positions, wood, cam, opts);
  const SilhouetteMask l = render_silhouette(mesh.positions, leaves, cam, opts);
  SemanticMask m(cam.width, cam.height);
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    if (l.coverage[i] >= 0.5)
      m.classes[i] = SemanticClass::Foliage;
    else if (w.coverage[i] >= 0.5)
      m.classes[i] = SemanticClass::Branch;
  }
  return m;
}

}  // namespace procrecon
