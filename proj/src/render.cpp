#include "procrecon/render.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "procrecon/kernels.hpp"
#include "procrecon/parallel.hpp"
#include "procrecon/random.hpp"

namespace procrecon {

double SilhouetteMask::sum() const { return std::accumulate(coverage.begin(), coverage.end(), 0.0); }

namespace {

struct ScreenVertex {
  double x, y, depth;
};

struct TriSetup {
  EdgeSetup e;
  double minx, maxx, miny, maxy;
  bool usable = false;
};

std::vector<ScreenVertex> project_all(std::span<const double> positions, const Camera& cam) {
  std::vector<ScreenVertex> out(positions.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto p = project(Vec3{positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]}, cam);
    out[i] = {p.x, p.y, p.depth};
  }
  return out;
}

// Edge functions oriented so the interior is >= 0 whatever the winding.
TriSetup setup_triangle(const ScreenVertex& p0, const ScreenVertex& p1, const ScreenVertex& p2, double near,
                        bool cull) {
  TriSetup t{};
  if (p0.depth < near || p1.depth < near || p2.depth < near) return t;
  const double a2 = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
  if (!(a2 != 0.0) || !std::isfinite(a2)) return t;
  // Pixel y points down, so a counter-clockwise (front) triangle has negative area here.
  const bool front = a2 < 0.0;
  if (cull && !front) return t;
  const double s = a2 > 0.0 ? 1.0 : -1.0;
  const ScreenVertex* v[3] = {&p0, &p1, &p2};
  for (int k = 0; k < 3; ++k) {
    const ScreenVertex& i = *v[k];
    const ScreenVertex& j = *v[(k + 1) % 3];
    t.e.a[k] = -s * (j.y - i.y);
    t.e.b[k] = s * (j.x - i.x);
    t.e.c[k] = s * ((j.y - i.y) * i.x - (j.x - i.x) * i.y);
  }
  t.minx = std::min({p0.x, p1.x, p2.x});
  t.maxx = std::max({p0.x, p1.x, p2.x});
  t.miny = std::min({p0.y, p1.y, p2.y});
  t.maxy = std::max({p0.y, p1.y, p2.y});
  t.usable = true;
  return t;
}

std::vector<TriSetup> setup_all(const std::vector<ScreenVertex>& sv, std::span<const Triangle> indices,
                                const Camera& cam, bool cull) {
  const double near = kNearPlaneFraction * cam.distance;
  std::vector<TriSetup> tris(indices.size());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    const auto& f = indices[t];
    if (f[0] >= sv.size() || f[1] >= sv.size() || f[2] >= sv.size())
      throw ValidationError("render: triangle " + std::to_string(t) + " references a missing vertex");
    tris[t] = setup_triangle(sv[f[0]], sv[f[1]], sv[f[2]], near, cull);
  }
  return tris;
}

bool inside(const EdgeSetup& e, double x, double y) {
  const double e0 = e.a[0] * x + e.b[0] * y + e.c[0];
  const double e1 = e.a[1] * x + e.b[1] * y + e.c[1];
  const double e2 = e.a[2] * x + e.b[2] * y + e.c[2];
  return e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0;
}

// Buckets triangles by screen tile for point coverage queries.
class CoverageGrid {
 public:
  static constexpr int kTile = 8;

  CoverageGrid(const std::vector<TriSetup>& tris, int width, int height) : tris_(tris) {
    tw_ = (width + kTile - 1) / kTile;
    th_ = (height + kTile - 1) / kTile;
    cells_.resize(static_cast<std::size_t>(tw_) * th_);
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const TriSetup& s = tris[t];
      if (!s.usable) continue;
      if (s.maxx < 0 || s.maxy < 0 || s.minx >= width || s.miny >= height) continue;
      const int x0 = std::clamp(static_cast<int>(std::floor(s.minx)) / kTile, 0, tw_ - 1);
      const int x1 = std::clamp(static_cast<int>(std::floor(s.maxx)) / kTile, 0, tw_ - 1);
      const int y0 = std::clamp(static_cast<int>(std::floor(s.miny)) / kTile, 0, th_ - 1);
      const int y1 = std::clamp(static_cast<int>(std::floor(s.maxy)) / kTile, 0, th_ - 1);
      for (int ty = y0; ty <= y1; ++ty)
        for (int tx = x0; tx <= x1; ++tx) cells_[static_cast<std::size_t>(ty) * tw_ + tx].push_back(static_cast<std::uint32_t>(t));
    }
  }

  bool covered(double x, double y) const {
    if (x < 0.0 || y < 0.0) return false;
    const int tx = static_cast<int>(x) / kTile, ty = static_cast<int>(y) / kTile;
    if (tx >= tw_ || ty >= th_) return false;
    for (std::uint32_t t : cells_[static_cast<std::size_t>(ty) * tw_ + tx])
      if (inside(tris_[t].e, x, y)) return true;
    return false;
  }

 private:
  const std::vector<TriSetup>& tris_;
  int tw_ = 0, th_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

void check_options(const RenderOptions& opts) {
  if (opts.samples_per_axis < 1 || opts.samples_per_axis > kMaxSamplesPerAxis)
    throw ValidationError("render: samples_per_axis must be in [1, " + std::to_string(kMaxSamplesPerAxis) + "]");
}

struct EdgeRecord {
  std::uint32_t a, b, opposite;
};

}  // namespace

SilhouetteMask render_silhouette(std::span<const double> positions, std::span<const Triangle> indices,
                                 const Camera& cam, const RenderOptions& opts) {
  validate_camera(cam);
  check_options(opts);
  const int W = cam.width, H = cam.height, n = opts.samples_per_axis;
  SilhouetteMask mask(W, H);
  if (indices.empty()) return mask;

  const auto sv = project_all(positions, cam);
  const auto tris = setup_all(sv, indices, cam, opts.cull_backfaces);
  const KernelTable& k = active_kernels();

  std::vector<std::uint64_t> bits(static_cast<std::size_t>(W) * H, 0);
  const std::size_t bands = std::min<std::size_t>(static_cast<std::size_t>(H), worker_count() * 4);
  parallel_for(bands, [&](std::size_t band) {
    const int r0 = static_cast<int>(H * band / bands), r1 = static_cast<int>(H * (band + 1) / bands);
    for (const TriSetup& t : tris) {
      if (!t.usable) continue;
      const int y0 = std::max(r0, static_cast<int>(std::floor(t.miny)));
      const int y1 = std::min(r1, static_cast<int>(std::floor(t.maxy)) + 1);
      const int x0 = std::max(0, static_cast<int>(std::floor(t.minx)));
      const int x1 = std::min(W, static_cast<int>(std::floor(t.maxx)) + 1);
      if (y0 >= y1 || x0 >= x1) continue;
      for (int y = y0; y < y1; ++y) k.coverage_row(t.e, y, x0, x1, n, &bits[static_cast<std::size_t>(y) * W + x0]);
    }
  });

  const double inv = 1.0 / (n * n);
  for (std::size_t i = 0; i < bits.size(); ++i) mask.coverage[i] = std::popcount(bits[i]) * inv;
  return mask;
}

RenderGradients render_backward(std::span<const double> positions, std::span<const Triangle> indices,
                                const Camera& cam, std::span<const double> d_pixels, std::uint64_t seed,
                                const RenderOptions& opts) {
  validate_camera(cam);
  check_options(opts);
  const int W = cam.width, H = cam.height;
  if (d_pixels.size() != static_cast<std::size_t>(W) * H)
    throw ValidationError("render_backward: d_pixels has " + std::to_string(d_pixels.size()) + " entries, expected " +
                          std::to_string(static_cast<std::size_t>(W) * H));
  RenderGradients out;
  out.d_pos.assign(positions.size(), 0.0);
  if (indices.empty()) return out;

  const auto sv = project_all(positions, cam);
  const auto tris = setup_all(sv, indices, cam, opts.cull_backfaces);

  // Silhouette candidates: edges with one usable neighbour, a screen-space fold, or more than two.
  std::vector<EdgeRecord> edges;
  edges.reserve(indices.size() * 3);
  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (!tris[t].usable) continue;
    const auto& f = indices[t];
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = f[k], b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.push_back({a, b, f[(k + 2) % 3]});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const EdgeRecord& x, const EdgeRecord& y) {
    return x.a != y.a ? x.a < y.a : (x.b != y.b ? x.b < y.b : x.opposite < y.opposite);
  });
  std::vector<std::pair<std::uint32_t, std::uint32_t>> candidates;
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j].a == edges[i].a && edges[j].b == edges[i].b) ++j;
    bool silhouette = (j - i) != 2;
    if (!silhouette) {
      const ScreenVertex &pa = sv[edges[i].a], &pb = sv[edges[i].b];
      const ScreenVertex &o1 = sv[edges[i].opposite], &o2 = sv[edges[i + 1].opposite];
      const double ex = pb.x - pa.x, ey = pb.y - pa.y;
      const double s1 = ex * (o1.y - pa.y) - ey * (o1.x - pa.x);
      const double s2 = ex * (o2.y - pa.y) - ey * (o2.x - pa.x);
      silhouette = s1 * s2 > 0.0;
    }
    if (silhouette) candidates.emplace_back(edges[i].a, edges[i].b);
    i = j;
  }

  const CoverageGrid grid(tris, W, H);
  constexpr double kSide = 1e-4;
  std::vector<std::array<double, 4>> per_edge(candidates.size(), {0.0, 0.0, 0.0, 0.0});
  parallel_for(candidates.size(), [&](std::size_t ei) {
    const auto [ia, ib] = candidates[ei];
    const ScreenVertex &pa = sv[ia], &pb = sv[ib];
    const double ex = pb.x - pa.x, ey = pb.y - pa.y;
    const double len = std::hypot(ex, ey);
    if (!(len > 1e-12)) return;
    const double nx = -ey / len, ny = ex / len;
    const int count = std::max(1, static_cast<int>(std::ceil(opts.edge_samples_per_pixel * len)));
    const double ds = len / count;
    SplitMix64 rng(mix_seed(seed, (static_cast<std::uint64_t>(ia) << 32) | ib));
    std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
    for (int s = 0; s < count; ++s) {
      const double t = (s + uniform01(rng)) / count;
      const double x = pa.x + t * ex, y = pa.y + t * ey;
      if (x < 0.0 || y < 0.0 || x >= W || y >= H) continue;
      const double w = d_pixels[static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x)];
      if (w == 0.0) continue;
      const double ia_cov = grid.covered(x + kSide * nx, y + kSide * ny) ? 1.0 : 0.0;
      const double ib_cov = grid.covered(x - kSide * nx, y - kSide * ny) ? 1.0 : 0.0;
      if (ia_cov == ib_cov) continue;
      // Moving the edge along +n swaps the +n side value for the -n side value.
      const double c = w * (ib_cov - ia_cov) * ds;
      g[0] += (1.0 - t) * c * nx;
      g[1] += (1.0 - t) * c * ny;
      g[2] += t * c * nx;
      g[3] += t * c * ny;
    }
    per_edge[ei] = g;
  });

  std::vector<double> screen(2 * sv.size(), 0.0);
  for (std::size_t ei = 0; ei < candidates.size(); ++ei) {
    const auto [ia, ib] = candidates[ei];
    screen[2 * ia] += per_edge[ei][0];
    screen[2 * ia + 1] += per_edge[ei][1];
    screen[2 * ib] += per_edge[ei][2];
    screen[2 * ib + 1] += per_edge[ei][3];
  }

  // Chain rule through the projection: partials 0-2 position, 3-6 camera, 7-9 target.
  using D = BasicDual<10>;
  const D az = D::variable(cam.azimuth, 10, 3), el = D::variable(cam.elevation, 10, 4),
          dist = D::variable(cam.distance, 10, 5), fov = D::variable(cam.fov_y, 10, 6);
  const Vec3T<D> target{D::variable(cam.target.x, 10, 7), D::variable(cam.target.y, 10, 8),
                        D::variable(cam.target.z, 10, 9)};
  for (std::size_t v = 0; v < sv.size(); ++v) {
    const double gx = screen[2 * v], gy = screen[2 * v + 1];
    if (gx == 0.0 && gy == 0.0) continue;
    const Vec3T<D> p{D::variable(positions[3 * v], 10, 0), D::variable(positions[3 * v + 1], 10, 1),
                     D::variable(positions[3 * v + 2], 10, 2)};
    const auto q = project<D>(p, az, el, dist, target, fov, W, H);
    for (int i = 0; i < 3; ++i) out.d_pos[3 * v + i] = gx * q.x.partial(i) + gy * q.y.partial(i);
    for (int i = 0; i < 4; ++i) out.d_camera[i] += gx * q.x.partial(3 + i) + gy * q.y.partial(3 + i);
    for (int i = 0; i < 3; ++i) out.d_target[i] += gx * q.x.partial(7 + i) + gy * q.y.partial(7 + i);
  }
  return out;
}

std::pair<double, std::vector<double>> mse(const SilhouetteMask& rendered, const SilhouetteMask& reference) {
  if (rendered.width != reference.width || rendered.height != reference.height)
    throw ValidationError("mse: mask sizes differ (" + std::to_string(rendered.width) + "x" +
                          std::to_string(rendered.height) + " vs " + std::to_string(reference.width) + "x" +
                          std::to_string(reference.height) + ")");
  const std::size_t n = rendered.pixel_count();
  std::vector<double> grad(n, 0.0);
  if (n == 0) return {0.0, grad};
  const double sum =
      active_kernels().squared_error(rendered.coverage.data(), reference.coverage.data(), n, 2.0 / n, grad.data());
  return {sum / n, std::move(grad)};
}

double silhouette_iou(const SilhouetteMask& a, const SilhouetteMask& b, double threshold) {
  if (a.width != b.width || a.height != b.height) throw ValidationError("silhouette_iou: mask sizes differ");
  std::uint64_t in = 0, un = 0;
  active_kernels().threshold_overlap(a.coverage.data(), b.coverage.data(), a.pixel_count(), threshold, &in, &un);
  return un == 0 ? 1.0 : static_cast<double>(in) / static_cast<double>(un);
}

std::vector<Camera> uniform_viewpoints(int n, double distance, const Vec3& target, double fov_y, int width,
                                       int height) {
  if (n < 1) throw ValidationError("uniform_viewpoints: n must be >= 1");
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double limit = 80.0 * std::numbers::pi / 180.0;
  // Pulling the end rows in from the poles widens the closest-pair spacing of the lattice.
  const double offset = 1.5;
  std::vector<Camera> cams;
  cams.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + offset) / (n - 1 + 2.0 * offset);
    Camera c;
    c.elevation = std::clamp(std::asin(y), -limit, limit);
    c.azimuth = std::remainder(i * golden, 2.0 * std::numbers::pi);
    c.distance = distance;
    c.target = target;
    c.fov_y = fov_y;
    c.width = width;
    c.height = height;
    cams.push_back(c);
  }
  return cams;
}

namespace {

// Row-stochastic weights mapping `from` cells onto `to` cells by overlap length.
std::vector<std::vector<std::pair<int, double>>> box_weights(int from, int to) {
  std::vector<std::vector<std::pair<int, double>>> w(to);
  const double scale = static_cast<double>(from) / to;
  for (int o = 0; o < to; ++o) {
    const double lo = o * scale, hi = (o + 1) * scale;
    for (int i = static_cast<int>(std::floor(lo)); i < std::min(from, static_cast<int>(std::ceil(hi))); ++i) {
      const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
      if (overlap > 0.0) w[o].emplace_back(i, overlap / scale);
    }
  }
  return w;
}

}  // namespace

SilhouetteMask resample(const SilhouetteMask& mask, int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("resample: target size must be positive");
  if (width == mask.width && height == mask.height) return mask;
  const auto wx = box_weights(mask.width, width);
  const auto wy = box_weights(mask.height, height);
  SilhouetteMask rows(width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (auto [i, w] : wx[x]) s += w * mask.at(i, y);
      rows.at(x, y) = s;
    }
  SilhouetteMask out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (auto [j, w] : wy[y]) s += w * rows.at(x, j);
      out.at(x, y) = std::clamp(s, 0.0, 1.0);
    }
  return out;
}

}  // namespace procrecon
