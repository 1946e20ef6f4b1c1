#include <cmath>
#include <numbers>

#include "mesh_builder.hpp"
#include "procrecon/generators.hpp"

namespace procrecon {

namespace {

using detail::DualMeshBuilder;
using detail::OpenSpline;

struct Vec2D {
  Dual x, y;
  friend Vec2D operator+(const Vec2D& a, const Vec2D& b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2D operator-(const Vec2D& a, const Vec2D& b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2D operator*(const Vec2D& a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2D operator*(double s, const Vec2D& a) { return {a.x * s, a.y * s}; }
};

constexpr double kMinRadius = 0.02;

ParamSpecList make_dish_specs() {
  ParamSpecList s;
  for (int k = 0; k < kDishControlCount; ++k)
    s.push_back(continuous("offset_" + std::to_string(k), 0.05, 1.5,
                           "profile radius at height fraction " + std::to_string(k) + "/7"));
  s.push_back(continuous("thickness", 0.005, 0.1, "wall thickness"));
  s.push_back(continuous("height", 0.3, 2.0, "overall height"));
  s.push_back(discrete("handle", 0, 1, 1, "handle flag"));
  for (int k = 0; k < kDishHandleOffsets; ++k)
    s.push_back(continuous("handle_" + std::to_string(k), 0.05, 0.6, "handle reach from the body"));
  return s;
}

// Profile point in the (radius, height) half-plane with its outward normal.
struct ProfileSample {
  Dual r, y, nr, ny;
};

}  // namespace

const ParamSpecList& dish_specs() {
  static const ParamSpecList specs = make_dish_specs();
  return specs;
}

DishResolution dish_resolution(LevelOfDetail lod) {
  static constexpr DishResolution table[] = {{8, 16}, {16, 32}, {32, 64}, {64, 128}};
  if (lod.tier < 0 || lod.tier > 3) throw ValidationError("dish LOD tier must be in [0,3]");
  return table[lod.tier];
}

GeneratorOutput generate_dish(const ParameterVector& p, LevelOfDetail lod) {
  if (p.specs().size() != dish_specs().size())
    throw ValidationError("dish expects " + std::to_string(dish_specs().size()) + " parameters");
  auto problems = validation_problems(dish_specs(), p.values());
  if (!problems.empty()) {
    std::string msg = "invalid dish parameters:";
    for (const auto& pr : problems) msg += " " + pr + ";";
    throw ValidationError(msg);
  }
  const auto res = dish_resolution(lod);
  const std::size_t n = p.size();
  const auto x = seed(p);
  const Dual thickness = x[kDishControlCount];
  const Dual height = x[kDishControlCount + 1];
  const bool has_handle = p[kDishControlCount + 2] >= 0.5;

  OpenSpline<Dual> radius;
  for (int k = 0; k < kDishControlCount; ++k) radius.pts.push_back(x[k]);
  // Catmull-Rom reproduces linear data, so height is exactly u * H.
  auto radius_at = [&](double u) { return max(radius.eval(u), Dual(kMinRadius)); };

  // 1) outer profile, 2) inward offset closing a ring cross-section.
  const int S = res.spline_samples;
  std::vector<ProfileSample> outer(S), inner(S);
  for (int s = 0; s < S; ++s) {
    double u = static_cast<double>(s) / (S - 1);
    Dual r = radius_at(u);
    Dual dr = radius.tangent(u);
    Dual len = sqrt(dr * dr + height * height);
    outer[s] = {r, height * u, height / len, -dr / len};
  }
  for (int s = 0; s < S; ++s) {
    const auto& o = outer[s];
    Dual t = min(thickness, o.r * 0.45);
    Dual ri = o.r - t * o.nr;
    Dual yi = o.y - t * o.ny;
    yi = min(max(yi, thickness), height);
    inner[s] = {ri, yi, -o.nr, -o.ny};
  }

  // Closed cross-section, counter-clockwise in (r, y): bottom pole, outer up, inner down, inner pole.
  struct RingPoint {
    Dual r, y;
    bool pole;
  };
  std::vector<RingPoint> ring;
  ring.push_back({Dual(0.0), Dual(0.0), true});
  for (int s = 0; s < S; ++s) ring.push_back({outer[s].r, outer[s].y, false});
  for (int s = S - 1; s >= 0; --s) ring.push_back({inner[s].r, inner[s].y, false});
  ring.push_back({Dual(0.0), thickness, true});

  // 3) revolve around the vertical axis.
  const int M = res.lathe_segments;
  DualMeshBuilder mb(n);
  std::vector<std::vector<std::uint32_t>> ids(ring.size());
  std::vector<double> cs(M), sn(M);
  for (int j = 0; j < M; ++j) {
    double th = 2.0 * std::numbers::pi * j / M;
    cs[j] = std::cos(th);
    sn[j] = std::sin(th);
  }
  for (std::size_t k = 0; k < ring.size(); ++k) {
    double v = static_cast<double>(k) / (ring.size() - 1);
    if (ring[k].pole) {
      ids[k].push_back(mb.vertex({Dual(0.0), ring[k].y, Dual(0.0)}, 0.5, v));
      continue;
    }
    for (int j = 0; j < M; ++j)
      ids[k].push_back(mb.vertex({ring[k].r * cs[j], ring[k].y, ring[k].r * sn[j]},
                                 static_cast<double>(j) / M, v));
  }
  auto at = [&](std::size_t k, int j) { return ids[k].size() == 1 ? ids[k][0] : ids[k][j % M]; };
  for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
    for (int j = 0; j < M; ++j) {
      auto a = at(k, j), b = at(k, j + 1), c = at(k + 1, j + 1), d = at(k + 1, j);
      if (a != d && d != c) mb.triangle(a, d, c, Part::Body);
      if (a != c && a != b && b != c) mb.triangle(a, c, b, Part::Body);
    }
  }

  // 4) optional handle: circle section swept along an offset-controlled arc on the +x side.
  if (has_handle) {
    const double top_u = 0.8, bottom_u = 0.25;
    const Dual tube = height * 0.035 + 0.01;
    OpenSpline<Vec2D> arc;
    arc.pts.push_back({radius_at(top_u) - tube * 0.5, height * top_u});
    for (int k = 0; k < kDishHandleOffsets; ++k) {
      double phi = std::numbers::pi / 2 - std::numbers::pi * (k + 1) / (kDishHandleOffsets + 1);
      double u = 0.5 * (top_u + bottom_u) + 0.5 * (top_u - bottom_u) * std::sin(phi);
      arc.pts.push_back({radius_at(u) + x[kDishControlCount + 3 + k], height * u});
    }
    arc.pts.push_back({radius_at(bottom_u) - tube * 0.5, height * bottom_u});

    const int along = std::max(8, S);
    const int around = std::max(6, M / 4);
    std::vector<std::vector<std::uint32_t>> tube_ids(along);
    std::vector<Vec2D> centers(along);
    for (int i = 0; i < along; ++i) {
      double u = static_cast<double>(i) / (along - 1);
      Vec2D c = arc.eval(u);
      Vec2D t = arc.tangent(u);
      Dual tl = sqrt(t.x * t.x + t.y * t.y);
      Dual nx = -t.y / tl, ny = t.x / tl;
      centers[i] = c;
      for (int a = 0; a < around; ++a) {
        double al = 2.0 * std::numbers::pi * a / around;
        double ca = std::cos(al), sa = std::sin(al);
        DVec3 pos{c.x + tube * (nx * ca), c.y + tube * (ny * ca), tube * sa};
        tube_ids[i].push_back(mb.vertex(pos, static_cast<double>(a) / around, u));
      }
    }
    for (int i = 0; i + 1 < along; ++i) {
      for (int a = 0; a < around; ++a) {
        int a1 = (a + 1) % around;
        // Orient each quad away from the sweep axis.
        Vec2D mid = centers[i];
        Vec3 ctr{mid.x.value(), mid.y.value(), 0.0};
        Vec3 pa = value_of(mb.position(tube_ids[i][a]));
        mb.quad(tube_ids[i][a], tube_ids[i + 1][a], tube_ids[i + 1][a1], tube_ids[i][a1], pa - ctr,
                Part::Handle);
      }
    }
    for (int end : {0, along - 1}) {
      Vec2D c = centers[end];
      auto cid = mb.vertex({c.x, c.y, Dual(0.0)}, 0.5, end == 0 ? 0.0 : 1.0);
      Vec2D t = arc.tangent(end == 0 ? 0.0 : 1.0);
      Vec3 facing{t.x.value(), t.y.value(), 0.0};
      if (end == 0) facing = facing * -1.0;
      for (int a = 0; a < around; ++a)
        mb.triangle_facing(cid, tube_ids[end][a], tube_ids[end][(a + 1) % around], facing, Part::Handle);
    }
  }

  return mb.finish({Dual(0.0), height * 0.5, Dual(0.0)});
}

}  // namespace procrecon
