#include <algorithm>
#include <cmath>

#include "mesh_builder.hpp"
#include "procrecon/generators.hpp"

namespace procrecon {

namespace {

using detail::DualMeshBuilder;

enum BuildingParam : std::size_t {
  kWidth,
  kDepth,
  kFloorHeight,
  kFloors,
  kWindows,
  kWindowWidth,
  kWindowHeight,
  kRoofType,
  kRoofHeight,
  kDoorWidth,
  kDoorHeight,
  kBuildingParamCount,
};

ParamSpecList make_building_specs() {
  return {
      continuous("width", 4.0, 20.0, "extent along x"),
      continuous("depth", 4.0, 20.0, "extent along z"),
      continuous("floor_height", 2.5, 4.5, "height of one floor"),
      discrete("floors", 1, 12, 1, "floor count"),
      discrete("windows", 0, 8, 1, "windows per wall per floor"),
      continuous("window_width", 0.1, 0.9, "window width as a fraction of its slot"),
      continuous("window_height", 0.1, 0.9, "window height as a fraction of the floor"),
      discrete("roof_type", 0, 1, 1, "0 = flat, 1 = gabled"),
      continuous("roof_height", 0.5, 6.0, "gable rise"),
      continuous("door_width", 0.8, 3.0, "front door width"),
      continuous("door_height", 1.8, 3.5, "front door height"),
  };
}

constexpr double kRevealDepth = 0.25;
constexpr double kFrameWidth = 0.1;
constexpr double kFrameDepth = 0.06;
constexpr double kSillDepth = 0.18;
constexpr double kSillHeight = 0.08;

struct Opening {
  Dual s0, s1, y0, y1;
  Part part;  // Window or Door
};

// A wall is a rectangle in the plane through `origin` spanned by `along` and +Y, facing `out`.
struct Wall {
  DVec3 origin;
  Vec3 along;
  Vec3 out;
  Dual length;

  DVec3 point(const Dual& s, const Dual& y, const Dual& offset = Dual(0.0)) const {
    return {origin.x + s * along.x + offset * out.x, origin.y + y, origin.z + s * along.z + offset * out.z};
  }
};

std::vector<Dual> unique_sorted(std::vector<Dual> v) {
  std::stable_sort(v.begin(), v.end(), [](const Dual& a, const Dual& b) { return a.value() < b.value(); });
  std::vector<Dual> out;
  for (auto& d : v)
    if (out.empty() || d.value() - out.back().value() > 1e-9) out.push_back(d);
  return out;
}

std::size_t find_break(const std::vector<Dual>& v, const Dual& x) {
  auto it = std::lower_bound(v.begin(), v.end(), x.value() - 1e-9,
                             [](const Dual& a, double b) { return a.value() < b; });
  return static_cast<std::size_t>(it - v.begin());
}

// Wall rectangle with rectangular holes; holes are filled with flush panels when `flush` is set,
// or with recessed panes and reveals otherwise.
void emit_wall(DualMeshBuilder& mb, const Wall& wall, const Dual& top, const std::vector<Opening>& openings,
               bool flush, bool details) {
  std::vector<Dual> xs{Dual(0.0), wall.length}, ys{Dual(0.0), top};
  for (const auto& o : openings) {
    xs.insert(xs.end(), {o.s0, o.s1});
    ys.insert(ys.end(), {o.y0, o.y1});
  }
  xs = unique_sorted(std::move(xs));
  ys = unique_sorted(std::move(ys));
  const std::size_t nx = xs.size(), ny = ys.size();
  const double L = wall.length.value(), H = top.value();

  std::vector<std::int64_t> grid(nx * ny, -1);
  auto gv = [&](std::size_t i, std::size_t j) -> std::uint32_t {
    auto& id = grid[j * nx + i];
    if (id < 0) id = mb.vertex(wall.point(xs[i], ys[j]), xs[i].value() / L, ys[j].value() / H);
    return static_cast<std::uint32_t>(id);
  };

  std::vector<int> cell_owner((nx - 1) * (ny - 1), -1);
  for (std::size_t k = 0; k < openings.size(); ++k) {
    const auto& o = openings[k];
    std::size_t i0 = find_break(xs, o.s0), i1 = find_break(xs, o.s1);
    std::size_t j0 = find_break(ys, o.y0), j1 = find_break(ys, o.y1);
    for (std::size_t j = j0; j < j1; ++j)
      for (std::size_t i = i0; i < i1; ++i) cell_owner[j * (nx - 1) + i] = static_cast<int>(k);
  }
  for (std::size_t j = 0; j + 1 < ny; ++j)
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      int owner = cell_owner[j * (nx - 1) + i];
      if (owner >= 0 && !flush) continue;
      Part part = owner >= 0 ? openings[owner].part : Part::Wall;
      mb.quad(gv(i, j), gv(i + 1, j), gv(i + 1, j + 1), gv(i, j + 1), wall.out, part);
    }
  if (flush) return;

  for (const auto& o : openings) {
    std::size_t i0 = find_break(xs, o.s0), i1 = find_break(xs, o.s1);
    std::size_t j0 = find_break(ys, o.y0), j1 = find_break(ys, o.y1);
    auto a = gv(i0, j0), b = gv(i1, j0), c = gv(i1, j1), d = gv(i0, j1);
    Dual depth(-kRevealDepth);
    auto ra = mb.vertex(wall.point(o.s0, o.y0, depth), 0, 0), rb = mb.vertex(wall.point(o.s1, o.y0, depth), 1, 0);
    auto rc = mb.vertex(wall.point(o.s1, o.y1, depth), 1, 1), rd = mb.vertex(wall.point(o.s0, o.y1, depth), 0, 1);
    Vec3 up{0, 1, 0};
    mb.quad(a, b, rb, ra, up, Part::Wall);              // bottom reveal faces up
    mb.quad(d, rd, rc, c, up * -1.0, Part::Wall);       // top reveal faces down
    mb.quad(a, ra, rd, d, wall.along, Part::Wall);      // left reveal faces along +s
    mb.quad(b, c, rc, rb, wall.along * -1.0, Part::Wall);
    mb.quad(ra, rb, rc, rd, wall.out, o.part);           // recessed pane

    if (!details || o.part != Part::Window) continue;
    // Protruding frame ring around the opening, and a sill below it.
    Dual fw(kFrameWidth), fd(kFrameDepth);
    Dual s0 = o.s0 - fw, s1 = o.s1 + fw, y0 = o.y0 - fw, y1 = o.y1 + fw;
    auto ring_quad = [&](const Dual& qs0, const Dual& qs1, const Dual& qy0, const Dual& qy1) {
      auto p0 = mb.vertex(wall.point(qs0, qy0, fd)), p1 = mb.vertex(wall.point(qs1, qy0, fd));
      auto p2 = mb.vertex(wall.point(qs1, qy1, fd)), p3 = mb.vertex(wall.point(qs0, qy1, fd));
      mb.quad(p0, p1, p2, p3, wall.out, Part::Frame);
    };
    ring_quad(s0, s1, y1 - fw, y1);
    ring_quad(s0, s1, y0, y0 + fw);
    ring_quad(s0, s0 + fw, y0 + fw, y1 - fw);
    ring_quad(s1 - fw, s1, y0 + fw, y1 - fw);
    // Outer sides of the frame close it against the wall.
    auto side = [&](const Dual& qs0, const Dual& qy0, const Dual& qs1, const Dual& qy1, const Vec3& facing) {
      auto p0 = mb.vertex(wall.point(qs0, qy0)), p1 = mb.vertex(wall.point(qs1, qy1));
      auto p2 = mb.vertex(wall.point(qs1, qy1, fd)), p3 = mb.vertex(wall.point(qs0, qy0, fd));
      mb.quad(p0, p1, p2, p3, facing, Part::Frame);
    };
    side(s0, y1, s1, y1, up);
    side(s0, y0, s1, y0, up * -1.0);
    side(s0, y0, s0, y1, wall.along * -1.0);
    side(s1, y0, s1, y1, wall.along);

    Dual sd(kSillDepth), sh(kSillHeight);
    Dual ss0 = s0 - fw, ss1 = s1 + fw, sy1 = y0, sy0 = y0 - sh;
    auto q = [&](const Dual& s, const Dual& y, const Dual& off) { return mb.vertex(wall.point(s, y, off)); };
    auto f00 = q(ss0, sy0, sd), f10 = q(ss1, sy0, sd), f11 = q(ss1, sy1, sd), f01 = q(ss0, sy1, sd);
    auto b00 = q(ss0, sy0, fd), b10 = q(ss1, sy0, fd), b11 = q(ss1, sy1, fd), b01 = q(ss0, sy1, fd);
    mb.quad(f00, f10, f11, f01, wall.out, Part::Frame);
    mb.quad(f01, f11, b11, b01, up, Part::Frame);
    mb.quad(f00, b00, b10, f10, up * -1.0, Part::Frame);
    mb.quad(f00, f01, b01, b00, wall.along * -1.0, Part::Frame);
    mb.quad(f10, b10, b11, f11, wall.along, Part::Frame);
  }
}

}  // namespace

const ParamSpecList& building_specs() {
  static const ParamSpecList specs = make_building_specs();
  return specs;
}

GeneratorOutput generate_building(const ParameterVector& p, LevelOfDetail lod) {
  if (p.size() != kBuildingParamCount)
    throw ValidationError("building expects " + std::to_string(kBuildingParamCount) + " parameters");
  auto problems = validation_problems(building_specs(), p.values());
  if (!problems.empty()) {
    std::string msg = "invalid building parameters:";
    for (const auto& pr : problems) msg += " " + pr + ";";
    throw ValidationError(msg);
  }
  if (lod.tier < 0 || lod.tier > 3) throw ValidationError("building LOD tier must be in [0,3]");

  const auto x = seed(p);
  const Dual W = x[kWidth], D = x[kDepth], hpf = x[kFloorHeight];
  const int floors = static_cast<int>(std::lround(p[kFloors]));
  const int windows = static_cast<int>(std::lround(p[kWindows]));
  const bool gabled = p[kRoofType] >= 0.5;
  const Dual top = hpf * static_cast<double>(floors);
  const Dual hw = W * 0.5, hd = D * 0.5;

  DualMeshBuilder mb(p.size());
  const Vec3 up{0, 1, 0};

  const Wall walls[4] = {
      {{-hw, Dual(0.0), hd}, {1, 0, 0}, {0, 0, 1}, W},    // front (+z)
      {{hw, Dual(0.0), hd}, {0, 0, -1}, {1, 0, 0}, D},    // right (+x)
      {{hw, Dual(0.0), -hd}, {-1, 0, 0}, {0, 0, -1}, W},  // back (-z)
      {{-hw, Dual(0.0), -hd}, {0, 0, 1}, {-1, 0, 0}, D},  // left (-x)
  };

  for (int w = 0; w < 4; ++w) {
    const Wall& wall = walls[w];
    std::vector<Opening> openings;
    if (lod.tier >= 1) {
      if (windows > 0) {
        Dual slot = wall.length / static_cast<double>(windows);
        Dual ww = slot * x[kWindowWidth];
        Dual wh = hpf * x[kWindowHeight];
        for (int f = 0; f < floors; ++f) {
          if (w == 0 && f == 0) continue;  // ground floor of the front wall holds the door
          Dual y0 = hpf * static_cast<double>(f) + (hpf - wh) * 0.5;
          for (int k = 0; k < windows; ++k) {
            Dual c = slot * (k + 0.5);
            openings.push_back({c - ww * 0.5, c + ww * 0.5, y0, y0 + wh, Part::Window});
          }
        }
      }
      if (w == 0) {
        Dual dw = min(x[kDoorWidth], W * 0.8);
        Dual dh = min(x[kDoorHeight], hpf * 0.9);
        openings.push_back({hw - dw * 0.5, hw + dw * 0.5, Dual(0.0), dh, Part::Door});
      }
    }
    emit_wall(mb, wall, top, openings, lod.tier == 1, lod.tier >= 3);
  }

  // Bottom face.
  auto b0 = mb.vertex({-hw, Dual(0.0), hd}), b1 = mb.vertex({hw, Dual(0.0), hd});
  auto b2 = mb.vertex({hw, Dual(0.0), -hd}), b3 = mb.vertex({-hw, Dual(0.0), -hd});
  mb.quad(b0, b1, b2, b3, up * -1.0, Part::Wall);

  auto t0 = mb.vertex({-hw, top, hd}, 0, 0), t1 = mb.vertex({hw, top, hd}, 1, 0);
  auto t2 = mb.vertex({hw, top, -hd}, 1, 1), t3 = mb.vertex({-hw, top, -hd}, 0, 1);
  Dual roof_rise(0.0);
  if (!gabled) {
    mb.quad(t0, t1, t2, t3, up, Part::Roof);
  } else {
    roof_rise = x[kRoofHeight];
    Dual ridge_y = top + roof_rise;
    auto r0 = mb.vertex({-hw, ridge_y, Dual(0.0)}, 0, 0.5), r1 = mb.vertex({hw, ridge_y, Dual(0.0)}, 1, 0.5);
    mb.quad(t0, t1, r1, r0, {0, 1, 1}, Part::Roof);
    mb.quad(t3, r0, r1, t2, {0, 1, -1}, Part::Roof);
    mb.triangle_facing(t1, t2, r1, {1, 0, 0}, Part::Roof);
    mb.triangle_facing(t0, r0, t3, {-1, 0, 0}, Part::Roof);
  }

  return mb.finish({Dual(0.0), (top + roof_rise) * 0.5, Dual(0.0)});
}

}  // namespace procrecon
