#include <algorithm>
#include <cmath>
#include <numbers>

#include "procrecon/generators.hpp"
#include "procrecon/random.hpp"

namespace procrecon {

namespace {

enum TreeParam : std::size_t {
  kTrunkLength,
  kTrunkRadius,
  kBranchLevels,
  kBranchesPerLevel,
  kBranchAngle,
  kAngleSpread,
  kLengthDecay,
  kCurvature,
  kLeafSize,
  kLeafDensity,
  kTreeParamCount,
};

ParamSpecList make_tree_specs() {
  return {
      continuous("trunk_length", 1.0, 6.0, "trunk length"),
      continuous("trunk_radius", 0.05, 0.5, "trunk base radius"),
      discrete("branch_levels", 2, 4, 1, "recursion depth including the trunk"),
      continuous("branches_per_level", 0.0, 8.0, "children per branch (rounded)"),
      continuous("branch_angle", 15.0, 80.0, "mean pitch of children against the parent, degrees"),
      continuous("angle_spread", 0.0, 30.0, "uniform jitter of the pitch, degrees"),
      continuous("length_decay", 0.3, 0.9, "child length relative to the parent"),
      continuous("curvature", -0.6, 0.6, "total bend along a branch, radians"),
      continuous("leaf_size", 0.05, 0.5, "leaf quad edge length"),
      continuous("leaf_density", 0.0, 20.0, "leaves per unit length on terminal branches"),
  };
}

Vec3 rotate(const Vec3& v, const Vec3& axis, double angle) {
  // Rodrigues rotation about a unit axis.
  double c = std::cos(angle), s = std::sin(angle);
  return v * c + cross(axis, v) * s + axis * (dot(axis, v) * (1.0 - c));
}

Vec3 any_perpendicular(const Vec3& d) {
  Vec3 helper = std::abs(d.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  return normalized(cross(d, helper));
}

struct BranchNode {
  Vec3 pos;
  Vec3 dir;
  double radius;
};

class TreeBuilder {
 public:
  TreeBuilder(const ParameterVector& p, std::uint64_t seed)
      : p_(p), seed_(seed), skeleton_rng_(seed) {
    levels_ = static_cast<int>(std::lround(p[kBranchLevels]));
    children_ = static_cast<int>(std::lround(p[kBranchesPerLevel]));
  }

  TreeModel build() {
    Vec3 base{0, 0, 0};
    double tilt = uniform(skeleton_rng_, -0.05, 0.05);
    double azimuth = uniform(skeleton_rng_, 0.0, 2 * std::numbers::pi);
    Vec3 dir = normalized(Vec3{std::sin(tilt) * std::cos(azimuth), 1.0, std::sin(tilt) * std::sin(azimuth)});
    model_.graph_vertex_count = 1;  // trunk base
    grow(base, dir, p_[kTrunkLength], p_[kTrunkRadius], 0, true);
    compute_vertex_normals(model_.mesh);
    return std::move(model_);
  }

 private:
  static constexpr int kSegments = 4;

  void grow(const Vec3& origin, const Vec3& dir0, double length, double radius, int level, bool cap_base) {
    const std::size_t branch_id = branch_counter_++;
    const Part part = level == 0 ? Part::Trunk : Part::Branch;
    const int sides = level == 0 ? 7 : (level == 1 ? 5 : 4);

    // Bend the branch within a random plane containing its initial direction.
    Vec3 bend_axis = rotate(any_perpendicular(dir0), dir0, uniform(skeleton_rng_, 0.0, 2 * std::numbers::pi));
    double bend_step = p_[kCurvature] / kSegments;
    std::vector<BranchNode> nodes;
    Vec3 pos = origin, dir = dir0;
    for (int s = 0; s <= kSegments; ++s) {
      double t = static_cast<double>(s) / kSegments;
      nodes.push_back({pos, dir, radius * (1.0 - 0.85 * t)});
      pos = pos + dir * (length / kSegments);
      dir = normalized(rotate(dir, bend_axis, bend_step));
    }
    model_.graph_vertex_count += kSegments;
    model_.total_branch_length += length;

    emit_tube(nodes, sides, part, cap_base);

    if (level + 1 < levels_ && children_ > 0) {
      double pitch_mean = p_[kBranchAngle] * std::numbers::pi / 180.0;
      double spread = p_[kAngleSpread] * std::numbers::pi / 180.0;
      double phase = uniform(skeleton_rng_, 0.0, 2 * std::numbers::pi);
      for (int c = 0; c < children_; ++c) {
        double t = 0.3 + 0.7 * (c + uniform(skeleton_rng_, 0.25, 0.75)) / children_;
        BranchNode at = interpolate(nodes, t);
        double pitch = pitch_mean + spread * uniform(skeleton_rng_, -1.0, 1.0);
        double roll = phase + c * 2.399963229728653 + uniform(skeleton_rng_, -0.3, 0.3);  // golden angle
        Vec3 side = rotate(any_perpendicular(at.dir), at.dir, roll);
        Vec3 child_dir = normalized(rotate(at.dir, normalized(cross(at.dir, side)), pitch));
        double child_len = length * p_[kLengthDecay] * (1.0 - 0.35 * t);
        double child_radius = std::max(at.radius * 0.65, 0.004);
        grow(at.pos, child_dir, child_len, child_radius, level + 1, false);
      }
    } else if (level > 0) {
      emit_leaves(nodes, length, branch_id);
    }
  }

  static BranchNode interpolate(const std::vector<BranchNode>& nodes, double t) {
    double s = std::clamp(t, 0.0, 1.0) * (nodes.size() - 1);
    std::size_t i = std::min(static_cast<std::size_t>(s), nodes.size() - 2);
    double f = s - i;
    const auto &a = nodes[i], &b = nodes[i + 1];
    return {a.pos * (1 - f) + b.pos * f, normalized(a.dir * (1 - f) + b.dir * f), a.radius * (1 - f) + b.radius * f};
  }

  std::uint32_t add_vertex(const Vec3& p, double u, double v) {
    auto& m = model_.mesh;
    m.positions.insert(m.positions.end(), {p.x, p.y, p.z});
    m.texcoords.insert(m.texcoords.end(), {std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)});
    return static_cast<std::uint32_t>(m.vertex_count() - 1);
  }

  void add_triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, Part part) {
    model_.mesh.indices.push_back({a, b, c});
    model_.mesh.part_labels.push_back(part);
  }

  void emit_tube(const std::vector<BranchNode>& nodes, int sides, Part part, bool cap_base) {
    std::vector<std::vector<std::uint32_t>> rings;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const auto& n = nodes[k];
      Vec3 e1 = any_perpendicular(n.dir);
      Vec3 e2 = cross(n.dir, e1);
      std::vector<std::uint32_t> ring;
      double v = static_cast<double>(k) / (nodes.size() - 1);
      for (int s = 0; s < sides; ++s) {
        double a = 2 * std::numbers::pi * s / sides;
        Vec3 off = (e1 * std::cos(a) + e2 * std::sin(a)) * n.radius;
        ring.push_back(add_vertex(n.pos + off, static_cast<double>(s) / sides, v));
      }
      rings.push_back(std::move(ring));
    }
    // Side walls: ring k to k+1; winding faces outward because (e1, e2, dir) is right-handed.
    for (std::size_t k = 0; k + 1 < rings.size(); ++k)
      for (int s = 0; s < sides; ++s) {
        int s1 = (s + 1) % sides;
        add_triangle(rings[k][s], rings[k][s1], rings[k + 1][s1], part);
        add_triangle(rings[k][s], rings[k + 1][s1], rings[k + 1][s], part);
      }
    const auto& last = nodes.back();
    auto tip = add_vertex(last.pos + last.dir * (last.radius * 0.5), 0.5, 1.0);
    for (int s = 0; s < sides; ++s) add_triangle(rings.back()[s], rings.back()[(s + 1) % sides], tip, part);
    if (cap_base) {
      auto base = add_vertex(nodes.front().pos, 0.5, 0.0);
      for (int s = 0; s < sides; ++s) add_triangle(rings.front()[(s + 1) % sides], rings.front()[s], base, part);
    }
  }

  void emit_leaves(const std::vector<BranchNode>& nodes, double length, std::size_t branch_id) {
    // Leaves draw from a per-branch stream so leaf settings never perturb the skeleton.
    SplitMix64 rng(mix_seed(seed_, branch_id + 0x9e3779b97f4a7c15ULL));
    int count = static_cast<int>(std::lround(p_[kLeafDensity] * length));
    double size = p_[kLeafSize];
    for (int i = 0; i < count; ++i) {
      double t = 0.2 + 0.8 * uniform(rng, 0.0, 1.0);
      BranchNode at = interpolate(nodes, t);
      Vec3 side = rotate(any_perpendicular(at.dir), at.dir, uniform(rng, 0.0, 2 * std::numbers::pi));
      Vec3 out = normalized(at.dir * 0.5 + side);
      Vec3 normal = normalized(rotate(any_perpendicular(out), out, uniform(rng, 0.0, 2 * std::numbers::pi)));
      Vec3 across = normalized(cross(normal, out));
      Vec3 base = at.pos + side * at.radius;
      Vec3 q0 = base + across * (-0.5 * size), q1 = base + across * (0.5 * size);
      Vec3 q2 = q1 + out * size, q3 = q0 + out * size;
      auto a = add_vertex(q0, 0, 0), b = add_vertex(q1, 1, 0), c = add_vertex(q2, 1, 1), d = add_vertex(q3, 0, 1);
      // Two-sided: separate vertices for each side keep vertex normals well defined.
      auto a2 = add_vertex(q0, 0, 0), b2 = add_vertex(q1, 1, 0), c2 = add_vertex(q2, 1, 1), d2 = add_vertex(q3, 0, 1);
      add_triangle(a, b, c, Part::Leaf);
      add_triangle(a, c, d, Part::Leaf);
      add_triangle(a2, c2, b2, Part::Leaf);
      add_triangle(a2, d2, c2, Part::Leaf);
      ++model_.leaf_count;
    }
  }

  const ParameterVector& p_;
  std::uint64_t seed_;
  SplitMix64 skeleton_rng_;
  int levels_ = 2;
  int children_ = 0;
  std::size_t branch_counter_ = 0;
  TreeModel model_;
};

}  // namespace

const ParamSpecList& tree_specs() {
  static const ParamSpecList specs = make_tree_specs();
  return specs;
}

TreeModel generate_tree_model(const ParameterVector& p, std::uint64_t seed) {
  if (p.size() != kTreeParamCount)
    throw ValidationError("tree expects " + std::to_string(kTreeParamCount) + " parameters");
  auto problems = validation_problems(tree_specs(), p.values());
  if (!problems.empty()) {
    std::string msg = "invalid tree parameters:";
    for (const auto& pr : problems) msg += " " + pr + ";";
    throw ValidationError(msg);
  }
  return TreeBuilder(p, seed).build();
}

TriangleMesh generate_tree(const ParameterVector& p, std::uint64_t seed) {
  return generate_tree_model(p, seed).mesh;
}

}  // namespace procrecon
