#include "procrecon/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace procrecon {

namespace {

constexpr std::array<std::string_view, 11> kPartNames = {
    "body", "handle", "wall", "window", "roof", "door", "frame", "trunk", "branch", "leaf", "unlabeled"};

}  // namespace

std::string_view part_name(Part p) { return kPartNames[static_cast<std::size_t>(p)]; }

Part part_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kPartNames.size(); ++i)
    if (kPartNames[i] == name) return static_cast<Part>(i);
  return Part::Unlabeled;
}

std::size_t TriangleMesh::count_part(Part p) const {
  return static_cast<std::size_t>(std::count(part_labels.begin(), part_labels.end(), p));
}

std::vector<std::string> mesh_problems(const TriangleMesh& mesh) {
  std::vector<std::string> problems;
  std::size_t nv = mesh.vertex_count();
  if (mesh.positions.size() % 3 != 0) problems.push_back("positions length not a multiple of 3");
  if (mesh.normals.size() != 3 * nv) problems.push_back("normals length mismatch");
  if (mesh.texcoords.size() != 2 * nv) problems.push_back("texcoords length mismatch");
  if (mesh.part_labels.size() != mesh.indices.size()) problems.push_back("part label count mismatch");
  for (std::size_t t = 0; t < mesh.indices.size(); ++t) {
    for (auto i : mesh.indices[t])
      if (i >= nv) {
        problems.push_back("triangle " + std::to_string(t) + " references vertex " + std::to_string(i));
        break;
      }
  }
  for (double p : mesh.positions)
    if (!std::isfinite(p)) {
      problems.push_back("non-finite position");
      break;
    }
  if (mesh.normals.size() == 3 * nv) {
    for (std::size_t i = 0; i < nv; ++i) {
      double l = std::hypot(mesh.normals[3 * i], mesh.normals[3 * i + 1], mesh.normals[3 * i + 2]);
      if (!(std::abs(l - 1.0) <= 1e-4)) {
        problems.push_back("normal " + std::to_string(i) + " not unit length (" + std::to_string(l) + ")");
        break;
      }
    }
  }
  for (double t : mesh.texcoords)
    if (!(t >= 0.0 && t <= 1.0)) {
      problems.push_back("texcoord outside [0,1]");
      break;
    }
  return problems;
}

void compute_vertex_normals(TriangleMesh& mesh) {
  std::size_t nv = mesh.vertex_count();
  std::vector<double> acc(3 * nv, 0.0);
  for (const auto& tri : mesh.indices) {
    Vec3 a = mesh.vertex(tri[0]), b = mesh.vertex(tri[1]), c = mesh.vertex(tri[2]);
    Vec3 n = cross(b - a, c - a);  // length = 2 * area
    for (auto i : tri) {
      acc[3 * i] += n.x;
      acc[3 * i + 1] += n.y;
      acc[3 * i + 2] += n.z;
    }
  }
  mesh.normals.assign(3 * nv, 0.0);
  for (std::size_t i = 0; i < nv; ++i) {
    double l = std::hypot(acc[3 * i], acc[3 * i + 1], acc[3 * i + 2]);
    if (l > 1e-300 && std::isfinite(l)) {
      mesh.normals[3 * i] = acc[3 * i] / l;
      mesh.normals[3 * i + 1] = acc[3 * i + 1] / l;
      mesh.normals[3 * i + 2] = acc[3 * i + 2] / l;
    } else {
      mesh.normals[3 * i + 1] = 1.0;
    }
  }
}

double signed_volume(const TriangleMesh& mesh) {
  double v = 0.0;
  for (const auto& tri : mesh.indices)
    v += dot(mesh.vertex(tri[0]), cross(mesh.vertex(tri[1]), mesh.vertex(tri[2])));
  return v / 6.0;
}

Bounds mesh_bounds(const TriangleMesh& mesh) {
  if (mesh.vertex_count() == 0) return {};
  Bounds b{mesh.vertex(0), mesh.vertex(0)};
  for (std::size_t i = 1; i < mesh.vertex_count(); ++i) {
    Vec3 p = mesh.vertex(i);
    b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
    b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
  }
  return b;
}

std::vector<Triangle> select_triangles(const TriangleMesh& mesh, std::span<const Part> excluded) {
  std::vector<Triangle> out;
  out.reserve(mesh.indices.size());
  for (std::size_t t = 0; t < mesh.indices.size(); ++t) {
    Part p = t < mesh.part_labels.size() ? mesh.part_labels[t] : Part::Unlabeled;
    if (std::find(excluded.begin(), excluded.end(), p) == excluded.end()) out.push_back(mesh.indices[t]);
  }
  return out;
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(9);
  std::size_t nv = mesh.vertex_count();
  for (std::size_t i = 0; i < nv; ++i)
    out << "v " << mesh.positions[3 * i] << ' ' << mesh.positions[3 * i + 1] << ' '
        << mesh.positions[3 * i + 2] << '\n';
  bool has_vt = mesh.texcoords.size() == 2 * nv;
  bool has_vn = mesh.normals.size() == 3 * nv;
  if (has_vt)
    for (std::size_t i = 0; i < nv; ++i)
      out << "vt " << mesh.texcoords[2 * i] << ' ' << mesh.texcoords[2 * i + 1] << '\n';
  if (has_vn)
    for (std::size_t i = 0; i < nv; ++i)
      out << "vn " << mesh.normals[3 * i] << ' ' << mesh.normals[3 * i + 1] << ' '
          << mesh.normals[3 * i + 2] << '\n';

  // One group per label, in first-appearance order.
  std::vector<std::size_t> order(mesh.indices.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> rank(kPartNames.size(), -1);
  int next = 0;
  for (Part p : mesh.part_labels)
    if (rank[static_cast<std::size_t>(p)] < 0) rank[static_cast<std::size_t>(p)] = next++;
  auto label_of = [&](std::size_t t) {
    return t < mesh.part_labels.size() ? mesh.part_labels[t] : Part::Unlabeled;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rank[static_cast<std::size_t>(label_of(a))] < rank[static_cast<std::size_t>(label_of(b))];
  });

  bool first = true;
  Part current = Part::Unlabeled;
  for (std::size_t t : order) {
    Part p = label_of(t);
    if (first || p != current) {
      out << "g " << part_name(p) << '\n';
      current = p;
      first = false;
    }
    out << 'f';
    for (auto i : mesh.indices[t]) {
      std::size_t k = i + 1;
      out << ' ' << k;
      if (has_vt && has_vn)
        out << '/' << k << '/' << k;
      else if (has_vt)
        out << '/' << k;
      else if (has_vn)
        out << "//" << k;
    }
    out << '\n';
  }
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_obj(out, mesh);
  if (!out) throw std::runtime_error("error writing " + path.string());
}

TriangleMesh read_obj(std::istream& in) {
  TriangleMesh mesh;
  std::vector<double> vt, vn;
  std::vector<double> tc_out, n_out;
  std::vector<bool> has_tc, has_n;
  Part group = Part::Unlabeled;
  std::string line;
  std::size_t line_no = 0;

  auto resolve = [](long idx, std::size_t count, std::size_t ln) -> std::size_t {
    long r = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
    if (idx == 0 || r < 0 || r >= static_cast<long>(count))
      throw std::runtime_error("obj line " + std::to_string(ln) + ": index out of range");
    return static_cast<std::size_t>(r);
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw std::runtime_error("obj line " + std::to_string(line_no) + ": bad vertex");
      mesh.positions.insert(mesh.positions.end(), {x, y, z});
    } else if (tag == "vt") {
      double u = 0, v = 0;
      ls >> u >> v;
      vt.insert(vt.end(), {u, v});
    } else if (tag == "vn") {
      double x = 0, y = 0, z = 0;
      ls >> x >> y >> z;
      vn.insert(vn.end(), {x, y, z});
    } else if (tag == "g" || tag == "o") {
      std::string name;
      ls >> name;
      group = part_from_name(name);
    } else if (tag == "f") {
      std::size_t nv = mesh.vertex_count();
      has_tc.resize(nv, false);
      has_n.resize(nv, false);
      tc_out.resize(2 * nv, 0.0);
      n_out.resize(3 * nv, 0.0);
      std::vector<std::uint32_t> poly;
      std::string corner;
      while (ls >> corner) {
        long iv = 0, it = 0, in_ = 0;
        std::size_t s1 = corner.find('/');
        iv = std::stol(corner.substr(0, s1));
        if (s1 != std::string::npos) {
          std::size_t s2 = corner.find('/', s1 + 1);
          std::string t = corner.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
          if (!t.empty()) it = std::stol(t);
          if (s2 != std::string::npos && s2 + 1 < corner.size()) in_ = std::stol(corner.substr(s2 + 1));
        }
        std::size_t v = resolve(iv, nv, line_no);
        if (it != 0) {
          std::size_t k = resolve(it, vt.size() / 2, line_no);
          tc_out[2 * v] = vt[2 * k];
          tc_out[2 * v + 1] = vt[2 * k + 1];
          has_tc[v] = true;
        }
        if (in_ != 0) {
          std::size_t k = resolve(in_, vn.size() / 3, line_no);
          for (int a = 0; a < 3; ++a) n_out[3 * v + a] = vn[3 * k + a];
          has_n[v] = true;
        }
        poly.push_back(static_cast<std::uint32_t>(v));
      }
      if (poly.size() < 3) throw std::runtime_error("obj line " + std::to_string(line_no) + ": face with < 3 vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        mesh.indices.push_back({poly[0], poly[k], poly[k + 1]});
        mesh.part_labels.push_back(group);
      }
    }
  }

  std::size_t nv = mesh.vertex_count();
  has_tc.resize(nv, false);
  has_n.resize(nv, false);
  tc_out.resize(2 * nv, 0.0);
  n_out.resize(3 * nv, 0.0);
  bool all_n = nv > 0 && std::all_of(has_n.begin(), has_n.end(), [](bool b) { return b; });
  if (all_n) {
    mesh.normals = std::move(n_out);
  } else {
    compute_vertex_normals(mesh);
  }
  for (double& t : tc_out) t = std::clamp(t, 0.0, 1.0);
  mesh.texcoords = std::move(tc_out);
  return mesh;
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_obj(in);
}

}  // namespace procrecon
