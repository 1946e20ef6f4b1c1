#include "procrecon/autodiff.hpp"

#include <stdexcept>

namespace procrecon {

void Jacobian::accumulate_transpose_product(std::span<const double> v, std::span<double> out) const {
  if (v.size() != rows || out.size() != cols)
    throw std::invalid_argument("jacobian transpose product: dimension mismatch");
  for (std::size_t r = 0; r < rows; ++r) {
    double s = v[r];
    if (s == 0.0) continue;
    const double* row_ptr = entries.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += s * row_ptr[c];
  }
}

std::vector<Dual> seed(const ParameterVector& values) {
  std::size_t n = values.size();
  std::vector<Dual> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (values.specs()[i].is_discrete())
      out.emplace_back(values[i], n);
    else
      out.push_back(Dual::variable(values[i], n, i));
  }
  return out;
}

AssembledGeometry assemble_jacobian(std::span<const DVec3> verts, std::size_t param_count) {
  AssembledGeometry g;
  g.positions.resize(verts.size() * 3);
  g.jacobian.rows = verts.size() * 3;
  g.jacobian.cols = param_count;
  g.jacobian.entries.assign(g.jacobian.rows * param_count, 0.0);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Dual* axes[3] = {&verts[i].x, &verts[i].y, &verts[i].z};
    for (std::size_t a = 0; a < 3; ++a) {
      const Dual& d = *axes[a];
      // Constants carry no partials; anything else must be seeded for every parameter.
      if (d.size() != 0 && d.size() != param_count)
        throw std::logic_error("assemble_jacobian: vertex " + std::to_string(i) + " has " +
                               std::to_string(d.size()) + " partials, expected " +
                               std::to_string(param_count));
      g.positions[3 * i + a] = d.value();
      double* row = g.jacobian.entries.data() + (3 * i + a) * param_count;
      for (std::size_t k = 0; k < d.size(); ++k) row[k] = d.partial(k);
    }
  }
  return g;
}

}  // namespace procrecon
