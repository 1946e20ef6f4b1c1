#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "procrecon/optim.hpp"

namespace procrecon {

void adam_step(AdamState& s, std::vector<double>& genes, std::span<const double> grad, const std::vector<bool>& frozen) {
  const std::size_t n = genes.size();
  if (grad.size() != n || s.m.size() != n || s.v.size() != n || (!frozen.empty() && frozen.size() != n))
    throw std::invalid_argument("adam_step: length mismatch");
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < n; ++i) {
    if (!frozen.empty() && frozen[i]) continue;
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / c1, vhat = s.v[i] / c2;
    genes[i] = std::clamp(genes[i] - s.lr * mhat / (std::sqrt(vhat) + s.eps), 0.0, 1.0);
  }
}

}  // namespace procrecon
