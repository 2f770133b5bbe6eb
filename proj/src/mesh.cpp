#include "wrvi/pde/problem.hpp"

namespace wrvi {

Mesh1D Mesh1D::uniform(Interval domain, std::size_t elements, double omega_l, double omega_r) {
  if (elements < 2) throw ConfigError("Mesh1D: need at least 2 elements");
  Mesh1D m;
  m.nodes.resize(elements + 1);
  for (std::size_t i = 0; i <= elements; ++i) {
    m.nodes[i] = domain.a + domain.width() * static_cast<double>(i) / static_cast<double>(elements);
  }
  m.nodes.back() = domain.b;
  m.dirichlet_left = omega_l;
  m.dirichlet_right = omega_r;
  m.validate();
  return m;
}

void Mesh1D::validate() const {
  if (nodes.size() < 3) throw ConfigError("Mesh1D: need at least 2 elements");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) {
      throw ConfigError("Mesh1D: nodes must be strictly increasing");
    }
  }
}

}  // namespace wrvi
