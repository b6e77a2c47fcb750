#include "perisurf/mesh.hpp"

#include <sstream>

#include "perisurf/errors.hpp"
#include "perisurf/special.hpp"

namespace perisurf {

CellMesh::CellMesh(int n1, int n2, int order, double floor, double ceiling)
    : n1_(n1), n2_(n2), order_(order), h_(floor), H_(ceiling) {
  if (n1 < 2 || n2 < 1 || (order != 1 && order != 2) || !(floor < ceiling)) {
    std::ostringstream os;
    os << "invalid cell mesh " << n1 << "x" << n2 << " order " << order << " on ("
       << floor << ", " << ceiling << ")";
    throw InputError(os.str());
  }
}

void CellMesh::element_nodes(int ex, int ey, std::vector<int>& open_nodes) const {
  const int p = order_;
  open_nodes.resize(local_size());
  for (int b = 0; b <= p; ++b) {
    for (int a = 0; a <= p; ++a) {
      open_nodes[b * (p + 1) + a] = open_node(p * ex + a, p * ey + b);
    }
  }
}

void lagrange_1d(int order, double xi, double* values, double* derivatives) {
  if (order == 1) {
    values[0] = 1.0 - xi;
    values[1] = xi;
    derivatives[0] = -1.0;
    derivatives[1] = 1.0;
    return;
  }
  values[0] = 2.0 * (xi - 0.5) * (xi - 1.0);
  values[1] = -4.0 * xi * (xi - 1.0);
  values[2] = 2.0 * xi * (xi - 0.5);
  derivatives[0] = 4.0 * xi - 3.0;
  derivatives[1] = 4.0 - 8.0 * xi;
  derivatives[2] = 4.0 * xi - 1.0;
}

Quadrature1D reference_gauss(int points) {
  Quadrature1D q;
  gauss_legendre(points, 0.0, 1.0, q.nodes, q.weights);
  return q;
}

}  // namespace perisurf
