#include "kdvstab/grid.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>

namespace kdvstab {

Grid1D::Grid1D(double length, int cells) : length_(length), cells_(cells), dx_(0.0) {
  if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("grid: length must be positive and finite");
  if (cells < kMinCells) {
    throw ConfigError("grid: cell count " + std::to_string(cells) + " below minimum " + std::to_string(kMinCells));
  }
  dx_ = length / cells;
}

Vector Grid1D::nodes() const {
  Vector x(node_count());
  for (int i = 0; i <= cells_; ++i) x(i) = node(i);
  return x;
}

Vector Grid1D::expand(const Vector& interior) const {
  if (interior.size() != interior_count()) throw ConfigError("grid: interior vector has wrong size");
  Vector full = Vector::Zero(node_count());
  full.segment(1, interior_count()) = interior;
  return full;
}

Vector Grid1D::restrict_interior(const Vector& full) const {
  if (full.size() != node_count()) throw ConfigError("grid: node vector has wrong size");
  return full.segment(1, interior_count());
}

OmegaWindow OmegaWindow::snap(const Grid1D& grid, double l1, double l2) {
  if (!(l1 >= 0.0) || !(l2 <= grid.length()) || !(l1 < l2)) {
    throw ConfigError("omega: need 0 <= l1 < l2 <= L, got (" + std::to_string(l1) + ", " + std::to_string(l2) + ")");
  }
  const double dx = grid.spacing();
  // Outward snap; the slack absorbs roundoff when an endpoint sits on a node.
  constexpr double slack = 1e-9;
  OmegaWindow w;
  w.left = l1;
  w.right = l2;
  w.first = std::max(0, static_cast<int>(std::floor(l1 / dx + slack)));
  w.last = std::min(grid.cells(), static_cast<int>(std::ceil(l2 / dx - slack)));
  if (w.last - w.first < 2) throw ConfigError("omega: snapped window must contain at least 3 nodes");
  w.measure = quadrature(grid, Vector::Ones(grid.node_count()), w);
  return w;
}

namespace {

// Ghost value at out-of-range node k as a combination of in-range nodes.
using Combination = std::map<int, double>;

Combination ghost(int k, int n, BoundaryConditions bc) {
  switch (bc) {
    case BoundaryConditions::kdv:
      if (k == -1) return {{0, 3.0}, {1, -3.0}, {2, 1.0}};
      if (k == n + 1) return {{n - 1, 1.0}};
      break;
    case BoundaryConditions::adjoint_kdv:
      if (k == -1) return {{1, 1.0}};
      if (k == n + 1) return {{n, 3.0}, {n - 1, -3.0}, {n - 2, 1.0}};
      break;
    case BoundaryConditions::kawahara:
      if (k == -1) return {{1, 1.0}};
      if (k == -2) return {{1, 8.0}, {2, -1.0}};
      if (k == n + 1) return {{n - 1, 1.0}};
      if (k == n + 2) return {{n - 2, -1.0}};
      break;
  }
  throw ConfigError("derivative matrix: stencil reaches node " + std::to_string(k) +
                    " which the boundary-condition set cannot eliminate");
}

std::map<int, double> centered_stencil(int order, double dx) {
  switch (order) {
    case 1:
      return {{-1, -0.5 / dx}, {1, 0.5 / dx}};
    case 3: {
      const double s = 0.5 / (dx * dx * dx);
      return {{-2, -s}, {-1, 2 * s}, {1, -2 * s}, {2, s}};
    }
    case 5: {
      const double s = 0.5 / std::pow(dx, 5);
      return {{-3, -s}, {-2, 4 * s}, {-1, -5 * s}, {1, 5 * s}, {2, -4 * s}, {3, s}};
    }
    default:
      throw ConfigError("derivative matrix: unsupported order " + std::to_string(order));
  }
}

}  // namespace

BandedMatrix<double> build_derivative_matrix(const Grid1D& grid, int order, BoundaryConditions bc) {
  const auto stencil = centered_stencil(order, grid.spacing());
  if (order == 5 && bc != BoundaryConditions::kawahara) {
    throw ConfigError("derivative matrix: order 5 needs the kawahara boundary set");
  }
  const int n = grid.cells();
  const int half = order / 2 + 1;
  if (n < 4 * half) throw ConfigError("derivative matrix: grid too coarse for the stencil");

  // Expand every row to (column -> coefficient) first, so the bandwidth is
  // known before storage is allocated.
  std::vector<Combination> rows(static_cast<std::size_t>(n - 1));
  for (int i = 1; i < n; ++i) {
    Combination& row = rows[static_cast<std::size_t>(i - 1)];
    for (const auto& [offset, c] : stencil) {
      const int k = i + offset;
      if (k >= 0 && k <= n) {
        row[k] += c;
      } else {
        for (const auto& [node, g] : ghost(k, n, bc)) row[node] += c * g;
      }
    }
  }
  int band = 0;
  for (int i = 1; i < n; ++i) {
    for (const auto& [node, c] : rows[static_cast<std::size_t>(i - 1)]) {
      if (node >= 1 && node <= n - 1 && c != 0.0) band = std::max(band, std::abs(node - i));
    }
  }
  BandedMatrix<double> m(n - 1, band);
  for (int i = 1; i < n; ++i) {
    // Boundary nodes carry u(0) = u(L) = 0 and drop out.
    for (const auto& [node, c] : rows[static_cast<std::size_t>(i - 1)]) {
      if (node >= 1 && node <= n - 1 && c != 0.0) m.add(i - 1, node - 1, c);
    }
  }
  return m;
}

Vector trapezoid_weights(const Grid1D& grid) {
  Vector w = Vector::Constant(grid.node_count(), grid.spacing());
  w(0) *= 0.5;
  w(grid.cells()) *= 0.5;
  return w;
}

Vector trapezoid_weights(const Grid1D& grid, const OmegaWindow& window) {
  if (window.first < 0 || window.last > grid.cells() || window.last <= window.first) {
    throw ConfigError("quadrature: window outside grid");
  }
  Vector w = Vector::Zero(grid.node_count());
  w.segment(window.first, window.node_count()).setConstant(grid.spacing());
  w(window.first) *= 0.5;
  w(window.last) *= 0.5;
  return w;
}

double quadrature(const Grid1D& grid, const Vector& values) {
  if (values.size() != grid.node_count()) throw ConfigError("quadrature: value vector has wrong size");
  return trapezoid_weights(grid).dot(values);
}

double quadrature(const Grid1D& grid, const Vector& values, const OmegaWindow& window) {
  if (values.size() != grid.node_count()) throw ConfigError("quadrature: value vector has wrong size");
  return trapezoid_weights(grid, window).dot(values);
}

double boundary_derivative(const Grid1D& grid, const Vector& u, Side end, int order) {
  if (grid.cells() < 4) throw ConfigError("boundary_derivative: need at least 4 cells");
  if (u.size() != grid.node_count()) throw ConfigError("boundary_derivative: node vector has wrong size");
  const double dx = grid.spacing();
  const int n = grid.cells();
  // Values ordered from the endpoint inward.
  auto at = [&](int k) { return end == Side::left ? u(k) : u(n - k); };
  const double sign = end == Side::left ? 1.0 : -1.0;
  switch (order) {
    case 1:
      return sign * (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * dx);
    case 2:
      return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (dx * dx);
    default:
      throw ConfigError("boundary_derivative: order must be 1 or 2");
  }
}

}  // namespace kdvstab
