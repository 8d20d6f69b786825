#pragma once

#include <Eigen/Core>

#include "kdvstab/banded_matrix.hpp"

namespace kdvstab {

using Vector = Eigen::VectorXd;

/// Uniform mesh on [0, L] with n cells and nodes x_i = i * dx, i = 0..n.
class Grid1D {
 public:
  static constexpr int kMinCells = 16;

  Grid1D(double length, int cells);

  double length() const { return length_; }
  int cells() const { return cells_; }
  double spacing() const { return dx_; }
  int node_count() const { return cells_ + 1; }
  int interior_count() const { return cells_ - 1; }

  /// Node coordinate; exact at both ends.
  double node(int i) const { return i == cells_ ? length_ : i * dx_; }
  Vector nodes() const;

  /// Interior unknowns u_1..u_{n-1} padded with zero boundary values.
  Vector expand(const Vector& interior) const;
  /// Drops the two boundary values.
  Vector restrict_interior(const Vector& full) const;

 private:
  double length_;
  int cells_;
  double dx_;
};

/// Subinterval omega = (l1, l2) snapped outward to nodes [first, last].
struct OmegaWindow {
  double left = 0.0;
  double right = 0.0;
  int first = 0;
  int last = 0;
  double measure = 0.0;

  static OmegaWindow snap(const Grid1D& grid, double l1, double l2);

  int node_count() const { return last - first + 1; }
  bool contains(int node) const { return node >= first && node <= last; }
};

enum class BoundaryConditions {
  kdv,          ///< u(0) = u(L) = u_x(L) = 0
  kawahara,     ///< u(0) = u(L) = u_x(0) = u_x(L) = u_xx(L) = 0
  adjoint_kdv,  ///< w(0) = w(L) = w_x(0) = 0 (mirror image of kdv)
};

enum class Side { left, right };

/// Centered finite-difference operator of order 1, 3 or 5 acting on the
/// interior unknowns, with boundary rows closed by ghost-value elimination.
BandedMatrix<double> build_derivative_matrix(const Grid1D& grid, int order, BoundaryConditions bc);

/// Composite trapezoid weights over all nodes.
Vector trapezoid_weights(const Grid1D& grid);
/// Trapezoid weights of the window, zero outside it.
Vector trapezoid_weights(const Grid1D& grid, const OmegaWindow& window);

/// Composite trapezoid rule over [0, L] on full node values.
double quadrature(const Grid1D& grid, const Vector& values);
/// Composite trapezoid rule over the snapped window.
double quadrature(const Grid1D& grid, const Vector& values, const OmegaWindow& window);

/// One-sided second-order first or second derivative at an endpoint, from
/// full node values.
double boundary_derivative(const Grid1D& grid, const Vector& u, Side end, int order);

}  // namespace kdvstab
