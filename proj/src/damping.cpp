#include "kdvstab/damping.hpp"

#include <cmath>

namespace kdvstab {

std::string to_string(DampingKind kind) {
  switch (kind) {
    case DampingKind::none: return "none";
    case DampingKind::weak_g: return "weak_g";
    case DampingKind::multiplicative: return "multiplicative";
    case DampingKind::h_minus_one: return "h_minus_one";
  }
  return "unknown";
}

DampingKind parse_damping_kind(const std::string& name) {
  if (name == "none") return DampingKind::none;
  if (name == "weak_g") return DampingKind::weak_g;
  if (name == "multiplicative") return DampingKind::multiplicative;
  if (name == "h_minus_one") return DampingKind::h_minus_one;
  throw ConfigError("unknown damping kind '" + name + "'");
}

DampingSpec DampingSpec::none() { return {}; }

DampingSpec DampingSpec::weak_g(const OmegaWindow& window) {
  DampingSpec s;
  s.kind = DampingKind::weak_g;
  s.window = window;
  return s;
}

DampingSpec DampingSpec::h_minus_one(const Grid1D& grid, const OmegaWindow& window) {
  DampingSpec s;
  s.kind = DampingKind::h_minus_one;
  s.window = window;
  s.validate(grid);
  return s;
}

DampingSpec DampingSpec::multiplicative(const Grid1D& grid, const OmegaWindow& window, double floor,
                                        ProfileKind profile) {
  const Vector x = grid.nodes();
  Vector a = Vector::Zero(grid.node_count());
  // Bump tails decay over a tenth of the window width.
  const double width = 0.1 * (window.right - window.left);
  for (int i = 0; i < grid.node_count(); ++i) {
    if (window.contains(i)) {
      a(i) = floor;
    } else if (profile == ProfileKind::bump) {
      const double dist = i < window.first ? grid.node(window.first) - x(i) : x(i) - grid.node(window.last);
      a(i) = floor * std::exp(-(dist / width) * (dist / width));
    }
  }
  return multiplicative(grid, window, floor, std::move(a));
}

DampingSpec DampingSpec::multiplicative(const Grid1D& grid, const OmegaWindow& window, double floor,
                                        Vector profile) {
  DampingSpec s;
  s.kind = DampingKind::multiplicative;
  s.window = window;
  s.floor = floor;
  s.profile = std::move(profile);
  s.validate(grid);
  return s;
}

void DampingSpec::validate(const Grid1D& grid) const {
  if (kind == DampingKind::none) return;
  if (!window) throw ConfigError("damping: " + to_string(kind) + " needs a window");
  const OmegaWindow& w = *window;
  if (w.first < 0 || w.last > grid.cells() || w.last - w.first < 2) {
    throw ConfigError("damping: window does not fit the grid");
  }
  if (kind == DampingKind::h_minus_one && !(w.left > 0.0 && w.right < grid.length())) {
    throw ConfigError("damping: h_minus_one needs 0 < l1 < l2 < L");
  }
  if (kind == DampingKind::multiplicative) {
    if (!(floor > 0.0)) throw ConfigError("damping: multiplicative floor a0 must be positive");
    if (profile.size() != grid.node_count()) throw ConfigError("damping: profile must have one value per node");
    for (int i = 0; i < grid.node_count(); ++i) {
      const double a = profile(i);
      if (!std::isfinite(a) || a < 0.0 || (w.contains(i) && a < floor)) {
        throw ConfigError("damping: profile violates a >= a0 on omega, a >= 0 elsewhere at node " +
                          std::to_string(i));
      }
    }
  }
}

Vector apply_weak_g(const Grid1D& grid, const OmegaWindow& window, const Vector& u) {
  const Vector w = trapezoid_weights(grid, window);
  if (u.size() != grid.node_count()) throw ConfigError("apply_weak_g: node vector has wrong size");
  const double mean = w.dot(u) / w.sum();
  Vector g = Vector::Zero(u.size());
  g.segment(window.first, window.node_count()) =
      u.segment(window.first, window.node_count()).array() - mean;
  return g;
}

Vector apply_multiplicative(const DampingSpec& spec, const Vector& u) {
  if (spec.kind != DampingKind::multiplicative) throw ConfigError("apply_multiplicative: spec is not multiplicative");
  if (spec.profile.size() != u.size()) throw ConfigError("apply_multiplicative: size mismatch");
  return spec.profile.cwiseProduct(u);
}

Vector apply_h_minus_one(const Grid1D& grid, const OmegaWindow& window, const Vector& u) {
  if (u.size() != grid.node_count()) throw ConfigError("apply_h_minus_one: node vector has wrong size");
  const int m = window.node_count() - 2;
  if (m < 1) throw ConfigError("apply_h_minus_one: window needs at least 3 nodes");
  const double inv_dx2 = 1.0 / (grid.spacing() * grid.spacing());
  BandedMatrix<double> lap(m, 1);
  for (int i = 0; i < m; ++i) {
    lap.coeffRef(i, i) = 2.0 * inv_dx2;
    if (i > 0) lap.coeffRef(i, i - 1) = -inv_dx2;
    if (i + 1 < m) lap.coeffRef(i, i + 1) = -inv_dx2;
  }
  Vector v;
  try {
    v = lap.solve(u.segment(window.first + 1, m));
  } catch (const SingularMatrixError& e) {
    throw std::logic_error(std::string("apply_h_minus_one: Dirichlet Laplacian singular: ") + e.what());
  }
  Vector out = Vector::Zero(u.size());
  out.segment(window.first + 1, m) = v;
  return out;
}

Vector apply_damping(const DampingSpec& spec, const Grid1D& grid, const Vector& u) {
  switch (spec.kind) {
    case DampingKind::none: return Vector::Zero(u.size());
    case DampingKind::weak_g: return apply_weak_g(grid, *spec.window, u);
    case DampingKind::multiplicative: return apply_multiplicative(spec, u);
    case DampingKind::h_minus_one: return apply_h_minus_one(grid, *spec.window, u);
  }
  return Vector::Zero(u.size());
}

Vector damping_load(const DampingSpec& spec, const Grid1D& grid, const Vector& u) {
  Vector f = apply_damping(spec, grid, u);
  if (spec.kind == DampingKind::weak_g) {
    const OmegaWindow& w = *spec.window;
    // Interior window endpoints carry half a cell of omega; domain endpoints
    // have matching half weights already.
    if (w.first > 0) f(w.first) *= 0.5;
    if (w.last < grid.cells()) f(w.last) *= 0.5;
  }
  return f;
}

double dissipation_functional(const DampingSpec& spec, const Grid1D& grid, const Vector& u) {
  switch (spec.kind) {
    case DampingKind::none:
      return 0.0;
    case DampingKind::weak_g: {
      const Vector g = apply_weak_g(grid, *spec.window, u);
      return quadrature(grid, g.cwiseAbs2(), *spec.window);
    }
    case DampingKind::multiplicative:
      return quadrature(grid, spec.profile.cwiseProduct(u.cwiseAbs2()));
    case DampingKind::h_minus_one:
      return quadrature(grid, u.cwiseProduct(apply_h_minus_one(grid, *spec.window, u)));
  }
  return 0.0;
}

}  // namespace kdvstab
