#pragma once

#include <optional>
#include <string>

#include "kdvstab/grid.hpp"

namespace kdvstab {

enum class DampingKind { none, weak_g, multiplicative, h_minus_one };

std::string to_string(DampingKind kind);
DampingKind parse_damping_kind(const std::string& name);

/// Built-in profiles for the multiplicative coefficient a(x).
enum class ProfileKind { indicator, bump };

/// Which feedback acts on the state and where.
struct DampingSpec {
  DampingKind kind = DampingKind::none;
  std::optional<OmegaWindow> window;
  double floor = 0.0;  ///< a0, multiplicative only
  Vector profile;      ///< a(x_i) on all nodes, multiplicative only

  static DampingSpec none();
  static DampingSpec weak_g(const OmegaWindow& window);
  static DampingSpec h_minus_one(const Grid1D& grid, const OmegaWindow& window);
  static DampingSpec multiplicative(const Grid1D& grid, const OmegaWindow& window, double floor,
                                    ProfileKind profile = ProfileKind::indicator);
  /// Multiplicative damping from explicit node samples of a(x).
  static DampingSpec multiplicative(const Grid1D& grid, const OmegaWindow& window, double floor, Vector profile);

  /// Throws ConfigError when an invariant does not hold on this grid.
  void validate(const Grid1D& grid) const;
};

/// (Gu)_i = u_i - mean_omega(u) on the window, 0 elsewhere. The mean uses the
/// window trapezoid weights, so quadrature(grid, Gu, window) vanishes.
Vector apply_weak_g(const Grid1D& grid, const OmegaWindow& window, const Vector& u);

Vector apply_multiplicative(const DampingSpec& spec, const Vector& u);

/// Bu = v on the window where -v'' = u with v = 0 at both window endpoints.
Vector apply_h_minus_one(const Grid1D& grid, const OmegaWindow& window, const Vector& u);

/// Damping operator applied to full node values.
Vector apply_damping(const DampingSpec& spec, const Grid1D& grid, const Vector& u);

/// Node values f such that the global trapezoid pairing <phi, f> reproduces
/// the window trapezoid pairing of phi with the damping term. Differs from
/// apply_damping only for weak_g, whose window-endpoint values are halved.
/// This is the vector a time stepper should add to the right-hand side.
Vector damping_load(const DampingSpec& spec, const Grid1D& grid, const Vector& u);

/// Damping part of -dE/dt for E = 1/2 int u^2; always >= 0.
double dissipation_functional(const DampingSpec& spec, const Grid1D& grid, const Vector& u);

}  // namespace kdvstab
