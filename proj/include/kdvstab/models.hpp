#pragma once

#include <string>

#include "kdvstab/grid.hpp"

namespace kdvstab {

enum class ModelKind { kdv_linear, kdv, kawahara, gear_grimshaw };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Coefficients of the coupled Gear-Grimshaw pair
///   u_t + u u_x + u_xxx + a3 v_xxx + a1 v v_x + a2 (u v)_x = 0
///   c v_t + r v_x + v v_x + a3 b2 u_xxx + v_xxx + a2 b2 u u_x + a1 b2 (u v)_x = 0
struct GearGrimshawConstants {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double b2 = 1.0;
  double c = 1.0;
  double r = 0.0;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kdv;
  GearGrimshawConstants gg;

  static ModelSpec kdv_linear() { return {ModelKind::kdv_linear, {}}; }
  static ModelSpec kdv() { return {ModelKind::kdv, {}}; }
  static ModelSpec kawahara() { return {ModelKind::kawahara, {}}; }
  static ModelSpec gear_grimshaw(const GearGrimshawConstants& constants) {
    return {ModelKind::gear_grimshaw, constants};
  }

  /// Throws ConfigError unless b2 > 0, c > 0 and 1 - a3^2 b2 > 0.
  void validate() const;

  int field_count() const { return kind == ModelKind::gear_grimshaw ? 2 : 1; }
  bool is_linear() const { return kind == ModelKind::kdv_linear; }
  BoundaryConditions boundary_conditions() const {
    return kind == ModelKind::kawahara ? BoundaryConditions::kawahara : BoundaryConditions::kdv;
  }
};

/// Interior unknowns of each field; v is empty unless the model has two fields.
struct ModelState {
  double time = 0.0;
  Vector u;
  Vector v;
};

/// Concatenated unknowns in the layout of linear_operator: u alone, or
/// (u_1, v_1, u_2, v_2, ...) interleaved for two fields.
Vector pack(const ModelSpec& model, const ModelState& state);
ModelState unpack(const ModelSpec& model, const Vector& packed, double time);

/// Stiff linear part L_h so that d/dt state = -L_h state - F(state).
BandedMatrix<double> linear_operator(const ModelSpec& model, const Grid1D& grid);

/// Nonlinear transport terms F on interior nodes (v-equation already divided by c).
ModelState nonlinear_term(const ModelSpec& model, const Grid1D& grid, const ModelState& state);
/// Same, reusing a prebuilt order-1 matrix for the model's boundary set.
ModelState nonlinear_term(const ModelSpec& model, const BandedMatrix<double>& d1, const ModelState& state);

/// kdv family: 1/2 int u^2; gear_grimshaw: 1/2 int (b2 u^2 + c v^2).
double energy(const ModelSpec& model, const Grid1D& grid, const ModelState& state);

/// Energy flux out through x = 0 (the boundary part of -dE/dt).
///   kdv, kdv_linear:  1/2 u_x(0)^2
///   kawahara:         1/2 u_xx(0)^2
///   gear_grimshaw:    1/2 (b2 u_x^2 + 2 a3 b2 u_x v_x + v_x^2) at x = 0
double boundary_dissipation(const ModelSpec& model, const Grid1D& grid, const ModelState& state);

}  // namespace kdvstab
