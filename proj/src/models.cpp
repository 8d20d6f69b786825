#include "kdvstab/models.hpp"

namespace kdvstab {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kdv_linear: return "kdv_linear";
    case ModelKind::kdv: return "kdv";
    case ModelKind::kawahara: return "kawahara";
    case ModelKind::gear_grimshaw: return "gear_grimshaw";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "kdv_linear") return ModelKind::kdv_linear;
  if (name == "kdv") return ModelKind::kdv;
  if (name == "kawahara") return ModelKind::kawahara;
  if (name == "gear_grimshaw") return ModelKind::gear_grimshaw;
  throw ConfigError("unknown model kind '" + name + "'");
}

void ModelSpec::validate() const {
  if (kind != ModelKind::gear_grimshaw) return;
  if (!(gg.b2 > 0.0)) throw ConfigError("gear_grimshaw: b2 must be positive");
  if (!(gg.c > 0.0)) throw ConfigError("gear_grimshaw: c must be positive");
  if (!(1.0 - gg.a3 * gg.a3 * gg.b2 > 0.0)) throw ConfigError("gear_grimshaw: need 1 - a3^2 b2 > 0");
}

Vector pack(const ModelSpec& model, const ModelState& state) {
  if (model.field_count() == 1) return state.u;
  if (state.v.size() != state.u.size()) throw ConfigError("pack: u and v sizes differ");
  Vector out(2 * state.u.size());
  for (Eigen::Index i = 0; i < state.u.size(); ++i) {
    out(2 * i) = state.u(i);
    out(2 * i + 1) = state.v(i);
  }
  return out;
}

ModelState unpack(const ModelSpec& model, const Vector& packed, double time) {
  ModelState s;
  s.time = time;
  if (model.field_count() == 1) {
    s.u = packed;
    return s;
  }
  const Eigen::Index m = packed.size() / 2;
  s.u.resize(m);
  s.v.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s.u(i) = packed(2 * i);
    s.v(i) = packed(2 * i + 1);
  }
  return s;
}

namespace {

// Scatter a scalar block into an interleaved two-field operator.
void add_block(BandedMatrix<double>& target, const BandedMatrix<double>& block, int row_field, int col_field,
               double scale) {
  if (scale == 0.0) return;
  const Eigen::Index m = block.rows();
  const Eigen::Index b = block.half_bandwidth();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = std::max<Eigen::Index>(0, i - b); j <= std::min(m - 1, i + b); ++j) {
      const double a = block(i, j);
      if (a != 0.0) target.add(2 * i + row_field, 2 * j + col_field, scale * a);
    }
  }
}

// Skew-symmetric split (1/3)[D1(w^2) + w * D1 w] of w w_x.
Vector skew_transport(const BandedMatrix<double>& d1, const Vector& w) {
  return (d1 * w.cwiseAbs2() + w.cwiseProduct(d1 * w)) / 3.0;
}

}  // namespace

BandedMatrix<double> linear_operator(const ModelSpec& model, const Grid1D& grid) {
  model.validate();
  const auto bc = model.boundary_conditions();
  const BandedMatrix<double> d1 = build_derivative_matrix(grid, 1, bc);
  const BandedMatrix<double> d3 = build_derivative_matrix(grid, 3, bc);
  switch (model.kind) {
    case ModelKind::kdv_linear:
    case ModelKind::kdv:
      return d1 + d3;
    case ModelKind::kawahara: {
      const BandedMatrix<double> d5 = build_derivative_matrix(grid, 5, bc);
      return d1 + d3 + (-1.0) * d5;
    }
    case ModelKind::gear_grimshaw: {
      const auto& k = model.gg;
      const Eigen::Index m = grid.interior_count();
      const Eigen::Index b = std::max(d1.half_bandwidth(), d3.half_bandwidth());
      BandedMatrix<double> op(2 * m, 2 * b + 1);
      add_block(op, d3, 0, 0, 1.0);
      add_block(op, d3, 0, 1, k.a3);
      add_block(op, d3, 1, 0, k.a3 * k.b2 / k.c);
      add_block(op, d3, 1, 1, 1.0 / k.c);
      add_block(op, d1, 1, 1, k.r / k.c);
      return op;
    }
  }
  throw ConfigError("linear_operator: unknown model");
}

ModelState nonlinear_term(const ModelSpec& model, const Grid1D& grid, const ModelState& state) {
  return nonlinear_term(model, build_derivative_matrix(grid, 1, model.boundary_conditions()), state);
}

ModelState nonlinear_term(const ModelSpec& model, const BandedMatrix<double>& d1, const ModelState& state) {
  ModelState f;
  f.time = state.time;
  if (model.is_linear()) {
    f.u = Vector::Zero(state.u.size());
    return f;
  }
  if (model.field_count() == 1) {
    f.u = skew_transport(d1, state.u);
    return f;
  }
  const auto& k = model.gg;
  const Vector uu = skew_transport(d1, state.u);
  const Vector vv = skew_transport(d1, state.v);
  const Vector uv = d1 * state.u.cwiseProduct(state.v);
  f.u = uu + k.a1 * vv + k.a2 * uv;
  f.v = (vv + k.a2 * k.b2 * uu + k.a1 * k.b2 * uv) / k.c;
  return f;
}

double energy(const ModelSpec& model, const Grid1D& grid, const ModelState& state) {
  const Vector u = grid.expand(state.u);
  if (model.field_count() == 1) return 0.5 * quadrature(grid, u.cwiseAbs2());
  const Vector v = grid.expand(state.v);
  return 0.5 * quadrature(grid, model.gg.b2 * u.cwiseAbs2() + model.gg.c * v.cwiseAbs2());
}

double boundary_dissipation(const ModelSpec& model, const Grid1D& grid, const ModelState& state) {
  const Vector u = grid.expand(state.u);
  switch (model.kind) {
    case ModelKind::kdv_linear:
    case ModelKind::kdv: {
      const double ux = boundary_derivative(grid, u, Side::left, 1);
      return 0.5 * ux * ux;
    }
    case ModelKind::kawahara: {
      const double uxx = boundary_derivative(grid, u, Side::left, 2);
      return 0.5 * uxx * uxx;
    }
    case ModelKind::gear_grimshaw: {
      const auto& k = model.gg;
      const double ux = boundary_derivative(grid, u, Side::left, 1);
      const double vx = boundary_derivative(grid, grid.expand(state.v), Side::left, 1);
      return 0.5 * (k.b2 * ux * ux + 2.0 * k.a3 * k.b2 * ux * vx + vx * vx);
    }
  }
  return 0.0;
}

}  // namespace kdvstab
