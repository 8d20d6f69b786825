#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kdvstab/damping.hpp"
#include "kdvstab/models.hpp"

namespace kdvstab {

/// External source f(x, t) on all nodes, entering as u_t + L u + F(u) = f.
using Forcing = std::function<Vector(double t)>;

struct SimConfig {
  double dt = 5e-4;
  double horizon = 1.0;
  int snapshot_stride = 1;
  int trace_cadence = 1;
  double blowup_factor = 10.0;
  /// Permit dt above 0.25 dx / max(1, |u0|_inf); a warning is recorded instead.
  bool allow_large_dt = false;
  /// Implicit weight theta = 1/2 + offcentering * dt. Zero gives plain
  /// Crank-Nicolson, which leaves the stiffest dispersive modes almost undamped.
  double offcentering = 1.0;

  void validate() const;
  /// round(horizon / dt), at least one.
  int steps() const;
  /// The horizon moved to an integer multiple of dt.
  double snapped_horizon() const { return steps() * dt; }
};

struct Snapshot {
  double time = 0.0;
  Vector u;  ///< full node values
  Vector v;  ///< full node values, second field only
};

/// Time series recorded every trace_cadence steps, plus snapshots at stride.
struct SimTrace {
  std::vector<double> times;
  std::vector<double> energy;
  std::vector<double> diss_damping;
  std::vector<double> diss_boundary;
  std::vector<double> mass;
  std::vector<double> ux0;
  std::vector<double> linf;
  std::vector<Snapshot> snapshots;

  double dt = 0.0;
  double snapped_horizon = 0.0;
  int steps = 0;
  bool two_fields = false;
  std::vector<std::string> warnings;

  /// sum_k dt ||G w(t_k)|| and T max_k ||w(t_k)|| for the damped field w
  /// (trapezoid in time); only filled for weak_g damping.
  std::optional<std::pair<double, double>> feedback_time_bound;

  std::size_t size() const { return times.size(); }
};

/// Crank-Nicolson on the linear operator, two-step Adams-Bashforth on the
/// nonlinear and damping terms:
///
///   (I + th dt L) u+ = (I - (1-th) dt L) u - dt (3/2 F_k - 1/2 F_{k-1}) + dt/2 (f_k + f_{k+1})
///
/// with th = 1/2 + offcentering * dt, still second order. The first step
/// evaluates F at an explicit midpoint instead.
class SemiImplicitStepper {
 public:
  SemiImplicitStepper(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping, double dt,
                      Forcing forcing = {}, double offcentering = 1.0);

  ModelState step(const ModelState& state);
  /// Forget the multistep history; the next step is a startup step.
  void reset() { previous_.reset(); }

  double dt() const { return dt_; }
  double theta() const { return theta_; }
  const BandedMatrix<double>& linear() const { return op_; }

 private:
  Vector explicit_term(const ModelState& state) const;
  Vector forcing_at(double t) const;

  ModelSpec model_;
  Grid1D grid_;
  DampingSpec damping_;
  double dt_;
  double theta_;
  Forcing forcing_;
  BandedMatrix<double> d1_;
  BandedMatrix<double> op_;
  BandedMatrix<double> implicit_;
  BandedMatrix<double> startup_;
  std::optional<Vector> previous_;
};

/// Initial data on all nodes; v is used by two-field models only.
struct InitialData {
  Vector u;
  Vector v;
};

/// Zeroes both endpoint values and drops them.
Vector project_initial(const Grid1D& grid, const Vector& full);

SimTrace run(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping, const InitialData& initial,
             const SimConfig& config, const Forcing& forcing = {});

SimTrace run(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping, const Vector& initial_u,
             const SimConfig& config, const Forcing& forcing = {});

}  // namespace kdvstab
