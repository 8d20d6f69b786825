#include "kdvstab/timestepper.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kdvstab {

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim: dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("sim: horizon must be positive");
  if (dt > horizon) throw ConfigError("sim: dt exceeds the horizon");
  if (snapshot_stride < 1) throw ConfigError("sim: snapshot stride must be >= 1");
  if (trace_cadence < 1) throw ConfigError("sim: trace cadence must be >= 1");
  if (!(blowup_factor > 1.0)) throw ConfigError("sim: blowup factor must exceed 1");
  if (!(offcentering >= 0.0) || !(offcentering * dt < 0.5)) {
    throw ConfigError("sim: offcentering must satisfy 0 <= offcentering * dt < 1/2");
  }
}

int SimConfig::steps() const { return std::max(1, static_cast<int>(std::lround(horizon / dt))); }

SemiImplicitStepper::SemiImplicitStepper(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping,
                                         double dt, Forcing forcing, double offcentering)
    : model_(model),
      grid_(grid),
      damping_(damping),
      dt_(dt),
      theta_(0.5 + offcentering * dt),
      forcing_(std::move(forcing)),
      d1_(build_derivative_matrix(grid, 1, model.boundary_conditions())),
      op_(linear_operator(model, grid)),
      implicit_(identity_plus(op_, theta_ * dt)),
      startup_(identity_plus(op_, 0.25 * dt)) {
  damping_.validate(grid_);
  if (!(offcentering >= 0.0) || !(theta_ < 1.0)) throw ConfigError("stepper: offcentering must keep theta in [1/2, 1)");
  if (forcing_ && model_.field_count() != 1) throw ConfigError("stepper: forcing supports single-field models only");
  implicit_.factorize();
  startup_.factorize();
}

Vector SemiImplicitStepper::explicit_term(const ModelState& state) const {
  ModelState f = nonlinear_term(model_, d1_, state);
  if (damping_.kind != DampingKind::none) {
    if (model_.field_count() == 1) {
      f.u += grid_.restrict_interior(damping_load(damping_, grid_, grid_.expand(state.u)));
    } else {
      f.v += grid_.restrict_interior(damping_load(damping_, grid_, grid_.expand(state.v))) / model_.gg.c;
    }
  }
  return pack(model_, f);
}

Vector SemiImplicitStepper::forcing_at(double t) const { return grid_.restrict_interior(forcing_(t)); }

ModelState SemiImplicitStepper::step(const ModelState& state) {
  const Vector x = pack(model_, state);
  const double t = state.time;
  const Vector fk = explicit_term(state);
  Vector extrapolated;
  if (previous_) {
    extrapolated = 1.5 * fk - 0.5 * *previous_;
  } else {
    Vector rhs = x - 0.25 * dt_ * (op_ * x) - 0.5 * dt_ * fk;
    if (forcing_) rhs += 0.25 * dt_ * (forcing_at(t) + forcing_at(t + 0.5 * dt_));
    extrapolated = explicit_term(unpack(model_, startup_.solve_factored(rhs), t + 0.5 * dt_));
  }
  Vector rhs = x - (1.0 - theta_) * dt_ * (op_ * x) - dt_ * extrapolated;
  if (forcing_) rhs += 0.5 * dt_ * (forcing_at(t) + forcing_at(t + dt_));
  previous_ = fk;
  return unpack(model_, implicit_.solve_factored(rhs), t + dt_);
}

Vector project_initial(const Grid1D& grid, const Vector& full) { return grid.restrict_interior(full); }

namespace {

double l2_norm(const Grid1D& grid, const Vector& full) { return std::sqrt(quadrature(grid, full.cwiseAbs2())); }

}  // namespace

SimTrace run(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping, const InitialData& initial,
             const SimConfig& config, const Forcing& forcing) {
  model.validate();
  config.validate();
  damping.validate(grid);
  const bool two = model.field_count() == 2;
  if (initial.u.size() != grid.node_count() || (two && initial.v.size() != grid.node_count())) {
    throw ConfigError("run: initial data must provide one value per node for each field");
  }

  ModelState state;
  state.u = project_initial(grid, initial.u);
  if (two) state.v = project_initial(grid, initial.v);

  SimTrace trace;
  trace.dt = config.dt;
  trace.steps = config.steps();
  trace.snapped_horizon = config.snapped_horizon();
  trace.two_fields = two;
  if (std::abs(trace.snapped_horizon - config.horizon) > 1e-12 * config.horizon) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "horizon snapped from " << config.horizon << " to " << trace.snapped_horizon;
    trace.warnings.push_back(msg.str());
  }

  double amplitude = state.u.size() ? state.u.cwiseAbs().maxCoeff() : 0.0;
  if (two && state.v.size()) amplitude = std::max(amplitude, state.v.cwiseAbs().maxCoeff());
  const double dt_limit = 0.25 * grid.spacing() / std::max(1.0, amplitude);
  if (config.dt > dt_limit) {
    std::ostringstream msg;
    msg << "dt = " << config.dt << " exceeds the guard 0.25 dx / max(1, |u0|_inf) = " << dt_limit;
    if (!config.allow_large_dt) throw ConfigError("sim: " + msg.str());
    trace.warnings.push_back(msg.str());
  }

  const bool feedback_bound = damping.kind == DampingKind::weak_g;
  double bound_integral = 0.0;
  double bound_max = 0.0;
  double prev_feedback_norm = 0.0;

  auto record = [&](const ModelState& s, int k) {
    const Vector u = grid.expand(s.u);
    const Vector damped = two ? grid.expand(s.v) : u;
    const double e = energy(model, grid, s);
    trace.times.push_back(s.time);
    trace.energy.push_back(e);
    trace.diss_damping.push_back(dissipation_functional(damping, grid, damped));
    trace.diss_boundary.push_back(boundary_dissipation(model, grid, s));
    trace.mass.push_back(quadrature(grid, u));
    trace.ux0.push_back(boundary_derivative(grid, u, Side::left, 1));
    double linf = u.cwiseAbs().maxCoeff();
    if (two) linf = std::max(linf, damped.cwiseAbs().maxCoeff());
    trace.linf.push_back(linf);
    if (k % config.snapshot_stride == 0) {
      Snapshot snap;
      snap.time = s.time;
      snap.u = u;
      if (two) snap.v = damped;
      trace.snapshots.push_back(std::move(snap));
    }
    if (feedback_bound) {
      const double g = std::sqrt(trace.diss_damping.back());
      if (trace.size() > 1) {
        bound_integral += 0.5 * (trace.times.back() - trace.times[trace.size() - 2]) * (g + prev_feedback_norm);
      }
      prev_feedback_norm = g;
      bound_max = std::max(bound_max, l2_norm(grid, damped));
    }
  };

  record(state, 0);
  const double e0 = trace.energy.front();
  double last_good = 0.0;
  SemiImplicitStepper stepper(model, grid, damping, config.dt, forcing, config.offcentering);
  for (int k = 1; k <= trace.steps; ++k) {
    ModelState next = stepper.step(state);
    next.time = k * config.dt;  // no drift from repeated addition
    const bool finite = next.u.allFinite() && (!two || next.v.allFinite());
    const double e = finite ? energy(model, grid, next) : 0.0;
    if (!finite || !std::isfinite(e) || (e0 > 0.0 && e > config.blowup_factor * e0)) {
      std::ostringstream msg;
      msg << "blowup at t = " << next.time << (finite ? " (energy above threshold)" : " (non-finite state)");
      throw BlowupError(msg.str(), last_good);
    }
    state = std::move(next);
    last_good = state.time;
    if (k % config.trace_cadence == 0) {
      record(state, k);
    } else if (k % config.snapshot_stride == 0) {
      Snapshot snap;
      snap.time = state.time;
      snap.u = grid.expand(state.u);
      if (two) snap.v = grid.expand(state.v);
      trace.snapshots.push_back(std::move(snap));
    }
  }

  if (feedback_bound) {
    const double span = trace.times.back() - trace.times.front();
    trace.feedback_time_bound = std::make_pair(bound_integral, span * bound_max);
    if (bound_integral > span * bound_max * (1.0 + 1e-12)) {
      throw std::logic_error("run: time-integrated feedback bound violated");
    }
  }
  return trace;
}

SimTrace run(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping, const Vector& initial_u,
             const SimConfig& config, const Forcing& forcing) {
  InitialData init;
  init.u = initial_u;
  if (model.field_count() == 2) init.v = Vector::Zero(initial_u.size());
  return run(model, grid, damping, init, config, forcing);
}

}  // namespace kdvstab
