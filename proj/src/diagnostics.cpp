#include "kdvstab/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include <Eigen/LU>

#include "kdvstab/random.hpp"

namespace kdvstab {

DecayFit fit_decay(const SimTrace& trace, double t_begin, double t_end) {
  if (trace.size() == 0) throw ConfigError("fit_decay: empty trace");
  if (!(t_begin < t_end) || t_end > trace.times.back() * (1.0 + 1e-12) || t_begin < trace.times.front()) {
    throw ConfigError("fit_decay: window must satisfy t_a < t_b inside the trace range");
  }
  const double e0 = trace.energy.front();
  if (!(e0 > 0.0)) throw DiagnosticDomainError("fit_decay: initial energy must be positive");
  const double norm0 = std::sqrt(2.0 * e0);

  std::vector<double> ts;
  std::vector<double> ys;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double t = trace.times[k];
    if (t < t_begin - 1e-12 || t > t_end + 1e-12) continue;
    if (!(trace.energy[k] > 0.0)) {
      throw DiagnosticDomainError("fit_decay: nonpositive energy at t = " + std::to_string(t));
    }
    ts.push_back(t);
    ys.push_back(0.5 * std::log(2.0 * trace.energy[k]));
  }
  if (ts.size() < 10) throw ConfigError("fit_decay: fit window holds fewer than 10 samples");

  const double n = static_cast<double>(ts.size());
  double tm = 0.0;
  double ym = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0;
  double sty = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - tm) * (ts[i] - tm);
    sty += (ts[i] - tm) * (ys[i] - ym);
    syy += (ys[i] - ym) * (ys[i] - ym);
  }
  const double slope = sty / stt;
  const double intercept = ym - slope * tm;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ys[i] - (intercept + slope * ts[i]);
    ss_res += r * r;
  }

  DecayFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept) / norm0;
  // A flat series is fitted exactly.
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.t_begin = t_begin;
  fit.t_end = t_end;
  fit.samples = ts.size();
  return fit;
}

DecayFit fit_decay(const SimTrace& trace) {
  if (trace.size() == 0) throw ConfigError("fit_decay: empty trace");
  const double horizon = trace.times.back();
  return fit_decay(trace, horizon / 6.0, horizon);
}

std::string to_string(ObservationMode mode) { return mode == ObservationMode::interior ? "interior" : "boundary"; }

ObservationMode parse_observation_mode(const std::string& name) {
  if (name == "interior") return ObservationMode::interior;
  if (name == "boundary") return ObservationMode::boundary;
  throw ConfigError("unknown observability mode '" + name + "'");
}

ObservabilityResult observability_quotient(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping,
                                           const Vector& u0, const SimConfig& config, ObservationMode mode) {
  if (mode == ObservationMode::interior && damping.kind != DampingKind::weak_g) {
    throw ConfigError("observability: interior mode needs weak_g damping");
  }
  if (mode == ObservationMode::boundary && (model.kind != ModelKind::kdv_linear || damping.kind != DampingKind::none)) {
    throw ConfigError("observability: boundary mode needs kdv_linear without damping");
  }
  if (model.field_count() != 1) throw ConfigError("observability: single-field models only");
  const Vector projected = grid.expand(project_initial(grid, u0));
  const double norm2 = quadrature(grid, projected.cwiseAbs2());
  if (!(norm2 > 0.0)) throw ConfigError("observability: initial data must be nonzero");

  const SimTrace trace = run(model, grid, damping, projected, config);
  double observed = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double h = trace.times[k] - trace.times[k - 1];
    const double a = mode == ObservationMode::interior ? trace.diss_damping[k - 1]
                                                        : trace.ux0[k - 1] * trace.ux0[k - 1];
    const double b = mode == ObservationMode::interior ? trace.diss_damping[k] : trace.ux0[k] * trace.ux0[k];
    observed += 0.5 * h * (a + b);
  }
  ObservabilityResult result;
  if (observed < 1e-14 * norm2) {
    result.quotient = std::numeric_limits<double>::infinity();
    result.unobservable = true;
  } else {
    result.quotient = norm2 / observed;
  }
  return result;
}

Vector random_modes(const Grid1D& grid, std::uint64_t seed, int modes) {
  if (modes < 1) throw ConfigError("random_modes: need at least one mode");
  CounterRng rng(seed);
  Vector coeff(modes);
  for (int j = 0; j < modes; ++j) coeff(j) = rng.normal();
  Vector u = Vector::Zero(grid.node_count());
  for (int i = 1; i < grid.cells(); ++i) {
    const double x = grid.node(i);
    double acc = 0.0;
    for (int j = 0; j < modes; ++j) acc += coeff(j) * std::sin((j + 1) * std::numbers::pi * x / grid.length());
    u(i) = acc;
  }
  const double norm = std::sqrt(quadrature(grid, u.cwiseAbs2()));
  if (!(norm > 0.0)) throw DiagnosticDomainError("random_modes: degenerate draw");
  return u / norm;
}

ObservabilityReport observability_ensemble(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping,
                                           const SimConfig& config, ObservationMode mode, int samples,
                                           std::uint64_t base_seed, int workers) {
  if (samples < 1) throw ConfigError("observability: ensemble size must be >= 1");
  ObservabilityReport report;
  report.mode = mode;
  report.seed = base_seed;
  report.sample_seeds.resize(static_cast<std::size_t>(samples));
  report.quotients.resize(static_cast<std::size_t>(samples));
  report.unobservable.resize(static_cast<std::size_t>(samples));
  std::vector<ObservabilityResult> results(static_cast<std::size_t>(samples));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(samples));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int j = next++; j < samples; j = next++) {
      const auto idx = static_cast<std::size_t>(j);
      try {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(j);
        report.sample_seeds[idx] = seed;
        results[idx] = observability_quotient(model, grid, damping, random_modes(grid, seed), config, mode);
      } catch (...) {
        errors[idx] = std::current_exception();
      }
    }
  };
  int pool = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  pool = std::min(pool, samples);
  std::vector<std::thread> threads;
  for (int w = 1; w < pool; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  report.estimate = 0.0;
  for (std::size_t j = 0; j < results.size(); ++j) {
    report.quotients[j] = results[j].quotient;
    report.unobservable[j] = results[j].unobservable;
    report.estimate = std::max(report.estimate, results[j].quotient);
  }
  return report;
}

std::vector<double> critical_lengths(int j_max) {
  if (j_max < 1) throw ConfigError("critical_lengths: j_max must be >= 1");
  std::vector<double> out;
  for (int j = 1; j <= j_max; ++j) {
    for (int l = j; l <= j_max; ++l) {
      out.push_back(2.0 * std::numbers::pi * std::sqrt((j * j + l * l + j * l) / 3.0));
    }
  }
  std::sort(out.begin(), out.end());
  std::vector<double> unique;
  for (double v : out) {
    if (unique.empty() || v - unique.back() > 1e-12) unique.push_back(v);
  }
  return unique;
}

bool is_critical(double length, double tol) {
  if (!(tol > 0.0)) throw ConfigError("is_critical: tolerance must be positive");
  // Every value with l > j_max exceeds 2 pi l / sqrt(3) > length + tol.
  const int j_max = static_cast<int>(std::ceil((length + tol) * std::sqrt(3.0) / (2.0 * std::numbers::pi))) + 1;
  for (double v : critical_lengths(std::max(1, j_max))) {
    if (std::abs(v - length) <= tol) return true;
  }
  return false;
}

CarlemanConfig CarlemanConfig::defaults(double length) {
  CarlemanConfig c;
  c.psi_coefficients = {1.0, 1.0 / length, -1.0 / (length * length)};
  c.s0 = 1.0;
  c.s_grid = log_spaced(1.0, 4.0, 8);
  return c;
}

std::vector<double> CarlemanConfig::log_spaced(double lo, double hi, int count) {
  std::vector<double> out;
  if (count == 1) return {lo};
  for (int i = 0; i < count; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  out.back() = hi;
  return out;
}

void CarlemanConfig::validate() const {
  if (psi_coefficients.empty()) throw ConfigError("carleman: psi needs at least one coefficient");
  if (!(s0 > 0.0)) throw ConfigError("carleman: s0 must be positive");
  if (s_grid.empty()) throw ConfigError("carleman: s-grid is empty");
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    if (s_grid[i] < s0 * (1.0 - 1e-12)) throw ConfigError("carleman: s-grid values must be >= s0");
    if (i > 0 && !(s_grid[i] > s_grid[i - 1])) throw ConfigError("carleman: s-grid must be ascending");
  }
  if (!(time_margin > 0.0 && time_margin < 0.5)) throw ConfigError("carleman: time margin must lie in (0, 1/2)");
}

double CarlemanConfig::psi(double x) const {
  double acc = 0.0;
  for (auto it = psi_coefficients.rbegin(); it != psi_coefficients.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Vector CarlemanConfig::sample_psi(const Grid1D& grid) const {
  Vector p(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) p(i) = psi(grid.node(i));
  return p;
}

namespace {

// First and second derivative at every node: centered in the interior,
// one-sided second order at the ends.
std::pair<Vector, Vector> node_derivatives(const Grid1D& grid, const Vector& q) {
  const int n = grid.cells();
  const double dx = grid.spacing();
  Vector d1(n + 1);
  Vector d2(n + 1);
  for (int i = 1; i < n; ++i) {
    d1(i) = (q(i + 1) - q(i - 1)) / (2.0 * dx);
    d2(i) = (q(i + 1) - 2.0 * q(i) + q(i - 1)) / (dx * dx);
  }
  d1(0) = boundary_derivative(grid, q, Side::left, 1);
  d1(n) = boundary_derivative(grid, q, Side::right, 1);
  d2(0) = boundary_derivative(grid, q, Side::left, 2);
  d2(n) = boundary_derivative(grid, q, Side::right, 2);
  return {d1, d2};
}

}  // namespace

double carleman_ratio(const Grid1D& grid, const SimTrace& q_trace, const std::vector<Vector>& forcing,
                      const CarlemanConfig& config, double s) {
  config.validate();
  if (!(s > 0.0)) throw ConfigError("carleman: s must be positive");
  if (forcing.size() != q_trace.snapshots.size()) {
    throw ConfigError("carleman: forcing must be sampled at every snapshot");
  }
  const double horizon = q_trace.snapped_horizon;
  const double t_lo = config.time_margin * horizon;
  const double t_hi = (1.0 - config.time_margin) * horizon;
  const Vector psi = config.sample_psi(grid);
  if (psi.minCoeff() <= 0.0) throw ConfigError("carleman: psi must be positive on the nodes");
  const Vector w = trapezoid_weights(grid);

  std::vector<double> times;
  std::vector<double> lhs_t;
  std::vector<double> rhs_t;
  for (std::size_t k = 0; k < q_trace.snapshots.size(); ++k) {
    const Snapshot& snap = q_trace.snapshots[k];
    const double t = snap.time;
    if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
    const auto [qx, qxx] = node_derivatives(grid, snap.u);
    const double inv = 1.0 / (t * (horizon - t));
    double lhs = 0.0;
    double rhs = 0.0;
    for (int i = 0; i < grid.node_count(); ++i) {
      const double sphi = s * psi(i) * inv;
      const double expo = -2.0 * sphi;
      if (expo < config.exponent_clamp) continue;
      const double weight = std::exp(expo);
      const double q = snap.u(i);
      lhs += w(i) * weight *
             (sphi * qxx(i) * qxx(i) + std::pow(sphi, 3) * qx(i) * qx(i) + std::pow(sphi, 5) * q * q);
      rhs += w(i) * weight * forcing[k](i) * forcing[k](i);
    }
    times.push_back(t);
    lhs_t.push_back(lhs);
    rhs_t.push_back(rhs);
  }
  if (times.size() < 2) throw ConfigError("carleman: fewer than two snapshots inside the time window");
  const double spacing = times[1] - times[0];
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = times[k] - times[k - 1];
    if (std::abs(h - q_trace.dt) > 1e-9 * q_trace.dt || std::abs(h - spacing) > 1e-9 * spacing) {
      throw ConfigError("carleman: trace needs a snapshot at every step inside the time window");
    }
    lhs += 0.5 * h * (lhs_t[k] + lhs_t[k - 1]);
    rhs += 0.5 * h * (rhs_t[k] + rhs_t[k - 1]);
  }
  if (!(rhs >= 1e-300)) {
    throw DiagnosticDomainError("carleman: weighted forcing integral below 1e-300, ratio undefined");
  }
  return lhs / rhs;
}

std::vector<std::pair<double, double>> carleman_curve(const Grid1D& grid, const SimTrace& q_trace,
                                                      const std::vector<Vector>& forcing,
                                                      const CarlemanConfig& config) {
  config.validate();
  std::vector<std::pair<double, double>> curve;
  for (double s : config.s_grid) curve.emplace_back(s, carleman_ratio(grid, q_trace, forcing, config, s));
  return curve;
}

bool PsiReport::all_hold() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionStatus& c) { return c.holds; });
}

const ConditionStatus& PsiReport::find(const std::string& name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("PsiReport: no condition named " + name);
}

namespace {

// Weights of the derivative of the given order on integer offsets (in units
// of dx), from the Taylor moment conditions.
Vector stencil_weights(const std::vector<int>& offsets, int order) {
  const int m = static_cast<int>(offsets.size());
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  double factorial = 1.0;
  for (int p = 0; p < m; ++p) {
    if (p > 0) factorial *= p;
    for (int j = 0; j < m; ++j) a(p, j) = std::pow(offsets[static_cast<std::size_t>(j)], p) / factorial;
  }
  b(order) = 1.0;
  return a.fullPivLu().solve(b);
}

// Derivative of the given order at every node: centered where the stencil
// fits, shifted toward the interior otherwise.
Vector sampled_derivative(const Vector& f, double dx, int order) {
  const int n = static_cast<int>(f.size()) - 1;
  const int points = order == 1 ? 3 : (order == 2 ? 4 : 5);
  Vector d(n + 1);
  for (int i = 0; i <= n; ++i) {
    std::vector<int> offsets;
    const int half = order == 3 ? 2 : 1;
    if (i - half >= 0 && i + half <= n) {
      for (int o = -half; o <= half; ++o) offsets.push_back(o);
    } else {
      const int start = i - half < 0 ? -i : n - i - (points - 1);
      for (int o = 0; o < points; ++o) offsets.push_back(start + o);
    }
    const Vector wts = stencil_weights(offsets, order);
    double acc = 0.0;
    for (std::size_t j = 0; j < offsets.size(); ++j) acc += wts(static_cast<Eigen::Index>(j)) * f(i + offsets[j]);
    d(i) = acc / std::pow(dx, order);
  }
  return d;
}

ConditionStatus pointwise(const std::string& name, const Vector& values, double tol, bool positive) {
  ConditionStatus st;
  st.name = name;
  for (int i = 0; i < values.size(); ++i) {
    const bool ok = positive ? values(i) > tol : values(i) < -tol;
    if (!ok) {
      st.holds = false;
      st.witness_node = i;
      return st;
    }
  }
  return st;
}

}  // namespace

PsiReport validate_psi(const CarlemanConfig& config, const Grid1D& grid) {
  if (config.psi_coefficients.empty()) throw ConfigError("validate_psi: psi has no coefficients");
  const Vector psi = config.sample_psi(grid);
  const double dx = grid.spacing();
  const double length = grid.length();
  const double scale = std::max(psi.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  auto tol = [&](int order) { return 1e-8 * scale / std::pow(length, order); };

  const Vector d1 = sampled_derivative(psi, dx, 1);
  const Vector d2 = sampled_derivative(psi, dx, 2);
  const Vector d3 = sampled_derivative(psi, dx, 3);
  const int n = grid.cells();

  PsiReport report;
  report.conditions.push_back(pointwise("psi>0", psi, 0.0, true));

  ConditionStatus slope;
  slope.name = "|psi'|>0";
  for (int i = 0; i <= n; ++i) {
    // A sign change between neighbours hides a zero of psi'.
    const bool vanishes = std::abs(d1(i)) <= tol(1);
    const bool flips = i > 0 && d1(i) * d1(i - 1) < 0.0;
    if (vanishes || flips) {
      slope.holds = false;
      slope.witness_node = i;
      break;
    }
  }
  report.conditions.push_back(slope);
  report.conditions.push_back(pointwise("psi''<0", d2, tol(2), false));
  report.conditions.push_back(pointwise("psi'psi'''<0", d1.cwiseProduct(d3), tol(4), false));

  ConditionStatus left;
  left.name = "psi'(0)<0";
  if (!(d1(0) < -tol(1))) {
    left.holds = false;
    left.witness_node = 0;
  }
  report.conditions.push_back(left);
  ConditionStatus right;
  right.name = "psi'(L)>0";
  if (!(d1(n) > tol(1))) {
    right.holds = false;
    right.witness_node = n;
  }
  report.conditions.push_back(right);

  ConditionStatus ends;
  ends.name = "max at both ends";
  const double top = psi.maxCoeff();
  const double slack = 1e-12 * scale;
  if (psi(0) < top - slack) {
    ends.holds = false;
    ends.witness_node = 0;
  } else if (psi(n) < top - slack) {
    ends.holds = false;
    ends.witness_node = n;
  }
  report.conditions.push_back(ends);
  return report;
}

double flatness_on_omega(const Grid1D& grid, const SimTrace& trace, const OmegaWindow& window) {
  if (trace.snapshots.empty()) throw ConfigError("flatness_on_omega: trace has no snapshots");
  double sup = 0.0;
  for (const auto& snap : trace.snapshots) {
    const Vector g = apply_weak_g(grid, window, snap.u);
    sup = std::max(sup, std::sqrt(quadrature(grid, g.cwiseAbs2(), window)));
  }
  return sup;
}

}  // namespace kdvstab
