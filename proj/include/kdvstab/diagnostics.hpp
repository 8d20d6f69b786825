#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kdvstab/timestepper.hpp"

namespace kdvstab {

// ---------------------------------------------------------------------------
// Decay fitting
// ---------------------------------------------------------------------------

/// Envelope ||u(t)|| ~ C exp(-k t) ||u0|| fitted on [t_begin, t_end].
struct DecayFit {
  double amplitude = 0.0;  ///< C
  double rate = 0.0;       ///< k
  double r_squared = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t samples = 0;
};

/// Least-squares line through log sqrt(2E) against t.
DecayFit fit_decay(const SimTrace& trace, double t_begin, double t_end);
/// Default window [T/6, T].
DecayFit fit_decay(const SimTrace& trace);

// ---------------------------------------------------------------------------
// Observability
// ---------------------------------------------------------------------------

enum class ObservationMode { interior, boundary };

std::string to_string(ObservationMode mode);
ObservationMode parse_observation_mode(const std::string& name);

struct ObservabilityResult {
  double quotient = 0.0;
  bool unobservable = false;  ///< observed integral negligible; quotient is +inf
};

/// Q = ||u0||^2 / int_0^T |observed|^2 dt with observed = ||Gu(t)|| (interior,
/// weak_g damping) or u_x(0, t) (boundary, undamped kdv_linear).
ObservabilityResult observability_quotient(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping,
                                           const Vector& u0, const SimConfig& config, ObservationMode mode);

struct ObservabilityReport {
  ObservationMode mode = ObservationMode::interior;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> sample_seeds;
  std::vector<double> quotients;
  std::vector<bool> unobservable;
  double estimate = 0.0;  ///< max over samples

  std::size_t size() const { return quotients.size(); }
};

/// Sum of the first `modes` sine modes sin(j pi x / L) with standard normal
/// coefficients drawn from CounterRng(seed), endpoints zeroed, normalized to
/// unit trapezoid L2 norm.
Vector random_modes(const Grid1D& grid, std::uint64_t seed, int modes = 10);

/// Runs `samples` members with seeds base_seed + j on up to `workers` threads.
ObservabilityReport observability_ensemble(const ModelSpec& model, const Grid1D& grid, const DampingSpec& damping,
                                           const SimConfig& config, ObservationMode mode, int samples,
                                           std::uint64_t base_seed, int workers = 0);

// ---------------------------------------------------------------------------
// Critical lengths
// ---------------------------------------------------------------------------

/// All 2 pi sqrt((j^2 + l^2 + j l) / 3), 1 <= j <= l <= j_max, ascending.
std::vector<double> critical_lengths(int j_max);
bool is_critical(double length, double tol);

// ---------------------------------------------------------------------------
// Carleman weight and unique-continuation diagnostics
// ---------------------------------------------------------------------------

struct CarlemanConfig {
  std::vector<double> psi_coefficients;  ///< psi(x) = sum_k c_k x^k
  double s0 = 1.0;
  std::vector<double> s_grid;
  double exponent_clamp = -700.0;  ///< exp(e) := 0 for e below this
  double time_margin = 0.05;       ///< fraction of T dropped at each end

  /// psi = 1 + x (L - x) / L^2, s in 8 log-spaced points over [1, 4].
  static CarlemanConfig defaults(double length);
  static std::vector<double> log_spaced(double lo, double hi, int count);

  void validate() const;
  double psi(double x) const;
  Vector sample_psi(const Grid1D& grid) const;
};

/// Ratio of the weighted space-time integrals
///   int int [s phi q_xx^2 + (s phi)^3 q_x^2 + (s phi)^5 q^2] e^{-2 s phi}
///   ---------------------------------------------------------------------
///   int int f^2 e^{-2 s phi}
/// with phi = psi(x) / (t (T - t)), over snapshots inside the time margin.
/// `forcing` holds f on all nodes at each snapshot time of the trace.
double carleman_ratio(const Grid1D& grid, const SimTrace& q_trace, const std::vector<Vector>& forcing,
                      const CarlemanConfig& config, double s);

/// carleman_ratio at every point of config.s_grid.
std::vector<std::pair<double, double>> carleman_curve(const Grid1D& grid, const SimTrace& q_trace,
                                                      const std::vector<Vector>& forcing,
                                                      const CarlemanConfig& config);

struct ConditionStatus {
  std::string name;
  bool holds = true;
  std::optional<int> witness_node;  ///< first node where the condition fails
};

struct PsiReport {
  std::vector<ConditionStatus> conditions;
  bool all_hold() const;
  const ConditionStatus& find(const std::string& name) const;
};

/// Checks psi > 0, |psi'| > 0, psi'' < 0, psi' psi''' < 0 on the nodes,
/// psi'(0) < 0, psi'(L) > 0, and max psi attained at both ends. Derivatives
/// come from finite-difference stencils on the sampled values.
PsiReport validate_psi(const CarlemanConfig& config, const Grid1D& grid);

/// sup over snapshots of ||u - mean_omega(u)|| in the window L2 norm.
double flatness_on_omega(const Grid1D& grid, const SimTrace& trace, const OmegaWindow& window);

}  // namespace kdvstab
