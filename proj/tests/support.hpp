#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "kdvstab/timestepper.hpp"

namespace kdvstab::testing {

inline Vector sample(const Grid1D& grid, const std::function<double(double)>& f) {
  Vector v(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) v(i) = f(grid.node(i));
  return v;
}

inline Vector sample_interior(const Grid1D& grid, const std::function<double(double)>& f) {
  return grid.restrict_interior(sample(grid, f));
}

/// sin^3(pi x / L): zero with vanishing first and second derivative at both ends.
inline Vector sine_cubed(const Grid1D& grid, double amplitude = 1.0) {
  const double k = std::numbers::pi / grid.length();
  return sample(grid, [&](double x) { return amplitude * std::pow(std::sin(k * x), 3); });
}

/// Relative L2-in-time residual of dE/dt + D + B, with dE/dt by differences
/// and D, B averaged over each interval.
inline double identity_residual(const SimTrace& tr) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
    const double h = tr.times[k + 1] - tr.times[k];
    const double rate =
        0.5 * (tr.diss_damping[k] + tr.diss_damping[k + 1] + tr.diss_boundary[k] + tr.diss_boundary[k + 1]);
    const double r = (tr.energy[k + 1] - tr.energy[k]) / h + rate;
    num += h * r * r;
    den += h * rate * rate;
  }
  return std::sqrt(num / den);
}

/// Largest E_{k+1} - E_k relative to E_0.
inline double max_energy_increase(const SimTrace& tr) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) worst = std::max(worst, tr.energy[k + 1] - tr.energy[k]);
  return worst / tr.energy.front();
}

}  // namespace kdvstab::testing
