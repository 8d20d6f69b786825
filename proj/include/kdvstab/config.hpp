#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kdvstab/diagnostics.hpp"

namespace kdvstab {

enum class InitialKind { sine, gaussian, random_modes };

std::string to_string(InitialKind kind);

/// u0(x) on the grid; v0 = v_scale * u0 for two-field models.
struct InitialSpec {
  InitialKind kind = InitialKind::sine;
  double amplitude = 1.0;
  std::uint64_t seed = 0;
  int mode = 1;         ///< sine: A sin^power(mode pi x / L)
  int power = 1;
  double center = -1.0;  ///< gaussian: A exp(-((x - center) / width)^2); negative means L/2
  double width = -1.0;   ///< negative means L/10
  int modes = 10;       ///< random_modes: number of sine modes
  double v_scale = 1.0;
};

struct DampingSettings {
  DampingKind kind = DampingKind::weak_g;
  double l1 = 1.0;
  double l2 = 2.0;
  double floor = 1.0;
  ProfileKind profile = ProfileKind::indicator;
};

struct DiagnosticSettings {
  std::optional<std::pair<double, double>> fit_window;
  ObservationMode observability_mode = ObservationMode::interior;
  int observability_samples = 32;
  int jmax = 3;
  std::vector<double> carleman_psi;  ///< empty: the default psi for L
  double carleman_s0 = 1.0;
  std::vector<double> carleman_s_grid;  ///< empty: 8 log-spaced points on [s0, 4 s0]
  double carleman_margin = 0.05;
  double carleman_forcing_amplitude = 1.0;
  double carleman_forcing_frequency = 3.0;
};

/// Everything one invocation needs, after validation.
struct ExperimentConfig {
  ModelSpec model;
  double length = 3.0;
  int cells = 256;
  DampingSettings damping;
  InitialSpec initial;
  SimConfig sim;
  DiagnosticSettings diagnostics;
  std::string output_dir = "out";
  std::vector<double> sweep_amplitudes;

  Grid1D grid() const { return Grid1D(length, cells); }
  /// The configured mechanism on `grid`.
  DampingSpec damping_spec(const Grid1D& grid) const;
  /// Same window and parameters with a different mechanism.
  DampingSpec damping_spec(const Grid1D& grid, DampingKind kind) const;
  InitialData initial_data(const Grid1D& grid) const;
  CarlemanConfig carleman() const;
};

/// Parses the INI-style grammar:
///
///   # comment
///   [section]
///   key = value          ; numbers, words, true/false
///   key = 1.0, 2.0       ; lists are comma separated
///
/// Sections: model, grid, damping, initial, sim, diagnostics, output, sweep.
/// Unknown sections or keys are errors. All violations are collected and
/// thrown together as ConfigValidationError, each prefixed with its line.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Effective values of every key, in the file grammar.
std::string render_config(const ExperimentConfig& config);

}  // namespace kdvstab
