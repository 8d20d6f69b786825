#include "kdvstab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kdvstab/error.hpp"

namespace kdvstab {

namespace pt = boost::property_tree;

std::string to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::sine: return "sine";
    case InitialKind::gaussian: return "gaussian";
    case InitialKind::random_modes: return "random_modes";
  }
  return "?";
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model", {"kind", "a1", "a2", "a3", "b2", "c", "r"}},
      {"grid", {"length", "cells"}},
      {"damping", {"kind", "omega", "floor", "profile"}},
      {"initial", {"kind", "amplitude", "seed", "mode", "power", "center", "width", "modes", "v_scale"}},
      {"sim", {"dt", "horizon", "snapshot_stride", "trace_cadence", "blowup_factor", "offcentering",
               "allow_large_dt"}},
      {"diagnostics", {"fit_window", "observability_mode", "observability_samples", "jmax", "carleman_psi",
                       "carleman_s0", "carleman_s_grid", "carleman_margin", "carleman_forcing_amplitude",
                       "carleman_forcing_frequency"}},
      {"output", {"dir"}},
      {"sweep", {"amplitudes"}},
  };
  return keys;
}

/// section.key -> 1-based line of its definition.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line;
  std::string section;
  for (int number = 1; std::getline(in, line); ++number) {
    boost::algorithm::trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = boost::algorithm::trim_copy(line.substr(1, line.size() - 2));
      lines.emplace(section, number);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    lines.emplace(section + "." + boost::algorithm::trim_copy(line.substr(0, eq)), number);
  }
  return lines;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::map<std::string, int> lines, std::string source)
      : tree_(tree), lines_(std::move(lines)), source_(std::move(source)) {}

  void fail(const std::string& path, const std::string& message) {
    std::string where = source_;
    if (auto it = lines_.find(path); it != lines_.end()) where += ":" + std::to_string(it->second);
    violations_.push_back(where + ": " + path + ": " + message);
  }

  std::optional<std::string> raw(const std::string& path) const {
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'))) {
      return boost::algorithm::trim_copy(*v);
    }
    return std::nullopt;
  }

  void number(const std::string& path, double& out) {
    if (auto v = raw(path)) {
      if (auto d = parse_double(*v)) {
        out = *d;
      } else {
        fail(path, "expected a number, got '" + *v + "'");
      }
    }
  }

  template <typename Int>
  void integer(const std::string& path, Int& out) {
    if (auto v = raw(path)) {
      Int value{};
      const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
      if (ec != std::errc() || end != v->data() + v->size()) {
        fail(path, "expected an integer, got '" + *v + "'");
      } else {
        out = value;
      }
    }
  }

  void boolean(const std::string& path, bool& out) {
    if (auto v = raw(path)) {
      if (*v == "true") {
        out = true;
      } else if (*v == "false") {
        out = false;
      } else {
        fail(path, "expected true or false, got '" + *v + "'");
      }
    }
  }

  void list(const std::string& path, std::vector<double>& out) {
    if (auto v = raw(path)) {
      std::vector<double> values;
      std::istringstream in(*v);
      std::string item;
      while (std::getline(in, item, ',')) {
        boost::algorithm::trim(item);
        if (auto d = parse_double(item)) {
          values.push_back(*d);
        } else {
          fail(path, "expected a comma separated list of numbers, got '" + *v + "'");
          return;
        }
      }
      out = std::move(values);
    }
  }

  template <typename Enum>
  void word(const std::string& path, Enum& out, const std::function<Enum(const std::string&)>& parse) {
    if (auto v = raw(path)) {
      try {
        out = parse(*v);
      } catch (const ConfigError& e) {
        fail(path, e.what());
      }
    }
  }

  /// Runs a validator and files its ConfigError under `path`.
  void check(const std::string& path, const std::function<void()>& validator) {
    try {
      validator();
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }

  std::vector<std::string>& violations() { return violations_; }

 private:
  static std::optional<double> parse_double(const std::string& s) {
    double value = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
  }

  const pt::ptree& tree_;
  std::map<std::string, int> lines_;
  std::string source_;
  std::vector<std::string> violations_;
};

ProfileKind parse_profile(const std::string& name) {
  if (name == "indicator") return ProfileKind::indicator;
  if (name == "bump") return ProfileKind::bump;
  throw ConfigError("unknown profile '" + name + "' (indicator, bump)");
}

InitialKind parse_initial_kind(const std::string& name) {
  if (name == "sine") return InitialKind::sine;
  if (name == "gaussian") return InitialKind::gaussian;
  if (name == "random_modes") return InitialKind::random_modes;
  throw ConfigError("unknown initial kind '" + name + "' (sine, gaussian, random_modes)");
}

std::string format(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string format(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format(v[i]);
  return out;
}

}  // namespace

DampingSpec ExperimentConfig::damping_spec(const Grid1D& grid) const { return damping_spec(grid, damping.kind); }

DampingSpec ExperimentConfig::damping_spec(const Grid1D& grid, DampingKind kind) const {
  if (kind == DampingKind::none) return DampingSpec::none();
  const OmegaWindow w = OmegaWindow::snap(grid, damping.l1, damping.l2);
  switch (kind) {
    case DampingKind::weak_g: return DampingSpec::weak_g(w);
    case DampingKind::h_minus_one: return DampingSpec::h_minus_one(grid, w);
    case DampingKind::multiplicative: return DampingSpec::multiplicative(grid, w, damping.floor, damping.profile);
    case DampingKind::none: break;
  }
  return DampingSpec::none();
}

InitialData ExperimentConfig::initial_data(const Grid1D& grid) const {
  const InitialSpec& ic = initial;
  Vector u(grid.node_count());
  switch (ic.kind) {
    case InitialKind::sine:
      for (int i = 0; i < grid.node_count(); ++i) {
        u(i) = ic.amplitude * std::pow(std::sin(ic.mode * std::numbers::pi * grid.node(i) / grid.length()), ic.power);
      }
      break;
    case InitialKind::gaussian: {
      const double c = ic.center < 0.0 ? 0.5 * grid.length() : ic.center;
      const double w = ic.width < 0.0 ? 0.1 * grid.length() : ic.width;
      for (int i = 0; i < grid.node_count(); ++i) {
        const double z = (grid.node(i) - c) / w;
        u(i) = ic.amplitude * std::exp(-z * z);
      }
      break;
    }
    case InitialKind::random_modes:
      u = ic.amplitude * random_modes(grid, ic.seed, ic.modes);
      break;
  }
  InitialData data;
  data.u = u;
  if (model.field_count() == 2) data.v = ic.v_scale * u;
  return data;
}

CarlemanConfig ExperimentConfig::carleman() const {
  CarlemanConfig c = CarlemanConfig::defaults(length);
  if (!diagnostics.carleman_psi.empty()) c.psi_coefficients = diagnostics.carleman_psi;
  c.s0 = diagnostics.carleman_s0;
  c.s_grid = diagnostics.carleman_s_grid.empty()
                 ? CarlemanConfig::log_spaced(diagnostics.carleman_s0, 4.0 * diagnostics.carleman_s0, 8)
                 : diagnostics.carleman_s_grid;
  c.time_margin = diagnostics.carleman_margin;
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigValidationError({source + ":" + std::to_string(e.line()) + ": " + e.message()});
  }
  const auto lines = key_lines(text);
  Reader r(tree, lines, source);

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (lines.count("." + section)) {
        r.fail(section, "key outside any section");
      } else {
        r.fail(section, "unknown section");
      }
      continue;
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) r.fail(section + "." + key, "unknown key");
    }
  }

  ExperimentConfig c;
  r.word<ModelKind>("model.kind", c.model.kind, parse_model_kind);
  r.number("model.a1", c.model.gg.a1);
  r.number("model.a2", c.model.gg.a2);
  r.number("model.a3", c.model.gg.a3);
  r.number("model.b2", c.model.gg.b2);
  r.number("model.c", c.model.gg.c);
  r.number("model.r", c.model.gg.r);

  r.number("grid.length", c.length);
  r.integer("grid.cells", c.cells);

  r.word<DampingKind>("damping.kind", c.damping.kind, parse_damping_kind);
  std::vector<double> omega{c.damping.l1, c.damping.l2};
  r.list("damping.omega", omega);
  r.number("damping.floor", c.damping.floor);
  r.word<ProfileKind>("damping.profile", c.damping.profile, parse_profile);

  r.word<InitialKind>("initial.kind", c.initial.kind, parse_initial_kind);
  r.number("initial.amplitude", c.initial.amplitude);
  r.integer("initial.seed", c.initial.seed);
  r.integer("initial.mode", c.initial.mode);
  r.integer("initial.power", c.initial.power);
  r.number("initial.center", c.initial.center);
  r.number("initial.width", c.initial.width);
  r.integer("initial.modes", c.initial.modes);
  r.number("initial.v_scale", c.initial.v_scale);

  c.sim.horizon = 10.0;
  c.sim.snapshot_stride = 200;
  r.number("sim.dt", c.sim.dt);
  r.number("sim.horizon", c.sim.horizon);
  r.integer("sim.snapshot_stride", c.sim.snapshot_stride);
  r.integer("sim.trace_cadence", c.sim.trace_cadence);
  r.number("sim.blowup_factor", c.sim.blowup_factor);
  r.number("sim.offcentering", c.sim.offcentering);
  r.boolean("sim.allow_large_dt", c.sim.allow_large_dt);

  auto& d = c.diagnostics;
  std::vector<double> window;
  r.list("diagnostics.fit_window", window);
  r.word<ObservationMode>("diagnostics.observability_mode", d.observability_mode, parse_observation_mode);
  r.integer("diagnostics.observability_samples", d.observability_samples);
  r.integer("diagnostics.jmax", d.jmax);
  r.list("diagnostics.carleman_psi", d.carleman_psi);
  r.number("diagnostics.carleman_s0", d.carleman_s0);
  r.list("diagnostics.carleman_s_grid", d.carleman_s_grid);
  r.number("diagnostics.carleman_margin", d.carleman_margin);
  r.number("diagnostics.carleman_forcing_amplitude", d.carleman_forcing_amplitude);
  r.number("diagnostics.carleman_forcing_frequency", d.carleman_forcing_frequency);

  if (auto dir = r.raw("output.dir")) c.output_dir = *dir;
  r.list("sweep.amplitudes", c.sweep_amplitudes);

  // Cross-field invariants, re-checked through each module's own validator.
  r.check("model", [&] { c.model.validate(); });
  std::optional<Grid1D> grid;
  r.check("grid", [&] {
    if (!(c.length > 0.0)) throw ConfigError("length must be positive");
    grid.emplace(c.length, c.cells);
  });
  if (omega.size() != 2) {
    r.fail("damping.omega", "expected two values l1, l2");
  } else {
    c.damping.l1 = omega[0];
    c.damping.l2 = omega[1];
    if (!(c.damping.l1 < c.damping.l2)) {
      r.fail("damping.omega", "need l1 < l2");
    } else if (!(c.damping.l1 >= 0.0 && c.damping.l2 <= c.length)) {
      r.fail("damping.omega", "window must lie inside [0, L]");
    } else if (grid) {
      r.check("damping", [&] { c.damping_spec(*grid).validate(*grid); });
    }
  }
  if (c.damping.kind == DampingKind::multiplicative && !(c.damping.floor > 0.0)) {
    r.fail("damping.floor", "multiplicative floor a0 must be positive");
  }
  if (c.initial.mode < 1) r.fail("initial.mode", "must be >= 1");
  if (c.initial.power < 1) r.fail("initial.power", "must be >= 1");
  if (c.initial.modes < 1) r.fail("initial.modes", "must be >= 1");
  if (c.initial.kind == InitialKind::gaussian && c.initial.width == 0.0) r.fail("initial.width", "must be nonzero");
  r.check("sim", [&] { c.sim.validate(); });
  if (!window.empty()) {
    if (window.size() != 2 || !(window[0] < window[1])) {
      r.fail("diagnostics.fit_window", "expected t_a, t_b with t_a < t_b");
    } else {
      d.fit_window = std::make_pair(window[0], window[1]);
    }
  }
  if (d.observability_samples < 1) r.fail("diagnostics.observability_samples", "must be >= 1");
  if (d.jmax < 1) r.fail("diagnostics.jmax", "must be >= 1");
  r.check("diagnostics", [&] { c.carleman().validate(); });
  if (c.output_dir.empty()) r.fail("output.dir", "must not be empty");
  for (double a : c.sweep_amplitudes) {
    if (!(a > 0.0)) r.fail("sweep.amplitudes", "amplitudes must be positive");
  }

  if (!r.violations().empty()) throw ConfigValidationError(std::move(r.violations()));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigValidationError({path + ": cannot open"});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& gg = c.model.gg;
  out << "[model]\nkind = " << to_string(c.model.kind) << "\na1 = " << format(gg.a1) << "\na2 = " << format(gg.a2)
      << "\na3 = " << format(gg.a3) << "\nb2 = " << format(gg.b2) << "\nc = " << format(gg.c)
      << "\nr = " << format(gg.r) << "\n\n";
  out << "[grid]\nlength = " << format(c.length) << "\ncells = " << c.cells << "\n\n";
  out << "[damping]\nkind = " << to_string(c.damping.kind) << "\nomega = " << format(c.damping.l1) << ", "
      << format(c.damping.l2) << "\nfloor = " << format(c.damping.floor)
      << "\nprofile = " << (c.damping.profile == ProfileKind::bump ? "bump" : "indicator") << "\n\n";
  const auto& ic = c.initial;
  out << "[initial]\nkind = " << to_string(ic.kind) << "\namplitude = " << format(ic.amplitude)
      << "\nseed = " << ic.seed << "\nmode = " << ic.mode << "\npower = " << ic.power
      << "\ncenter = " << format(ic.center) << "\nwidth = " << format(ic.width) << "\nmodes = " << ic.modes
      << "\nv_scale = " << format(ic.v_scale) << "\n\n";
  const auto& s = c.sim;
  out << "[sim]\ndt = " << format(s.dt) << "\nhorizon = " << format(s.horizon)
      << "\nsnapshot_stride = " << s.snapshot_stride << "\ntrace_cadence = " << s.trace_cadence
      << "\nblowup_factor = " << format(s.blowup_factor) << "\noffcentering = " << format(s.offcentering)
      << "\nallow_large_dt = " << (s.allow_large_dt ? "true" : "false") << "\n\n";
  const auto& d = c.diagnostics;
  out << "[diagnostics]\n";
  if (d.fit_window) out << "fit_window = " << format(d.fit_window->first) << ", " << format(d.fit_window->second) << "\n";
  out << "observability_mode = " << to_string(d.observability_mode)
      << "\nobservability_samples = " << d.observability_samples << "\njmax = " << d.jmax << "\n";
  if (!d.carleman_psi.empty()) out << "carleman_psi = " << format(d.carleman_psi) << "\n";
  out << "carleman_s0 = " << format(d.carleman_s0) << "\n";
  if (!d.carleman_s_grid.empty()) out << "carleman_s_grid = " << format(d.carleman_s_grid) << "\n";
  out << "carleman_margin = " << format(d.carleman_margin)
      << "\ncarleman_forcing_amplitude = " << format(d.carleman_forcing_amplitude)
      << "\ncarleman_forcing_frequency = " << format(d.carleman_forcing_frequency) << "\n\n";
  out << "[output]\ndir = " << c.output_dir << "\n";
  if (!c.sweep_amplitudes.empty()) out << "\n[sweep]\namplitudes = " << format(c.sweep_amplitudes) << "\n";
  return out.str();
}

}  // namespace kdvstab
