#include "kdvstab/cli.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "kdvstab/error.hpp"

#ifndef KDVSTAB_VERSION
#define KDVSTAB_VERSION "0.0.0"
#endif

namespace kdvstab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return KDVSTAB_VERSION; }

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, result.ptr);
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_double(v);
    first = false;
  }
  out << '\n';
}

void write_json(const std::string& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_trace_csv(const std::string& path, const SimTrace& trace) {
  auto out = open_output(path);
  out << kTraceHeader << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    write_row(out, {trace.times[k], trace.energy[k], trace.diss_damping[k], trace.diss_boundary[k], trace.mass[k],
                    trace.ux0[k], trace.linf[k]});
  }
}

void write_snapshots_csv(const std::string& path, const Grid1D& grid, const SimTrace& trace) {
  auto out = open_output(path);
  out << (trace.two_fields ? "t,x,u,v" : "t,x,u") << '\n';
  for (const auto& snap : trace.snapshots) {
    for (int i = 0; i < grid.node_count(); ++i) {
      if (trace.two_fields) {
        write_row(out, {snap.time, grid.node(i), snap.u(i), snap.v(i)});
      } else {
        write_row(out, {snap.time, grid.node(i), snap.u(i)});
      }
    }
  }
}

SimTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trace " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ConfigError(path + ": expected header '" + std::string(kTraceHeader) + "'");
  }
  SimTrace tr;
  std::vector<double>* columns[] = {&tr.times, &tr.energy, &tr.diss_damping, &tr.diss_boundary,
                                    &tr.mass,  &tr.ux0,    &tr.linf};
  for (int number = 2; std::getline(in, line); ++number) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 7) throw ConfigError(path + ":" + std::to_string(number) + ": expected 7 columns");
    for (int c = 0; c < 7; ++c) {
      double v = 0.0;
      const auto& s = cells[c];
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || end != s.data() + s.size()) {
        throw ConfigError(path + ":" + std::to_string(number) + ": bad number '" + s + "'");
      }
      columns[c]->push_back(v);
    }
  }
  if (tr.size() >= 2) tr.dt = tr.times[1] - tr.times[0];
  if (tr.size()) tr.snapped_horizon = tr.times.back();
  tr.steps = tr.size() ? static_cast<int>(tr.size()) - 1 : 0;
  return tr;
}

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 0;
  bool quiet = false;
  int jmax = 0;
  std::string trace_path;
  std::optional<double> t_begin;
  std::optional<double> t_end;
};

/// Typed view of the rendered config for the JSON echo.
json config_json(const ExperimentConfig& config) {
  json doc = json::object();
  std::istringstream in(render_config(config));
  std::string line;
  std::string section;
  auto as_number = [](const std::string& s, double& v) {
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && end == s.data() + s.size();
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      doc[section] = json::object();
      continue;
    }
    const auto eq = line.find(" = ");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    double v = 0.0;
    if (value == "true" || value == "false") {
      doc[section][key] = value == "true";
    } else if (as_number(value, v)) {
      std::uint64_t n = 0;
      const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec == std::errc() && end == value.data() + value.size()) {
        doc[section][key] = n;
      } else {
        doc[section][key] = v;
      }
    } else if (value.find(", ") != std::string::npos) {
      json list = json::array();
      std::istringstream items(value);
      std::string item;
      bool numeric = true;
      while (std::getline(items, item, ',')) {
        if (!item.empty() && item.front() == ' ') item.erase(0, 1);
        if (!as_number(item, v)) numeric = false;
        list.push_back(v);
      }
      doc[section][key] = numeric ? list : json(value);
    } else {
      doc[section][key] = value;
    }
  }
  return doc;
}

class Session {
 public:
  Session(std::string command, const Options& opts, std::ostream& log)
      : command_(std::move(command)), opts_(opts), log_(log), start_(std::chrono::steady_clock::now()) {}

  void load(bool required) {
    if (!opts_.config_path.empty()) {
      config_ = load_config(opts_.config_path);
    } else if (required) {
      throw ConfigError(command_ + ": --config is required");
    }
    if (opts_.seed) config_.initial.seed = *opts_.seed;
    if (!opts_.out_dir.empty()) config_.output_dir = opts_.out_dir;
    fs::create_directories(config_.output_dir);
  }

  const ExperimentConfig& config() const { return config_; }
  std::string path(const std::string& name) const { return (fs::path(config_.output_dir) / name).string(); }
  int workers() const {
    if (opts_.workers > 0) return opts_.workers;
    return std::max(1u, std::thread::hardware_concurrency());
  }
  void note(const std::string& msg) const {
    if (!opts_.quiet) log_ << msg << '\n';
  }

  json summary() const {
    json doc;
    doc["command"] = command_;
    doc["version"] = version_string();
    doc["config"] = config_json(config_);
    return doc;
  }

  void finish(json doc) const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc["wall_clock_seconds"] = secs;
    write_json(path("summary.json"), doc);
  }

 private:
  std::string command_;
  Options opts_;
  std::ostream& log_;
  ExperimentConfig config_;
  std::chrono::steady_clock::time_point start_;
};

DecayFit fit_for(const ExperimentConfig& config, const SimTrace& trace) {
  if (config.diagnostics.fit_window) {
    return fit_decay(trace, config.diagnostics.fit_window->first, config.diagnostics.fit_window->second);
  }
  return fit_decay(trace);
}

json fit_json(const DecayFit& fit) {
  return json{{"amplitude", fit.amplitude}, {"rate", fit.rate},       {"r_squared", fit.r_squared},
              {"t_begin", fit.t_begin},     {"t_end", fit.t_end},     {"samples", fit.samples}};
}

json trace_json(const SimTrace& trace) {
  json doc;
  doc["snapped_horizon"] = trace.snapped_horizon;
  doc["dt"] = trace.dt;
  doc["steps"] = trace.steps;
  doc["samples"] = trace.size();
  doc["energy_initial"] = trace.energy.front();
  doc["energy_final"] = trace.energy.back();
  doc["warnings"] = trace.warnings;
  if (trace.feedback_time_bound) {
    doc["feedback_time_bound"] = {{"integral", trace.feedback_time_bound->first},
                                  {"bound", trace.feedback_time_bound->second}};
  }
  return doc;
}

/// Runs jobs 0..count-1 on a small pool; the first exception wins.
void parallel_for(int count, int workers, const std::function<void(int)>& job) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, count); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int simulate(Session& s) {
  s.load(true);
  const auto& c = s.config();
  const Grid1D grid = c.grid();
  json doc = s.summary();
  SimTrace trace;
  try {
    trace = run(c.model, grid, c.damping_spec(grid), c.initial_data(grid), c.sim);
  } catch (const BlowupError& e) {
    doc["status"] = "blowup";
    doc["last_good_time"] = e.last_good_time();
    s.finish(doc);
    throw;
  }
  write_trace_csv(s.path("trace.csv"), trace);
  write_snapshots_csv(s.path("snapshots.csv"), grid, trace);
  doc["status"] = "ok";
  doc["trace"] = trace_json(trace);
  s.note("simulate: " + std::to_string(trace.steps) + " steps, E(T)/E(0) = " +
         format_double(trace.energy.back() / trace.energy.front()));

  if (!c.sweep_amplitudes.empty()) {
    auto out = open_output(s.path("sweep.csv"));
    out << "amplitude,k,energy_ratio,r2\n";
    json rows = json::array();
    for (double a : c.sweep_amplitudes) {
      ExperimentConfig scaled = c;
      scaled.initial.amplitude = a;
      const SimTrace tr = run(c.model, grid, c.damping_spec(grid), scaled.initial_data(grid), c.sim);
      const DecayFit fit = fit_for(c, tr);
      const double ratio = tr.energy.back() / tr.energy.front();
      write_row(out, {a, fit.rate, ratio, fit.r_squared});
      rows.push_back({{"amplitude", a}, {"fit", fit_json(fit)}, {"energy_ratio", ratio}});
    }
    doc["sweep"] = rows;
  }
  s.finish(doc);
  return kExitOk;
}

int compare(Session& s) {
  s.load(true);
  const auto& c = s.config();
  const Grid1D grid = c.grid();
  const DampingKind kinds[] = {DampingKind::none, DampingKind::weak_g, DampingKind::multiplicative,
                               DampingKind::h_minus_one};
  const InitialData init = c.initial_data(grid);
  std::vector<SimTrace> traces(4);
  parallel_for(4, s.workers(), [&](int i) {
    traces[i] = run(c.model, grid, c.damping_spec(grid, kinds[i]), init, c.sim);
  });

  auto out = open_output(s.path("comparison.csv"));
  out << "mechanism,k,energy_ratio,r2\n";
  json doc = s.summary();
  json rows = json::array();
  for (int i = 0; i < 4; ++i) {
    const std::string name = to_string(kinds[i]);
    write_trace_csv(s.path("trace_" + name + ".csv"), traces[i]);
    const DecayFit fit = fit_for(c, traces[i]);
    const double ratio = traces[i].energy.back() / traces[i].energy.front();
    out << name << ',' << format_double(fit.rate) << ',' << format_double(ratio) << ','
        << format_double(fit.r_squared) << '\n';
    rows.push_back({{"mechanism", name}, {"fit", fit_json(fit)}, {"energy_ratio", ratio},
                    {"trace", trace_json(traces[i])}});
  }
  doc["status"] = "ok";
  doc["mechanisms"] = rows;
  s.finish(doc);
  return kExitOk;
}

int decay_fit(Session& s, const Options& opts) {
  s.load(false);
  if (opts.trace_path.empty()) throw ConfigError("decay-fit: --trace is required");
  const SimTrace trace = read_trace_csv(opts.trace_path);
  DecayFit fit;
  if (opts.t_begin || opts.t_end) {
    if (!(opts.t_begin && opts.t_end)) throw ConfigError("decay-fit: give both --t-begin and --t-end");
    fit = fit_decay(trace, *opts.t_begin, *opts.t_end);
  } else {
    fit = fit_for(s.config(), trace);
  }
  json doc = fit_json(fit);
  doc["trace"] = opts.trace_path;
  doc["version"] = version_string();
  write_json(s.path("fit.json"), doc);
  s.note("decay-fit: k = " + format_double(fit.rate) + ", r2 = " + format_double(fit.r_squared));
  return kExitOk;
}

int observability(Session& s) {
  s.load(true);
  const auto& c = s.config();
  const Grid1D grid = c.grid();
  const auto& d = c.diagnostics;
  const auto report = observability_ensemble(c.model, grid, c.damping_spec(grid), c.sim, d.observability_mode,
                                             d.observability_samples, c.initial.seed, s.workers());
  auto out = open_output(s.path("observability.csv"));
  out << "sample,seed,Q\n";
  int flagged = 0;
  for (std::size_t j = 0; j < report.size(); ++j) {
    out << j << ',' << report.sample_seeds[j] << ',' << format_double(report.quotients[j]) << '\n';
    flagged += report.unobservable[j] ? 1 : 0;
  }
  json doc = s.summary();
  doc["status"] = "ok";
  doc["mode"] = to_string(report.mode);
  doc["seed"] = report.seed;
  doc["samples"] = report.size();
  doc["unobservable_samples"] = flagged;
  doc["estimate"] = std::isfinite(report.estimate) ? json(report.estimate) : json("inf");
  s.finish(doc);
  s.note("observability: estimate " + format_double(report.estimate));
  return kExitOk;
}

int lengths(Session& s, const Options& opts) {
  s.load(false);
  const int jmax = opts.jmax > 0 ? opts.jmax : s.config().diagnostics.jmax;
  const auto values = critical_lengths(jmax);
  auto out = open_output(s.path("lengths.csv"));
  out << "rank,length\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << i + 1 << ',' << format_double(values[i]) << '\n';
  json doc = s.summary();
  doc["status"] = "ok";
  doc["jmax"] = jmax;
  doc["count"] = values.size();
  doc["grid_length_is_critical"] = is_critical(s.config().length, 1e-6);
  s.finish(doc);
  return kExitOk;
}

int carleman(Session& s) {
  s.load(true);
  const auto& c = s.config();
  const Grid1D grid = c.grid();
  const CarlemanConfig cfg = c.carleman();
  const double a = c.diagnostics.carleman_forcing_amplitude;
  const double w = c.diagnostics.carleman_forcing_frequency;
  const double k = std::numbers::pi / grid.length();
  Forcing f = [&grid, a, w, k](double t) {
    Vector v(grid.node_count());
    for (int i = 0; i < grid.node_count(); ++i) v(i) = a * std::sin(k * grid.node(i)) * std::cos(w * t);
    return v;
  };
  SimConfig sim = c.sim;
  sim.snapshot_stride = 1;
  sim.trace_cadence = 1;
  const SimTrace trace = run(ModelSpec::kdv_linear(), grid, DampingSpec::none(), c.initial_data(grid).u, sim, f);
  std::vector<Vector> forcing;
  forcing.reserve(trace.snapshots.size());
  for (const auto& snap : trace.snapshots) forcing.push_back(f(snap.time));

  const auto curve = carleman_curve(grid, trace, forcing, cfg);
  auto out = open_output(s.path("carleman.csv"));
  out << "s,ratio\n";
  for (const auto& [sv, ratio] : curve) write_row(out, {sv, ratio});

  const PsiReport report = validate_psi(cfg, grid);
  json conditions = json::array();
  for (const auto& cond : report.conditions) {
    conditions.push_back({{"name", cond.name},
                          {"holds", cond.holds},
                          {"witness_node", cond.witness_node ? json(*cond.witness_node) : json(nullptr)},
                          {"witness_x", cond.witness_node ? json(grid.node(*cond.witness_node)) : json(nullptr)}});
  }
  write_json(s.path("psi_report.json"),
             json{{"psi_coefficients", cfg.psi_coefficients}, {"all_hold", report.all_hold()},
                  {"conditions", conditions}});

  json doc = s.summary();
  doc["status"] = "ok";
  doc["system"] = "kdv_linear with forcing f = A sin(pi x / L) cos(w t)";
  doc["trace"] = trace_json(trace);
  s.finish(doc);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Damped KdV-type simulator and stabilization diagnostics"};
  app.require_subcommand(1);
  Options opts;
  auto common = [&opts](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", opts.config_path, "experiment config file");
    sub->add_option("--out", opts.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", opts.seed, "64-bit seed (overrides initial.seed)");
    sub->add_option("--workers", opts.workers, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", opts.quiet, "no progress output");
  };
  auto* sim = app.add_subcommand("simulate", "run one simulation: trace.csv, snapshots.csv, summary.json");
  auto* cmp = app.add_subcommand("compare", "all four damping mechanisms side by side: comparison.csv");
  auto* fit = app.add_subcommand("decay-fit", "fit C exp(-k t) to an existing trace.csv: fit.json");
  auto* obs = app.add_subcommand("observability", "observability quotient ensemble: observability.csv");
  auto* len = app.add_subcommand("critical-lengths", "critical lengths 2 pi sqrt((j^2 + l^2 + j l) / 3)");
  auto* car = app.add_subcommand("carleman", "weighted ratio curve and psi report: carleman.csv");
  auto* ver = app.add_subcommand("version", "print the version");
  for (auto* sub : {sim, cmp, fit, obs, len, car}) common(sub, true);
  fit->add_option("--trace", opts.trace_path, "trace.csv to fit")->required();
  fit->add_option("--t-begin", opts.t_begin, "start of the fit window");
  fit->add_option("--t-end", opts.t_end, "end of the fit window");
  len->add_option("--jmax", opts.jmax, "largest j, l")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (ver->parsed()) {
      out << version_string() << '\n';
      return kExitOk;
    }
    CLI::App* chosen = app.get_subcommands().front();
    Session session(chosen->get_name(), opts, err);
    if (chosen == sim) return simulate(session);
    if (chosen == cmp) return compare(session);
    if (chosen == fit) return decay_fit(session, opts);
    if (chosen == obs) return observability(session);
    if (chosen == len) return lengths(session, opts);
    if (chosen == car) return carleman(session);
  } catch (const ConfigValidationError& e) {
    for (const auto& v : e.violations()) err << "config error: " << v << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BlowupError& e) {
    err << "blowup: " << e.what() << " (last good t = " << format_double(e.last_good_time()) << ")\n";
    return kExitBlowup;
  } catch (const DiagnosticDomainError& e) {
    err << "diagnostic error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace kdvstab
