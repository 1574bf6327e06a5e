#include "optosqz/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace optosqz {

namespace {

constexpr double kFig2Couplings[] = {0.1, 0.2, 0.3, 0.4};

// Evaluates fn(i) for i in [0, count) on a small worker pool. Results are
// stored by index, so the output order never depends on scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(int count, Fn&& fn) {
  std::vector<T> out(static_cast<std::size_t>(count));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::min<int>(static_cast<int>(hw), count);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      out[static_cast<std::size_t>(i)] = fn(i);
    }
  };
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

std::string canonical_field(std::string field) {
  std::replace(field.begin(), field.end(), '_', '-');
  return field;
}

double relative_diff(double value, double reference) {
  const double scale = std::abs(reference);
  if (scale < 1e-12) return std::abs(value - reference);
  return std::abs(value - reference) / scale;
}

std::string sanitize(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

void write_config_comments(std::ostream& out, const RunConfig& config) {
  const SystemParams& p = config.base;
  out << "# mode: " << to_string(config.mode) << '\n';
  out << "# kappa_c: " << format_number(p.kappa_c) << '\n';
  out << "# omega_m: " << format_number(p.omega_m) << '\n';
  out << "# delta: " << format_number(p.delta) << '\n';
  out << "# delta_s: "
      << (config.optimize_ds ? std::string("optimized") : format_number(p.delta_s)) << '\n';
  out << "# g_eff: " << format_number(p.g_eff_mag) << '\n';
  out << "# s_disp: " << format_number(p.s_disp) << '\n';
  out << "# r: " << format_number(p.r) << '\n';
  out << "# phi: " << format_number(p.phi) << '\n';
  out << "# n_th: " << format_number(p.n_th) << '\n';
  out << "# gamma_m: " << format_number(p.gamma_m) << '\n';
  if (config.kappa_hz) out << "# kappa_hz: " << format_number(*config.kappa_hz) << '\n';
  if (config.sweep) {
    out << "# sweep: " << config.sweep->field << ' ' << format_number(config.sweep->start)
        << ':' << format_number(config.sweep->stop) << ':' << config.sweep->count << '\n';
  }
}

}  // namespace

RunMode parse_run_mode(const std::string& name) {
  static const std::map<std::string, RunMode> modes = {
      {"point", RunMode::kPoint},
      {"sweep-detuning", RunMode::kSweepDetuning},
      {"optimize-ds", RunMode::kOptimizeDs},
      {"oracle-check", RunMode::kOracleCheck},
      {"fig2", RunMode::kFig2},
  };
  const auto it = modes.find(name);
  if (it == modes.end()) throw ConfigError("unknown mode '" + name + "'");
  return it->second;
}

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kPoint: return "point";
    case RunMode::kSweepDetuning: return "sweep-detuning";
    case RunMode::kOptimizeDs: return "optimize-ds";
    case RunMode::kOracleCheck: return "oracle-check";
    case RunMode::kFig2: return "fig2";
  }
  return "unknown";
}

double SweepAxis::value(int i) const {
  if (i == count - 1) return stop;
  return start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
}

SweepAxis parse_sweep_spec(const std::string& field, const std::string& spec) {
  SweepAxis axis;
  axis.field = field;
  const auto first = spec.find(':');
  const auto second = first == std::string::npos ? first : spec.find(':', first + 1);
  if (second == std::string::npos) {
    throw ConfigError("sweep must have the form start:stop:count, got '" + spec + "'");
  }
  try {
    std::size_t used = 0;
    const std::string count_text = spec.substr(second + 1);
    axis.start = std::stod(spec.substr(0, first));
    axis.stop = std::stod(spec.substr(first + 1, second - first - 1));
    axis.count = std::stoi(count_text, &used);
    if (used != count_text.size()) throw std::invalid_argument("count");
  } catch (const std::logic_error&) {
    throw ConfigError("sweep must have the form start:stop:count, got '" + spec + "'");
  }
  return axis;
}

void set_param_field(SystemParams& p, const std::string& field, double value) {
  const std::string f = canonical_field(field);
  if (f == "kappa-c") p.kappa_c = value;
  else if (f == "omega-m") p.omega_m = value;
  else if (f == "delta") p.delta = value;
  else if (f == "delta-s") p.delta_s = value;
  else if (f == "g-eff") p.g_eff_mag = value;
  else if (f == "s-disp") p.s_disp = value;
  else if (f == "r") p.r = value;
  else if (f == "phi") p.phi = value;
  else if (f == "n-th") p.n_th = value;
  else if (f == "gamma-m") p.gamma_m = value;
  else throw ConfigError("'" + field + "' is not a parameter field");
}

double get_param_field(const SystemParams& p, const std::string& field) {
  const std::string f = canonical_field(field);
  if (f == "kappa-c") return p.kappa_c;
  if (f == "omega-m") return p.omega_m;
  if (f == "delta") return p.delta;
  if (f == "delta-s") return p.delta_s;
  if (f == "g-eff") return p.g_eff_mag;
  if (f == "s-disp") return p.s_disp;
  if (f == "r") return p.r;
  if (f == "phi") return p.phi;
  if (f == "n-th") return p.n_th;
  if (f == "gamma-m") return p.gamma_m;
  throw ConfigError("'" + field + "' is not a parameter field");
}

void validate(const RunConfig& config) {
  validate(config.base);
  validate(config.fock);
  if (config.kappa_hz && !(*config.kappa_hz > 0.0 && std::isfinite(*config.kappa_hz))) {
    throw ConfigError("kappa-hz must be positive");
  }
  const bool sweeping =
      config.mode == RunMode::kSweepDetuning || config.mode == RunMode::kFig2;
  if (config.mode == RunMode::kSweepDetuning && !config.sweep) {
    throw ConfigError("sweep-detuning needs --sweep start:stop:count");
  }
  if (config.sweep) {
    const SweepAxis& axis = *config.sweep;
    get_param_field(config.base, axis.field);  // throws for unknown fields
    if (sweeping && axis.count < 2) throw ConfigError("sweep count must be at least 2");
    if (!(axis.start < axis.stop)) throw ConfigError("sweep needs start < stop");
    if (config.mode == RunMode::kSweepDetuning && canonical_field(axis.field) != "delta") {
      throw ConfigError("sweep-detuning sweeps the field 'delta'");
    }
  }
}

void apply_config_json(const nlohmann::json& doc, RunConfig& config) {
  if (!doc.is_object()) throw ConfigError("config file must hold a flat object");
  for (const auto& [key, value] : doc.items()) {
    const std::string k = canonical_field(key);
    try {
      if (k == "mode") {
        config.mode = parse_run_mode(value.get<std::string>());
      } else if (k == "out") {
        config.output_path = value.get<std::string>();
      } else if (k == "kappa-hz") {
        config.kappa_hz = value.get<double>();
      } else if (k == "sweep") {
        const std::string field = config.sweep ? config.sweep->field : "delta";
        config.sweep = parse_sweep_spec(field, value.get<std::string>());
      } else if (k == "sweep-field") {
        if (!config.sweep) config.sweep = SweepAxis{};
        config.sweep->field = value.get<std::string>();
      } else if (k == "dim-cavity") {
        config.fock.dim_cavity = value.get<int>();
      } else if (k == "dim-mirror") {
        config.fock.dim_mirror = value.get<int>();
      } else {
        set_param_field(config.base, k, value.get<double>());
        if (k == "delta-s") config.optimize_ds = false;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

SweepRow evaluate_row(const SystemParams& params, double swept_value, bool optimize_ds) {
  SweepRow row;
  row.swept_value = swept_value;
  row.params = params;
  row.delta_s = params.delta_s;
  try {
    validate(params);
    row.stable = stability_eigenvalues(build_drift_matrix(params), params.kappa_c).hurwitz;
    if (!row.stable) {
      row.error = "unstable: no unique steady state";
      return row;
    }
    if (optimize_ds) {
      const auto opt = optimize_squeezing(params);
      row.delta_s = opt.delta_s;
      row.observables = opt.observables;
      row.residual = opt.steady_state.residual;
    } else {
      const auto sol = solve_point(params);
      row.observables = sol.observables;
      row.residual = sol.steady_state.residual;
    }
  } catch (const std::exception& e) {
    row.observables.reset();
    row.error = e.what();
  }
  return row;
}

SweepRow run_point(const RunConfig& config) {
  validate(config);
  const SystemParams& p = config.base;
  validate(p);
  SweepRow row;
  row.swept_value = p.delta;
  row.params = p;
  row.stable = true;
  if (config.optimize_ds) {
    const auto opt = optimize_squeezing(p);
    row.delta_s = opt.delta_s;
    row.observables = opt.observables;
    row.residual = opt.steady_state.residual;
  } else {
    const auto sol = solve_point(p);
    row.delta_s = p.delta_s;
    row.observables = sol.observables;
    row.residual = sol.steady_state.residual;
  }
  return row;
}

SweepSummary summarize(const std::vector<SweepRow>& rows) {
  SweepSummary s;
  for (const auto& row : rows) {
    if (!row.observables) continue;
    const auto& o = *row.observables;
    if (!s.min_n_st || o.n_st < *s.min_n_st) {
      s.min_n_st = o.n_st;
      s.argmin_n_st = row.swept_value;
    }
    if (!s.min_var_min || o.var_min < *s.min_var_min) {
      s.min_var_min = o.var_min;
      s.argmin_var_min = row.swept_value;
    }
  }
  return s;
}

SweepTable run_sweep(const RunConfig& config) {
  validate(config);
  if (!config.sweep) throw ConfigError("no sweep axis configured");
  const SweepAxis axis = *config.sweep;
  SweepTable table;
  table.rows = parallel_map<SweepRow>(axis.count, [&](int i) {
    SystemParams p = config.base;
    const double v = axis.value(i);
    set_param_field(p, axis.field, v);
    return evaluate_row(p, v, config.optimize_ds);
  });
  table.summary = summarize(table.rows);
  return table;
}

SweepTable run_sweep_detuning(const RunConfig& config) {
  RunConfig c = config;
  if (!c.sweep) c.sweep = SweepAxis{};
  if (canonical_field(c.sweep->field) != "delta") {
    throw ConfigError("sweep-detuning sweeps the field 'delta'");
  }
  return run_sweep(c);
}

OracleReport run_oracle_check(const RunConfig& config) {
  validate(config);
  OracleReport rep;
  rep.params = config.base;
  rep.delta_s = config.base.delta_s;
  if (config.optimize_ds) {
    try {
      rep.delta_s = optimize_squeezing(config.base).delta_s;
    } catch (const NumericalError&) {
      // Each backend reports the failure on its own below.
    }
  }
  rep.params.delta_s = rep.delta_s;
  const SystemParams& p = rep.params;

  BackendResult matrix;
  matrix.backend = "matrix";
  std::optional<HarmonicSteadyState> hss;
  std::optional<DriftSystem> drift;
  try {
    drift = build_drift_system(p);
    hss = SteadyStateSolver(*drift).solve(rep.delta_s);
    const auto obs = extract_observables(*hss);
    matrix.ok = matrix.pass = true;
    matrix.n_st = obs.n_st;
    matrix.f2_abs = std::abs(obs.f2_amp);
  } catch (const InstabilityError& e) {
    matrix.unstable = true;
    matrix.error = e.what();
  } catch (const std::exception& e) {
    matrix.error = e.what();
  }
  rep.backends.push_back(matrix);

  BackendResult ode;
  ode.backend = "moment-ode";
  ode.tolerance = 1e-6;
  try {
    if (!drift) drift = build_drift_system(p);
    if (!hss) {
      if (!stability_eigenvalues(drift->a_matrix, drift->kappa_c).hurwitz) {
        throw InstabilityError("no unique steady state: drift matrix is not Hurwitz");
      }
      throw NumericalError("no harmonic reference state to compare against");
    }
    const auto chk = check_moment_ode(*drift, *hss, vacuum_moments());
    ode.ok = true;
    ode.n_st = chk.mean_phonon;
    ode.rel_diff_n = relative_diff(chk.mean_phonon, matrix.n_st);
    ode.f2_abs = matrix.f2_abs;
    ode.rel_diff_f2 = chk.max_error;  // max-norm gap to the harmonic ansatz
    ode.pass = chk.max_error < ode.tolerance;
  } catch (const InstabilityError& e) {
    ode.unstable = true;
    ode.error = e.what();
  } catch (const std::exception& e) {
    ode.error = e.what();
  }
  rep.backends.push_back(ode);

  BackendResult fock;
  fock.backend = "fock";
  const auto bath = derive_bath_moments(p.r, p.phi);
  if (p.r > 0.5) {
    fock.error = "skipped: r > 0.5 is beyond the Fock oracle's range";
    fock.pass = true;
  } else {
    try {
      FockMoments fm;
      if (std::abs(bath.m_bath) == 0.0) {
        fm = lindblad_steady_state_static(p, config.fock).moments;
      } else {
        fm = lindblad_strobe_average(p, config.fock).moments;
        fock.compared_f2 = true;
      }
      fock.ok = true;
      fock.n_st = fm.n_st;
      fock.f2_abs = std::abs(fm.f2);
      fock.tolerance = std::max(0.05, fm.leak());
      fock.rel_diff_n = relative_diff(fm.n_st, matrix.n_st);
      fock.pass = matrix.ok && fock.rel_diff_n <= fock.tolerance;
      if (fock.compared_f2) {
        fock.rel_diff_f2 = relative_diff(fock.f2_abs, matrix.f2_abs);
        fock.pass = fock.pass && fock.rel_diff_f2 <= fock.tolerance;
      }
    } catch (const InstabilityError& e) {
      fock.unstable = true;
      fock.error = e.what();
    } catch (const std::exception& e) {
      fock.error = e.what();
    }
  }
  rep.backends.push_back(fock);

  rep.all_pass = std::all_of(rep.backends.begin(), rep.backends.end(),
                             [](const BackendResult& b) { return b.pass; });
  return rep;
}

Fig2Result run_fig2(const RunConfig& config) {
  RunConfig c = config;
  c.mode = RunMode::kFig2;
  c.base.kappa_c = 1.0;
  c.base.omega_m = 3.0;
  c.base.r = 1.0;
  c.base.s_disp = 0.0;
  c.optimize_ds = true;
  if (!c.sweep) c.sweep = SweepAxis{};
  c.sweep->field = "delta";
  validate(c);

  Fig2Result result;
  for (double g : kFig2Couplings) {
    c.base.g_eff_mag = g / 2.0;
    result.couplings.push_back(g);
    result.tables.push_back(run_sweep(c));
  }
  return result;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {
      "swept_value", "n_st",    "var_min", "var_max", "f2_abs",  "deviation_gap",
      "stable",      "delta_s", "delta_s_hz", "residual", "error", "kappa_c",
      "omega_m",     "delta",   "g_eff",   "s_disp",  "r",       "phi",
      "n_th",        "gamma_m"};
  return cols;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", value);
  return buf;
}

void write_sweep_csv(std::ostream& out, const RunConfig& config,
                     const std::vector<SweepRow>& rows) {
  write_config_comments(out, config);
  const auto& cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& row : rows) {
    const auto& p = row.params;
    const auto& o = row.observables;
    auto obs_field = [&](auto getter) { return o ? format_number(getter(*o)) : std::string(); };
    out << format_number(row.swept_value) << ','
        << obs_field([](const MirrorObservables& m) { return m.n_st; }) << ','
        << obs_field([](const MirrorObservables& m) { return m.var_min; }) << ','
        << obs_field([](const MirrorObservables& m) { return m.var_max; }) << ','
        << obs_field([](const MirrorObservables& m) { return std::abs(m.f2_amp); }) << ','
        << obs_field([](const MirrorObservables& m) { return m.deviation_gap; }) << ','
        << (row.stable ? 1 : 0) << ',' << format_number(row.delta_s) << ','
        << (config.kappa_hz ? format_number(row.delta_s / p.kappa_c * *config.kappa_hz)
                            : std::string())
        << ',' << (o ? format_number(row.residual) : std::string()) << ','
        << sanitize(row.error) << ',' << format_number(p.kappa_c) << ','
        << format_number(p.omega_m) << ',' << format_number(p.delta) << ','
        << format_number(p.g_eff_mag) << ',' << format_number(p.s_disp) << ','
        << format_number(p.r) << ',' << format_number(p.phi) << ','
        << format_number(p.n_th) << ',' << format_number(p.gamma_m) << '\n';
  }
}

void write_fig2_csv(std::ostream& out, const RunConfig& config, const Fig2Result& result,
                    Fig2Panel panel) {
  RunConfig c = config;
  c.mode = RunMode::kFig2;
  c.base.omega_m = 3.0;
  c.base.r = 1.0;
  c.base.s_disp = 0.0;
  c.optimize_ds = true;
  write_config_comments(out, c);
  const char* quantity = panel == Fig2Panel::kPhononNumber ? "n_st" : "var_min";
  out << "# panel: " << quantity << " vs delta, one column per G_eff/kappa_c\n";
  out << "delta";
  for (double g : result.couplings) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_G%.1f", quantity, g);
    out << ',' << buf;
  }
  out << '\n';
  if (result.tables.empty()) return;
  const std::size_t n = result.tables.front().rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << format_number(result.tables.front().rows[i].swept_value);
    for (const auto& table : result.tables) {
      const auto& o = table.rows[i].observables;
      out << ',';
      if (o) out << format_number(panel == Fig2Panel::kPhononNumber ? o->n_st : o->var_min);
    }
    out << '\n';
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  auto split = [](const std::string& text) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(text);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!text.empty() && text.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.comments.push_back(line);
    } else if (table.header.empty()) {
      table.header = split(line);
    } else {
      table.rows.push_back(split(line));
    }
  }
  return table;
}

}  // namespace optosqz
