// Command-line front end: single points, detuning sweeps, squeezed-reservoir
// detuning optimization, oracle cross-checks and the coupling/detuning
// reproduction tables.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "optosqz/fock_oracle.hpp"
#include "optosqz/moments.hpp"
#include "optosqz/params.hpp"
#include "optosqz/sweep.hpp"
#include "optosqz/weak_coupling.hpp"

namespace {

using namespace optosqz;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Flags {
  std::optional<double> omega_m, delta, delta_s, g_eff, s_disp, r, phi, n_th, gamma_m,
      kappa_hz;
  std::optional<std::string> sweep, out, config;
  std::optional<int> dim_cavity, dim_mirror;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--omega-m", f.omega_m, "mechanical frequency [kappa_c]");
  app.add_option("--delta", f.delta, "laser detuning [kappa_c]");
  app.add_option("--delta-s", f.delta_s,
                 "squeezed-reservoir detuning [kappa_c]; optimized when omitted");
  app.add_option("--g-eff", f.g_eff, "|g_eff| [kappa_c] (G_eff = 2 |g_eff|)");
  app.add_option("--s-disp", f.s_disp, "dispersive offset [kappa_c]");
  app.add_option("--r", f.r, "squeezing parameter");
  app.add_option("--phi", f.phi, "squeezing phase [rad]");
  app.add_option("--n-th", f.n_th, "thermal phonon number");
  app.add_option("--gamma-m", f.gamma_m, "intrinsic mechanical damping [kappa_c]");
  app.add_option("--kappa-hz", f.kappa_hz, "physical kappa_c in Hz for reported rates");
  app.add_option("--sweep", f.sweep, "start:stop:count");
  app.add_option("--out", f.out, "output path (fig2: file prefix)");
  app.add_option("--config", f.config, "JSON file with flag-named keys");
  app.add_option("--dim-cavity", f.dim_cavity, "Fock cutoff of the cavity (oracle-check)");
  app.add_option("--dim-mirror", f.dim_mirror, "Fock cutoff of the mirror (oracle-check)");
}

RunConfig resolve(RunMode mode, const Flags& f) {
  RunConfig config;
  config.mode = mode;
  if (mode == RunMode::kSweepDetuning) config.sweep = SweepAxis{};
  if (f.config) {
    std::ifstream in(*f.config);
    if (!in) throw ConfigError("cannot open config file " + *f.config);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config file: ") + e.what());
    }
    apply_config_json(doc, config);
    config.mode = mode;
  }
  auto set = [&](const std::optional<double>& v, const char* field) {
    if (v) set_param_field(config.base, field, *v);
  };
  set(f.omega_m, "omega-m");
  set(f.delta, "delta");
  set(f.delta_s, "delta-s");
  set(f.g_eff, "g-eff");
  set(f.s_disp, "s-disp");
  set(f.r, "r");
  set(f.phi, "phi");
  set(f.n_th, "n-th");
  set(f.gamma_m, "gamma-m");
  if (f.delta_s) config.optimize_ds = false;
  if (f.kappa_hz) config.kappa_hz = f.kappa_hz;
  if (f.sweep) config.sweep = parse_sweep_spec("delta", *f.sweep);
  if (f.out) config.output_path = *f.out;
  if (f.dim_cavity) config.fock.dim_cavity = *f.dim_cavity;
  if (f.dim_mirror) config.fock.dim_mirror = *f.dim_mirror;
  validate(config);
  return config;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void emit_rows(const RunConfig& config, const std::vector<SweepRow>& rows) {
  if (config.output_path.empty()) {
    write_sweep_csv(std::cout, config, rows);
    return;
  }
  std::ofstream out(config.output_path);
  if (!out) throw ConfigError("cannot write " + config.output_path);
  write_sweep_csv(out, config, rows);
}

int cmd_point(const RunConfig& config) {
  const SweepRow row = run_point(config);
  const auto& o = *row.observables;
  const SystemParams& p = config.base;
  const auto validated = validate(p);

  std::cout << "matrix solve\n"
            << "  delta_s        " << fmt(row.delta_s)
            << (config.optimize_ds ? " (optimized)" : "") << '\n';
  if (config.kappa_hz) {
    std::cout << "  delta_s [Hz]   " << fmt(row.delta_s / p.kappa_c * *config.kappa_hz)
              << '\n';
  }
  std::cout << "  n_st           " << fmt(o.n_st) << '\n'
            << "  var_min        " << fmt(o.var_min) << '\n'
            << "  var_max        " << fmt(o.var_max) << '\n'
            << "  |<f^2>|        " << fmt(std::abs(o.f2_amp)) << '\n'
            << "  deviation gap  " << fmt(o.deviation_gap) << '\n'
            << "  residual       " << fmt(row.residual) << '\n';

  std::cout << "analytic" << (validated.weak_coupling ? " (weak coupling)" : " (outside weak coupling)")
            << '\n';
  const auto fo = first_order_phonon(p);
  std::cout << "  gamma_opt      " << fmt(gamma_opt(p)) << '\n';
  if (config.kappa_hz) {
    std::cout << "  gamma_opt [Hz] " << fmt(gamma_opt(p) / p.kappa_c * *config.kappa_hz)
              << '\n';
  }
  std::cout << "  n_st weak      " << fmt(steady_phonon_weak(p)) << '\n'
            << "  var_x ideal    " << fmt(ideal_variances(p.r).var_x) << '\n'
            << "  n first order  " << fmt(fo.value)
            << (fo.off_optimal_detuning ? " (delta off optimum; expansion invalid)" : "")
            << '\n';
  try {
    std::cout << "  n closed form  " << fmt(analytic_phonon_full(p)) << '\n';
  } catch (const std::exception& e) {
    std::cout << "  n closed form  unavailable: " << e.what() << '\n';
  }
  if (!config.output_path.empty()) emit_rows(config, {row});
  return 0;
}

int cmd_sweep(const RunConfig& config) {
  const auto table = run_sweep_detuning(config);
  emit_rows(config, table.rows);
  const auto& s = table.summary;
  std::cerr << "argmin n_st: " << (s.argmin_n_st ? fmt(*s.argmin_n_st) : "none")
            << "  argmin var_min: " << (s.argmin_var_min ? fmt(*s.argmin_var_min) : "none")
            << '\n';
  return 0;
}

int cmd_optimize(const RunConfig& config) {
  const auto opt = optimize_squeezing(config.base);
  std::cout << "delta_s*     " << fmt(opt.delta_s) << '\n'
            << "var_min*     " << fmt(opt.var_min) << '\n'
            << "n_st         " << fmt(opt.observables.n_st) << '\n'
            << "window       [" << fmt(opt.window.lo) << ", " << fmt(opt.window.hi) << "]\n"
            << "evaluations  " << opt.evaluations << '\n';
  if (config.kappa_hz) {
    std::cout << "delta_s* Hz  "
              << fmt(opt.delta_s / config.base.kappa_c * *config.kappa_hz) << '\n';
  }
  if (opt.non_unimodal) {
    std::cerr << "warning: objective is not unimodal on the window; grid refinement used\n";
  }
  if (!config.output_path.empty()) {
    SweepRow row;
    row.swept_value = config.base.delta;
    row.params = config.base;
    row.stable = true;
    row.delta_s = opt.delta_s;
    row.observables = opt.observables;
    row.residual = opt.steady_state.residual;
    emit_rows(config, {row});
  }
  return 0;
}

int cmd_oracle(const RunConfig& config) {
  const auto rep = run_oracle_check(config);
  std::cout << "delta_s " << fmt(rep.delta_s) << '\n';
  for (const auto& b : rep.backends) {
    std::cout << (b.pass ? "PASS " : "FAIL ") << b.backend;
    if (b.ok) {
      std::cout << "  n_st=" << fmt(b.n_st) << " |f2|=" << fmt(b.f2_abs);
      if (b.backend != "matrix") {
        std::cout << "  rel_diff_n=" << fmt(b.rel_diff_n);
        if (b.backend == "moment-ode") std::cout << " max_err=" << fmt(b.rel_diff_f2);
        if (b.compared_f2) std::cout << " rel_diff_f2=" << fmt(b.rel_diff_f2);
        std::cout << " tol=" << fmt(b.tolerance);
      }
    } else {
      std::cout << "  " << (b.unstable ? "unstable: " : "") << b.error;
    }
    std::cout << '\n';
  }
  return rep.all_pass ? 0 : kExitNumerical;
}

int cmd_fig2(const RunConfig& config) {
  const auto result = run_fig2(config);
  const std::string prefix = config.output_path.empty() ? "fig2" : config.output_path;
  for (auto [panel, suffix] : {std::pair{Fig2Panel::kPhononNumber, "_panel_a.csv"},
                               std::pair{Fig2Panel::kVarMin, "_panel_b.csv"}}) {
    const std::string path = prefix + suffix;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    write_fig2_csv(out, config, result, panel);
    std::cerr << "wrote " << path << '\n';
  }
  for (std::size_t i = 0; i < result.couplings.size(); ++i) {
    const auto& s = result.tables[i].summary;
    std::cerr << "G_eff=" << fmt(result.couplings[i])
              << "  argmin n_st: " << (s.argmin_n_st ? fmt(*s.argmin_n_st) : "none")
              << "  min var_min: " << (s.min_var_min ? fmt(*s.min_var_min) : "none") << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady-state squeezing of a dissipatively coupled mirror"};
  app.require_subcommand(1);
  Flags flags;
  add_flags(app, flags);
  app.fallthrough();

  struct Sub {
    const char* name;
    const char* help;
    RunMode mode;
  };
  const Sub subs[] = {
      {"point", "single steady-state evaluation", RunMode::kPoint},
      {"sweep-detuning", "sweep the laser detuning", RunMode::kSweepDetuning},
      {"optimize-ds", "optimize the squeezed-reservoir detuning", RunMode::kOptimizeDs},
      {"oracle-check", "cross-check against ODE and Fock-space backends",
       RunMode::kOracleCheck},
      {"fig2", "detuning sweeps at G_eff = 0.1 ... 0.4", RunMode::kFig2},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    RunMode mode = RunMode::kPoint;
    for (const auto& s : subs) {
      if (app.got_subcommand(s.name)) mode = s.mode;
    }
    const RunConfig config = resolve(mode, flags);
    switch (mode) {
      case RunMode::kPoint: return cmd_point(config);
      case RunMode::kSweepDetuning: return cmd_sweep(config);
      case RunMode::kOptimizeDs: return cmd_optimize(config);
      case RunMode::kOracleCheck: return cmd_oracle(config);
      case RunMode::kFig2: return cmd_fig2(config);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
