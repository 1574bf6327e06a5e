#pragma once

// Run configuration, parameter sweeps and CSV emission for the command-line
// front end.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "optosqz/fock_oracle.hpp"
#include "optosqz/moments.hpp"
#include "optosqz/params.hpp"

namespace optosqz {

enum class RunMode { kPoint, kSweepDetuning, kOptimizeDs, kOracleCheck, kFig2 };

RunMode parse_run_mode(const std::string& name);
std::string to_string(RunMode mode);

struct SweepAxis {
  std::string field = "delta";
  double start = 0.5;
  double stop = 2.5;
  int count = 81;

  [[nodiscard]] double value(int i) const;
};

/// Parses "start:stop:count".
SweepAxis parse_sweep_spec(const std::string& field, const std::string& spec);

struct RunConfig {
  RunMode mode = RunMode::kPoint;
  SystemParams base;
  /// When false the squeezed-reservoir detuning is base.delta_s; otherwise
  /// it is optimized per point.
  bool optimize_ds = true;
  std::optional<SweepAxis> sweep;
  std::string output_path;
  std::optional<double> kappa_hz;  ///< physical kappa_c in Hz
  FockConfig fock;
};

/// Throws ConfigError on any inconsistency.
void validate(const RunConfig& config);

/// Applies a flat key/value document whose keys match the CLI flag names
/// ("omega-m", "delta", "delta-s", "g-eff", "s-disp", "r", "phi", "n-th",
/// "gamma-m", "kappa-hz", "sweep", "out", "mode").
void apply_config_json(const nlohmann::json& doc, RunConfig& config);

/// Sets one SystemParams field by its CLI name (also accepts "g_eff" style).
void set_param_field(SystemParams& params, const std::string& field, double value);
double get_param_field(const SystemParams& params, const std::string& field);

struct SweepRow {
  double swept_value = 0.0;
  bool stable = false;
  std::optional<MirrorObservables> observables;
  double delta_s = 0.0;
  double residual = 0.0;
  std::string error;  ///< empty on success
  SystemParams params;
};

/// Evaluates one point, recording failures in the row instead of throwing.
SweepRow evaluate_row(const SystemParams& params, double swept_value, bool optimize_ds);

/// Single evaluation; throws on failure.
SweepRow run_point(const RunConfig& config);

struct SweepSummary {
  std::optional<double> argmin_n_st;
  std::optional<double> argmin_var_min;
  std::optional<double> min_n_st;
  std::optional<double> min_var_min;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  SweepSummary summary;
};

SweepSummary summarize(const std::vector<SweepRow>& rows);

/// Sweeps the configured axis; rows come back in axis order regardless of
/// evaluation order. Per-row failures are recorded in the row.
SweepTable run_sweep(const RunConfig& config);

/// run_sweep with the axis restricted to the laser detuning.
SweepTable run_sweep_detuning(const RunConfig& config);

struct BackendResult {
  std::string backend;
  bool ok = false;
  bool unstable = false;
  std::string error;
  double n_st = 0.0;
  double f2_abs = 0.0;
  double rel_diff_n = 0.0;
  double rel_diff_f2 = 0.0;
  double tolerance = 0.0;
  bool compared_f2 = false;
  bool pass = false;
};

struct OracleReport {
  SystemParams params;
  double delta_s = 0.0;
  std::vector<BackendResult> backends;
  bool all_pass = false;
};

/// Matrix solve vs moment-ODE propagation vs (for r <= 0.5) the Fock-space
/// master equation.
OracleReport run_oracle_check(const RunConfig& config);

struct Fig2Result {
  std::vector<double> couplings;  ///< G_eff / kappa_c
  std::vector<SweepTable> tables; ///< one per coupling
};

/// Detuning sweeps at G_eff = 0.1, 0.2, 0.3, 0.4 kappa_c with omega_m = 3,
/// r = 1, s_disp = 0 and per-point Delta_s optimization.
Fig2Result run_fig2(const RunConfig& config);

// ---------------------------------------------------------------------------
// CSV

/// Column names, in output order.
const std::vector<std::string>& sweep_columns();

/// Writes '#'-prefixed config lines, the header and one line per row.
void write_sweep_csv(std::ostream& out, const RunConfig& config,
                     const std::vector<SweepRow>& rows);

/// Panel CSV: first column delta, then one column per coupling.
enum class Fig2Panel { kPhononNumber, kVarMin };
void write_fig2_csv(std::ostream& out, const RunConfig& config, const Fig2Result& result,
                    Fig2Panel panel);

/// Parses a CSV written by write_sweep_csv. Comment lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;
};
CsvTable read_csv(std::istream& in);

/// 17 significant digits in scientific notation.
std::string format_number(double value);

}  // namespace optosqz
