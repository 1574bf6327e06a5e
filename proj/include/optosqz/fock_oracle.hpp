#pragma once

// Independent verification backends for the harmonic steady state:
//  * fixed-step RK4 integration of the moment equations themselves, and
//  * a truncated Fock-space master equation built from the linearized
//    cavity, mirror and interaction generators.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "optosqz/moments.hpp"
#include "optosqz/params.hpp"

namespace optosqz {

// ---------------------------------------------------------------------------
// Moment ODE propagation

struct MomentTrajectory {
  std::vector<double> times;
  std::vector<MomentVector> states;
};

struct TrajectorySampling {
  double record_from = 0.0;  ///< only instants t >= record_from are stored
  int stride = 1;            ///< store every stride-th step
};

/// Largest step allowed for the moment ODE: 0.05 over the fastest rate among
/// 2 |Ds|, kappa_c and the spectral radius of A.
double max_moment_step(const DriftSystem& drift, double delta_s);

/// Classical RK4 with a fixed step. The initial state is always recorded
/// as states[0]. Throws ConfigError if dt violates max_moment_step and
/// InstabilityError if the state norm exceeds 1e6.
MomentTrajectory propagate_moment_odes(const DriftSystem& drift, double delta_s,
                                       const MomentVector& x0, double t_end,
                                       double dt, TrajectorySampling sampling = {});

struct MomentOdeCheck {
  double max_error = 0.0;       ///< max-norm gap to the ansatz over the last period
  double mean_phonon = 0.0;     ///< period-averaged <f^dag f> from the trajectory
  double t_end = 0.0;
  double dt = 0.0;
  long steps = 0;
};

/// Integrates from x0 long enough for transients to decay by `decay_factor`
/// (in e-folds of the slowest mode) plus one drive period, with a step small
/// enough that RK4 phase error stays below `accuracy`, and compares the final
/// period to the harmonic ansatz.
MomentOdeCheck check_moment_ode(const DriftSystem& drift, const HarmonicSteadyState& hss,
                                const MomentVector& x0, double accuracy = 1e-8,
                                double decay_factor = 23.0);

// ---------------------------------------------------------------------------
// Truncated Fock-space master equation

struct FockConfig {
  int dim_cavity = 8;
  int dim_mirror = 12;
  double leak_threshold = 1e-3;
};

void validate(const FockConfig& fock);

using SparseOperator = Eigen::SparseMatrix<cplx>;
using DenseOperator = Eigen::MatrixXcd;

/// Vectorized generator L(t) = L0 + e^{i 2 Ds t} L+ + e^{-i 2 Ds t} L- acting
/// on column-stacked density matrices. Hilbert index = n_cavity * dim_mirror
/// + n_mirror.
struct Liouvillian {
  SparseOperator static_part;
  SparseOperator plus_part;
  SparseOperator minus_part;
  double delta_s = 0.0;
  int hilbert_dim = 0;

  [[nodiscard]] SparseOperator at(double t) const;
  /// d vec(rho)/dt at time t.
  [[nodiscard]] Eigen::VectorXcd apply(double t, const Eigen::VectorXcd& rho) const;
};

Liouvillian build_liouvillian_parts(const SystemParams& params, const FockConfig& fock);

/// The full generator at time t.
SparseOperator build_liouvillian(const SystemParams& params, const FockConfig& fock,
                                 double t);

/// Ladder operators on the truncated product space.
struct FockOperators {
  DenseOperator d;
  DenseOperator f;
};

FockOperators fock_operators(const FockConfig& fock);

/// The ten second moments of a density matrix, in moment-vector order.
MomentVector density_moments(const DenseOperator& rho, const FockOperators& ops);

struct FockMoments {
  double n_st = 0.0;       ///< <f^dag f>
  cplx f2{};               ///< <f^2> (static) or its e^{-i 2 Ds t} harmonic (stroboscopic)
  double top_cavity = 0.0; ///< population of the highest cavity level
  double top_mirror = 0.0; ///< population of the highest mirror level
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  MomentVector moments = MomentVector::Zero();

  /// Truncation bound used when comparing against exact moments.
  [[nodiscard]] double leak() const { return std::max(top_cavity, top_mirror); }
};

struct FockSteadyState {
  DenseOperator rho;
  FockMoments moments;
};

/// Null vector of the time-independent generator (requires M = 0). Throws
/// NumericalError on cutoff leak or a degenerate null space.
FockSteadyState lindblad_steady_state_static(const SystemParams& params,
                                             const FockConfig& fock);

struct StrobeResult {
  FockMoments moments;      ///< n_st: period average; f2: e^{-i 2 Ds t} harmonic
  double cycle_change = 0.0;  ///< relative change of the averages between the last two cycles
  double prelude = 0.0;
  double dt = 0.0;
  long steps = 0;
};

/// Propagates the time-dependent master equation through a relaxation
/// prelude of 10 / min |Re eig(A)| followed by `cycles` drive periods and
/// projects the final period onto the 0 and -2 Ds harmonics.
StrobeResult lindblad_strobe_average(const SystemParams& params, const FockConfig& fock,
                                     int cycles = 2);

}  // namespace optosqz
