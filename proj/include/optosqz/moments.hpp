#pragma once

// Second-moment dynamics of the linearized cavity + mirror fluctuations.
//
// Moment vector ordering (zero-based index : moment), with f+ = f + f^dag and
// f- = f - f^dag:
//   0 <d d>      1 <d^dag d^dag>   2 <d^dag d>
//   3 <d f+>     4 <d f->          5 <d^dag f+>   6 <d^dag f->
//   7 <f+ f+>    8 <f- f+>         9 <f- f->
//
// The moments obey dX/dt = A X + B+ e^{i 2 Ds t} + B- e^{-i 2 Ds t} + B0 and
// the stationary solution is the three-harmonic response X0 + X+ e^{i 2 Ds t}
// + X- e^{-i 2 Ds t}. Only the purely dissipative model (s_disp = 0) is
// supported; intrinsic mechanical damping does not enter.

#include <array>
#include <optional>

#include <Eigen/Dense>

#include "optosqz/params.hpp"

namespace optosqz {

inline constexpr int kMomentDim = 10;

using MomentVector = Eigen::Matrix<cplx, kMomentDim, 1>;
using DriftMatrix = Eigen::Matrix<cplx, kMomentDim, kMomentDim>;

namespace moment {
enum Index : int {
  kDD = 0,
  kDdDd = 1,
  kDdD = 2,
  kDFp = 3,
  kDFm = 4,
  kDdFp = 5,
  kDdFm = 6,
  kFpFp = 7,
  kFmFp = 8,
  kFmFm = 9,
};
}  // namespace moment

/// Thrown when the drift matrix has eigenvalues with non-negative real part.
class InstabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Real part threshold (in units of kappa_c) for the Hurwitz test.
inline constexpr double kStabilityMargin = 1e-10;

struct DriveVectors {
  MomentVector b_plus = MomentVector::Zero();
  MomentVector b_minus = MomentVector::Zero();
  MomentVector b_zero = MomentVector::Zero();
};

struct DriftSystem {
  DriftMatrix a_matrix = DriftMatrix::Zero();
  MomentVector b_plus = MomentVector::Zero();
  MomentVector b_minus = MomentVector::Zero();
  MomentVector b_zero = MomentVector::Zero();
  double kappa_c = 1.0;
};

DriftMatrix build_drift_matrix(const SystemParams& params);
DriveVectors build_drive_vectors(const SystemParams& params);
DriftSystem build_drift_system(const SystemParams& params);

/// Moments of the cavity and mirror ground state.
MomentVector vacuum_moments();

struct StabilityReport {
  std::array<cplx, kMomentDim> eigenvalues{};
  double spectral_abscissa = 0.0;  ///< max real part
  double slowest_decay = 0.0;      ///< min |real part|
  double spectral_radius = 0.0;    ///< max |eigenvalue|
  bool hurwitz = false;
};

StabilityReport stability_eigenvalues(const DriftMatrix& a_matrix,
                                      double kappa_c = 1.0);

struct HarmonicSteadyState {
  MomentVector x_zero = MomentVector::Zero();   ///< DC component
  MomentVector x_plus = MomentVector::Zero();   ///< e^{+i 2 Ds t} amplitude
  MomentVector x_minus = MomentVector::Zero();  ///< e^{-i 2 Ds t} amplitude
  double delta_s = 0.0;
  double residual = 0.0;      ///< max relative residual of the three solves
  double rcond = 0.0;         ///< reciprocal condition estimate (worst of three)

  /// Moment vector at time t.
  [[nodiscard]] MomentVector at(double t) const;
};

/// Factors the drift matrix once and solves for any squeezed-reservoir
/// detuning. Construction throws InstabilityError if A is not Hurwitz.
class SteadyStateSolver {
 public:
  explicit SteadyStateSolver(DriftSystem system);

  [[nodiscard]] HarmonicSteadyState solve(double delta_s) const;
  [[nodiscard]] const StabilityReport& stability() const { return stability_; }
  [[nodiscard]] const DriftSystem& system() const { return system_; }

 private:
  DriftSystem system_;
  StabilityReport stability_;
  Eigen::PartialPivLU<DriftMatrix> lu_zero_;
  MomentVector x_zero_;
  double residual_zero_ = 0.0;
};

HarmonicSteadyState harmonic_steady_state(const DriftSystem& drift,
                                          double delta_s);

struct MirrorObservables {
  double n_st = 0.0;
  cplx f2_amp{};          ///< e^{-i 2 Ds t} harmonic of <f^2>
  double var_min = 0.5;
  double var_max = 0.5;
  bool is_squeezed = false;
  double deviation_gap = 0.0;  ///< sqrt(n(n+1)) - |f2_amp|
};

/// Reconstructs mirror observables from the moment harmonics. Throws
/// NumericalError when n_st < -tolerance.
MirrorObservables extract_observables(const HarmonicSteadyState& hss,
                                      double tolerance = 1e-8);

/// sqrt(n_st (n_st + 1)) - |<f^2>|; zero for an ideal squeezed vacuum.
double squeezed_state_deviation(const MirrorObservables& obs);

/// Closed-form stationary <f^dag f> of the moment model. Requires s_disp = 0
/// and refuses detunings within 1e-6 kappa_c of 0 and +-kappa_c.
double analytic_phonon_full(const SystemParams& params);

struct SearchWindow {
  double lo = 0.0;
  double hi = 0.0;
};

/// [omega_m - 5 s, omega_m + 5 s] with s = max(|spring shift|, 1e-3 kappa_c).
SearchWindow default_squeezing_window(const SystemParams& params);

struct SqueezingOptimum {
  double delta_s = 0.0;
  double var_min = 0.0;
  SearchWindow window;
  bool non_unimodal = false;  ///< an endpoint beat the golden-section optimum
  int evaluations = 0;
  HarmonicSteadyState steady_state;
  MirrorObservables observables;
};

/// Minimizes var_min over the squeezed-reservoir detuning.
SqueezingOptimum optimize_squeezing(
    const SystemParams& params,
    std::optional<SearchWindow> window = std::nullopt);

/// One steady-state evaluation at params.delta_s.
struct PointSolution {
  StabilityReport stability;
  HarmonicSteadyState steady_state;
  MirrorObservables observables;
};

PointSolution solve_point(const SystemParams& params);

}  // namespace optosqz
