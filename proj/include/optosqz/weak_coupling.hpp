#pragma once

// Closed-form results valid when the cavity can be adiabatically eliminated
// (G_eff << kappa_c): scattering function, optimal detuning, optical spring,
// optical damping and the resulting steady-state phonon number and squeezing.

#include "optosqz/params.hpp"

namespace optosqz {

/// Scattering amplitude Theta(omega). The cooling (heating) rate is set by
/// Theta(+omega_m) (Theta(-omega_m)).
cplx theta(double omega, const SystemParams& params);

/// Laser detuning at which Theta(-omega_m) vanishes.
double optimal_detuning(const SystemParams& params);

/// Optical spring shift delta of the mechanical frequency.
double spring_shift(const SystemParams& params);

/// Coefficient of f^dag f in the optically induced mirror Hamiltonian.
double energy_shift_coefficient(const SystemParams& params);

/// Optically induced damping rate.
double gamma_opt(const SystemParams& params);

/// gamma_m + gamma_opt.
double total_damping(const SystemParams& params);

/// Weak-coupling steady phonon number, balancing the thermal bath against
/// the optically engineered squeezed reservoir. Throws NumericalError when
/// both damping channels vanish.
double steady_phonon_weak(const SystemParams& params);

struct QuadratureVariances {
  double var_x = 0.5;
  double var_y = 0.5;
};

/// Position/momentum variances of the ideal transferred squeezed state.
QuadratureVariances ideal_variances(double r);

struct FirstOrderPhonon {
  double value = 0.0;
  /// Set when the detuning is away from the optimal one, where the
  /// expansion does not apply.
  bool off_optimal_detuning = false;
};

/// Phonon number including the leading optically induced heating correction.
FirstOrderPhonon first_order_phonon(const SystemParams& params);

struct ReservoirFrequencies {
  double omega_r = 0.0;              ///< coherent drive frequency
  double omega_s = 0.0;              ///< squeezed centre, spring shift neglected
  double omega_s_corrected = 0.0;    ///< squeezed centre including the spring shift
};

ReservoirFrequencies reservoir_frequencies(const SystemParams& params,
                                           double omega_a);

struct WeakCouplingReport {
  cplx theta_plus{};
  cplx theta_minus{};
  double delta_opt = 0.0;
  double spring_delta = 0.0;
  double gamma_opt = 0.0;
  double gamma_tot = 0.0;
  double n_st = 0.0;
  double var_x = 0.5;
  double var_y = 0.5;
  double n_first_order = 0.0;
  bool first_order_off_optimal = false;
};

WeakCouplingReport weak_coupling_report(const SystemParams& params);

}  // namespace optosqz
