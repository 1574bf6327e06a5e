#pragma once

// System parameters for a dissipatively coupled optomechanical cavity driven
// by a coherent laser plus broadband squeezed vacuum.
//
// Every rate is expressed in the same unit as kappa_c. The library treats
// kappa_c as the natural unit (kappa_c = 1) but keeps it as an explicit field
// so that all formulas stay homogeneous in the rates.

#include <complex>
#include <stdexcept>
#include <string>

namespace optosqz {

using cplx = std::complex<double>;

/// Couplings with G_eff / kappa_c at or below this value are classified as
/// weak (adiabatic elimination of the cavity is trusted).
inline constexpr double kWeakCouplingThreshold = 0.1;

/// Invalid or unsupported input. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver-level failure: instability, singular solve, truncation leak.
/// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemParams {
  double kappa_c = 1.0;   ///< cavity half-linewidth
  double omega_m = 3.0;   ///< mechanical frequency
  double delta = 1.5;     ///< laser detuning omega_R - omega_a
  double delta_s = 3.0;   ///< squeezed-reservoir detuning omega_s - omega_R
  double g_eff_mag = 0.05;  ///< |g_eff|, effective dissipative coupling
  double s_disp = 0.0;    ///< dispersive offset (alpha/beta) sqrt(2 kappa_c c / L)
  double r = 0.0;         ///< squeezing parameter
  double phi = 0.0;       ///< squeezing phase
  double n_th = 0.0;      ///< thermal phonon occupation
  double gamma_m = 0.0;   ///< intrinsic mechanical damping

  /// G_eff = 2 |g_eff|.
  [[nodiscard]] double coupling_strength() const { return 2.0 * g_eff_mag; }
};

struct ValidatedParams {
  SystemParams values;
  bool weak_coupling = false;
};

/// Range-checks every field. Throws ConfigError naming the offending field.
ValidatedParams validate(const SystemParams& params);

/// Second moments of the squeezed vacuum input.
struct SqueezedBathMoments {
  double n_bath = 0.0;  ///< N = sinh^2 r
  cplx m_bath{};        ///< M = sinh r cosh r e^{i phi}
};

SqueezedBathMoments derive_bath_moments(double r, double phi);

/// Steady cavity amplitude for a coherent input amplitude a_in.
cplx cavity_mean_field(double delta, double kappa_c, cplx a_in);

/// Couplings entering the second-moment equations, under the convention that
/// the cavity mean field is real and non-negative.
struct DerivedCouplings {
  cplx a_bar_phase{1.0, 0.0};  ///< unit phasor of the cavity mean field
  cplx zeta{};                 ///< 4 g_eff
  cplx chi{};                  ///< zeta (i Delta - kappa_c) / (2 kappa_c)
  cplx xi{};                   ///< -chi - zeta
};

DerivedCouplings derive_couplings(const SystemParams& params);

/// Multiplies every rate field (including kappa_c) by `factor`.
SystemParams rescale_rates(const SystemParams& params, double factor);

/// Returns the same physical system with kappa_c = 1.
inline SystemParams normalized(const SystemParams& params) {
  return rescale_rates(params, 1.0 / params.kappa_c);
}

/// Conversion between rates in units of kappa_c and physical angular rates,
/// given the physical kappa_c (in the same angular unit as the result).
inline double to_physical_rate(double rate_in_kappa, double kappa_physical) {
  return rate_in_kappa * kappa_physical;
}
inline double from_physical_rate(double rate, double kappa_physical) {
  return rate / kappa_physical;
}

}  // namespace optosqz
