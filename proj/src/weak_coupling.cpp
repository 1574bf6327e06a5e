#include "optosqz/weak_coupling.hpp"

#include <cmath>

namespace optosqz {

namespace {

double sq(double x) { return x * x; }

// Lorentzian denominator (Delta + omega)^2 + kappa_c^2.
double lorentz(const SystemParams& p, double omega) {
  return sq(p.delta + omega) + sq(p.kappa_c);
}

// |g_eff|^2 / kappa_c^2
double coupling_ratio(const SystemParams& p) {
  return sq(p.g_eff_mag) / sq(p.kappa_c);
}

}  // namespace

cplx theta(double omega, const SystemParams& p) {
  const double numerator = sq(2.0 * p.delta + omega + p.s_disp);
  const cplx denom = cplx(p.kappa_c, p.delta + omega);
  return sq(p.g_eff_mag) / p.kappa_c * numerator / (denom * denom);
}

double optimal_detuning(const SystemParams& p) {
  return 0.5 * p.omega_m - 0.5 * p.s_disp;
}

double spring_shift(const SystemParams& p) {
  const double k2 = sq(p.kappa_c);
  const double num =
      2.0 * p.delta * (sq(p.delta) - sq(p.omega_m) + k2) - 4.0 * k2 * p.omega_m;
  return coupling_ratio(p) * num / lorentz(p, p.omega_m);
}

double energy_shift_coefficient(const SystemParams& p) {
  const double w = p.omega_m;
  const double k2 = sq(p.kappa_c);
  auto theta1 = [&](double omega) { return (p.delta + omega) / lorentz(p, omega); };
  auto theta2 = [&](double omega) {
    return (2.0 * p.delta + omega + p.s_disp) / lorentz(p, omega);
  };
  const double brace = (sq(p.s_disp + p.delta) + k2) * (theta1(-w) + theta1(w)) -
                       2.0 * k2 * (theta2(w) + theta2(-w));
  return coupling_ratio(p) * brace;
}

double gamma_opt(const SystemParams& p) {
  return 2.0 * sq(p.g_eff_mag) / p.kappa_c * 4.0 * sq(p.omega_m) /
         lorentz(p, p.omega_m);
}

double total_damping(const SystemParams& p) { return p.gamma_m + gamma_opt(p); }

double steady_phonon_weak(const SystemParams& p) {
  const double g_opt = gamma_opt(p);
  const double g_tot = p.gamma_m + g_opt;
  if (!(g_tot > 0.0)) {
    throw NumericalError("no steady state: gamma_m and gamma_opt both vanish");
  }
  const double n_bath = derive_bath_moments(p.r, p.phi).n_bath;
  return (p.gamma_m * p.n_th + g_opt * n_bath) / g_tot;
}

QuadratureVariances ideal_variances(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ConfigError("r must be non-negative");
  }
  return {0.5 * std::exp(-2.0 * r), 0.5 * std::exp(2.0 * r)};
}

FirstOrderPhonon first_order_phonon(const SystemParams& p) {
  const double n_bath = derive_bath_moments(p.r, p.phi).n_bath;
  FirstOrderPhonon out;
  out.value = n_bath + (1.0 + 2.0 * n_bath) * coupling_ratio(p);
  out.off_optimal_detuning =
      std::abs(p.delta - optimal_detuning(p)) > 1e-9 * p.kappa_c;
  return out;
}

ReservoirFrequencies reservoir_frequencies(const SystemParams& p, double omega_a) {
  ReservoirFrequencies out;
  out.omega_r = omega_a + optimal_detuning(p);
  out.omega_s = out.omega_r + p.omega_m;
  out.omega_s_corrected = out.omega_s + spring_shift(p);
  return out;
}

WeakCouplingReport weak_coupling_report(const SystemParams& p) {
  WeakCouplingReport rep;
  rep.theta_plus = theta(p.omega_m, p);
  rep.theta_minus = theta(-p.omega_m, p);
  rep.delta_opt = optimal_detuning(p);
  rep.spring_delta = spring_shift(p);
  rep.gamma_opt = gamma_opt(p);
  rep.gamma_tot = p.gamma_m + rep.gamma_opt;
  rep.n_st = steady_phonon_weak(p);
  const auto v = ideal_variances(p.r);
  rep.var_x = v.var_x;
  rep.var_y = v.var_y;
  const auto fo = first_order_phonon(p);
  rep.n_first_order = fo.value;
  rep.first_order_off_optimal = fo.off_optimal_detuning;
  return rep;
}

}  // namespace optosqz
