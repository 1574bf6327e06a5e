#include "optosqz/params.hpp"

#include <cmath>

namespace optosqz {

namespace {

void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw ConfigError(std::string(name) + " must be finite");
  }
}

void require_positive(double value, const char* name) {
  require_finite(value, name);
  if (!(value > 0.0)) {
    throw ConfigError(std::string(name) + " must be positive");
  }
}

void require_non_negative(double value, const char* name) {
  require_finite(value, name);
  if (value < 0.0) {
    throw ConfigError(std::string(name) + " must be non-negative");
  }
}

}  // namespace

ValidatedParams validate(const SystemParams& params) {
  require_positive(params.kappa_c, "kappa_c");
  require_positive(params.omega_m, "omega_m");
  require_finite(params.delta, "delta");
  require_finite(params.delta_s, "delta_s");
  require_non_negative(params.g_eff_mag, "g_eff");
  require_finite(params.s_disp, "s_disp");
  require_non_negative(params.r, "r");
  require_finite(params.phi, "phi");
  require_non_negative(params.n_th, "n_th");
  require_non_negative(params.gamma_m, "gamma_m");

  ValidatedParams out;
  out.values = params;
  out.weak_coupling =
      params.coupling_strength() / params.kappa_c <= kWeakCouplingThreshold;
  return out;
}

SqueezedBathMoments derive_bath_moments(double r, double phi) {
  require_non_negative(r, "r");
  require_finite(phi, "phi");
  const double sh = std::sinh(r);
  const double ch = std::cosh(r);
  return {sh * sh, std::polar(sh * ch, phi)};
}

cplx cavity_mean_field(double delta, double kappa_c, cplx a_in) {
  require_positive(kappa_c, "kappa_c");
  require_finite(delta, "delta");
  if (!std::isfinite(a_in.real()) || !std::isfinite(a_in.imag())) {
    throw ConfigError("a_in must be finite");
  }
  return std::sqrt(2.0 * kappa_c) * a_in / cplx(-kappa_c, delta);
}

DerivedCouplings derive_couplings(const SystemParams& params) {
  DerivedCouplings c;
  c.zeta = 4.0 * params.g_eff_mag;
  c.chi = c.zeta * cplx(-params.kappa_c, params.delta) / (2.0 * params.kappa_c);
  c.xi = -c.chi - c.zeta;
  return c;
}

SystemParams rescale_rates(const SystemParams& params, double factor) {
  SystemParams out = params;
  out.kappa_c *= factor;
  out.omega_m *= factor;
  out.delta *= factor;
  out.delta_s *= factor;
  out.g_eff_mag *= factor;
  out.s_disp *= factor;
  out.gamma_m *= factor;
  return out;
}

}  // namespace optosqz
