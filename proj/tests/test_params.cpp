#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "optosqz/moments.hpp"
#include "optosqz/params.hpp"
#include "optosqz/weak_coupling.hpp"

using namespace optosqz;
using doctest::Approx;

TEST_CASE("bath moments of the squeezed vacuum") {
  auto vac = derive_bath_moments(0.0, 0.0);
  CHECK(vac.n_bath == 0.0);
  CHECK(std::abs(vac.m_bath) == 0.0);

  auto b = derive_bath_moments(1.0, 0.0);
  CHECK(b.n_bath == Approx(1.3810978455).epsilon(1e-10));
  CHECK(b.m_bath.real() == Approx(1.8134302039).epsilon(1e-10));
  CHECK(b.m_bath.imag() == 0.0);

  CHECK(std::arg(derive_bath_moments(0.7, 1.2).m_bath) == Approx(1.2));

  CHECK_THROWS_AS(derive_bath_moments(-0.1, 0.0), ConfigError);
  CHECK_THROWS_AS(derive_bath_moments(std::nan(""), 0.0), ConfigError);
  CHECK_THROWS_AS(derive_bath_moments(0.5, INFINITY), ConfigError);
}

TEST_CASE("hyperbolic identity |M|^2 = N (N + 1)") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(0.0, 3.0), uphi(-10.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    const auto b = derive_bath_moments(ur(rng), uphi(rng));
    const double lhs = std::norm(b.m_bath);
    const double rhs = b.n_bath * (b.n_bath + 1.0);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, rhs));
  }
}

TEST_CASE("cavity mean field") {
  CHECK(std::abs(cavity_mean_field(0.7, 1.0, 0.0)) == 0.0);
  const cplx a = cavity_mean_field(0.0, 1.0, 1.0);
  CHECK(a.real() == Approx(-std::sqrt(2.0)));
  CHECK(a.imag() == Approx(0.0));
  for (double d : {0.3, 1.5, 4.0}) {
    CHECK(std::abs(cavity_mean_field(d, 1.0, 2.5)) ==
          Approx(std::abs(cavity_mean_field(-d, 1.0, 2.5))));
  }
  CHECK_THROWS_AS(cavity_mean_field(1.0, 0.0, 1.0), ConfigError);
}

TEST_CASE("derived couplings") {
  SystemParams p;
  p.g_eff_mag = 0.0;
  auto z = derive_couplings(p);
  CHECK(std::abs(z.zeta) == 0.0);
  CHECK(std::abs(z.chi) == 0.0);
  CHECK(std::abs(z.xi) == 0.0);

  p.g_eff_mag = 0.05;
  p.delta = 1.5;
  auto c = derive_couplings(p);
  CHECK(c.zeta.real() == Approx(0.2));
  CHECK(c.zeta.imag() == 0.0);
  CHECK(c.chi.real() == Approx(-0.1));
  CHECK(c.chi.imag() == Approx(0.15));
  CHECK(c.xi.real() == Approx(-0.1));
  CHECK(c.xi.imag() == Approx(-0.15));
  CHECK(c.a_bar_phase == cplx(1.0, 0.0));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0), up(0.01, 3.0);
  for (int i = 0; i < 200; ++i) {
    SystemParams q;
    q.kappa_c = up(rng);
    q.delta = u(rng);
    q.g_eff_mag = up(rng);
    const auto d = derive_couplings(q);
    CHECK(std::abs(d.xi + d.chi + d.zeta) <= 1e-14 * std::abs(d.zeta));
    const cplx gap = 2.0 * q.kappa_c * d.chi - d.zeta * cplx(-q.kappa_c, q.delta);
    CHECK(std::abs(gap) <= 1e-13 * std::abs(d.zeta) * (1.0 + std::abs(q.delta)));
  }
}

TEST_CASE("validate") {
  SystemParams p;
  p.omega_m = -1.0;
  try {
    validate(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "omega_m must be positive");
  }

  SystemParams q;
  q.g_eff_mag = 0.035;  // G_eff = 0.07
  CHECK(validate(q).weak_coupling);
  q.g_eff_mag = 0.05;  // G_eff = 0.1, the threshold itself
  CHECK(validate(q).weak_coupling);
  q.g_eff_mag = 0.2;  // G_eff = 0.4
  CHECK_FALSE(validate(q).weak_coupling);

  for (auto mutate : {+[](SystemParams& s) { s.kappa_c = 0.0; },
                      +[](SystemParams& s) { s.g_eff_mag = -0.1; },
                      +[](SystemParams& s) { s.r = -1.0; },
                      +[](SystemParams& s) { s.n_th = -1.0; },
                      +[](SystemParams& s) { s.gamma_m = -1e-3; },
                      +[](SystemParams& s) { s.delta = std::nan(""); },
                      +[](SystemParams& s) { s.phi = INFINITY; }}) {
    SystemParams s;
    mutate(s);
    CHECK_THROWS_AS(validate(s), ConfigError);
  }
}

TEST_CASE("physical-rate conversion") {
  const double kappa = 2.0 * std::numbers::pi * 196e3;
  CHECK(to_physical_rate(0.5, kappa) == Approx(std::numbers::pi * 196e3));
  CHECK(from_physical_rate(to_physical_rate(0.123, kappa), kappa) == Approx(0.123));
}

TEST_CASE("rescaling every rate leaves dimensionless outputs unchanged") {
  const double lambda = 2.0 * std::numbers::pi * 196000.0;
  SystemParams p;
  p.omega_m = 3.0;
  p.delta = 1.5;
  p.g_eff_mag = 0.05;
  p.r = 1.0;
  p.phi = 0.4;
  p.n_th = 5.0;
  p.gamma_m = 1e-3;
  p.delta_s = 2.9965;
  const SystemParams big = rescale_rates(p, lambda);
  CHECK(big.kappa_c == Approx(lambda));
  CHECK(big.n_th == p.n_th);
  CHECK(big.r == p.r);

  CHECK(gamma_opt(big) == Approx(lambda * gamma_opt(p)).epsilon(1e-12));
  CHECK(spring_shift(big) == Approx(lambda * spring_shift(p)).epsilon(1e-12));
  CHECK(steady_phonon_weak(big) == Approx(steady_phonon_weak(p)).epsilon(1e-12));
  CHECK(first_order_phonon(big).value == Approx(first_order_phonon(p).value).epsilon(1e-12));

  const auto a = solve_point(p).observables;
  const auto b = solve_point(big).observables;
  CHECK(b.n_st == Approx(a.n_st).epsilon(1e-9));
  CHECK(b.var_min == Approx(a.var_min).epsilon(1e-9));
  CHECK(b.var_max == Approx(a.var_max).epsilon(1e-9));
  CHECK(analytic_phonon_full(big) == Approx(analytic_phonon_full(p)).epsilon(1e-9));

  const SystemParams back = normalized(big);
  CHECK(back.kappa_c == Approx(1.0));
  CHECK(back.omega_m == Approx(p.omega_m));
}
