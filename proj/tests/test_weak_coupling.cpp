#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "optosqz/params.hpp"
#include "optosqz/weak_coupling.hpp"

using namespace optosqz;
using doctest::Approx;
using namespace std::complex_literals;

namespace {

SystemParams reference_point() {
  SystemParams p;
  p.kappa_c = 1.0;
  p.omega_m = 3.0;
  p.delta = 1.5;
  p.g_eff_mag = 0.05;
  p.r = 1.0;
  return p;
}

}  // namespace

TEST_CASE("theta") {
  SystemParams p = reference_point();
  const cplx expected = 0.09 / ((1.0 + 4.5i) * (1.0 + 4.5i));
  const cplx t = theta(3.0, p);
  CHECK(t.real() == Approx(expected.real()).epsilon(1e-12));
  CHECK(t.imag() == Approx(expected.imag()).epsilon(1e-12));

  CHECK(std::abs(theta(-p.omega_m, p)) == 0.0);

  p.g_eff_mag = 0.0;
  CHECK(std::abs(theta(3.0, p)) == 0.0);
}

TEST_CASE("theta(-omega_m) vanishes at the optimal detuning") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uw(0.2, 6.0), us(-2.0, 2.0), ug(0.0, 0.3);
  for (int i = 0; i < 200; ++i) {
    SystemParams p;
    p.omega_m = uw(rng);
    p.s_disp = us(rng);
    p.g_eff_mag = ug(rng);
    p.delta = optimal_detuning(p);
    CHECK(std::abs(theta(-p.omega_m, p)) <= 1e-14);
    // gamma_opt = 2 |Theta(omega_m)| there.
    if (p.s_disp == 0.0) {
      CHECK(gamma_opt(p) == Approx(2.0 * std::abs(theta(p.omega_m, p))).epsilon(1e-12));
    }
  }
}

TEST_CASE("gamma_opt matches 2 |Theta(omega_m)| at the optimal detuning") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uw(0.2, 6.0), ug(0.001, 0.3), uk(0.3, 3.0);
  for (int i = 0; i < 100; ++i) {
    SystemParams p;
    p.kappa_c = uk(rng);
    p.omega_m = uw(rng);
    p.g_eff_mag = ug(rng);
    p.delta = optimal_detuning(p);
    CHECK(gamma_opt(p) == Approx(2.0 * std::abs(theta(p.omega_m, p))).epsilon(1e-12));
  }
}

TEST_CASE("optimal detuning") {
  SystemParams p;
  p.omega_m = 3.0;
  CHECK(optimal_detuning(p) == 1.5);
  p.s_disp = 3.0;
  CHECK(optimal_detuning(p) == 0.0);
  p.s_disp = 0.0;
  p.omega_m = 103.0 / 196.0;
  CHECK(optimal_detuning(p) == Approx(0.2628).epsilon(1e-3));
}

TEST_CASE("spring shift") {
  SystemParams p = reference_point();
  CHECK(spring_shift(p) == Approx(-0.0034411764705882).epsilon(1e-12));
  const double base = spring_shift(p);
  p.g_eff_mag *= 2.0;
  CHECK(spring_shift(p) == Approx(4.0 * base).epsilon(1e-14));
  p.g_eff_mag = 0.0;
  CHECK(spring_shift(p) == 0.0);
}

TEST_CASE("energy shift coefficient") {
  SystemParams p = reference_point();
  // theta1(-3) = -1.5/3.25, theta1(3) = 4.5/21.25, theta2(3) = 6/21.25,
  // theta2(-3) = 0: 0.0025 * (3.25 (theta1 sum) - 2 * 6/21.25).
  CHECK(energy_shift_coefficient(p) == Approx(-0.0034411764705882).epsilon(1e-12));
  const double base = energy_shift_coefficient(p);
  p.g_eff_mag *= 3.0;
  CHECK(energy_shift_coefficient(p) == Approx(9.0 * base).epsilon(1e-14));
  p.g_eff_mag = 0.0;
  CHECK(energy_shift_coefficient(p) == 0.0);

  // With a dispersive offset the printed coefficient and the spring shift part ways.
  SystemParams q = reference_point();
  q.s_disp = 0.4;
  q.delta = optimal_detuning(q);
  CHECK(std::isfinite(energy_shift_coefficient(q)));
}

TEST_CASE("optical damping") {
  SystemParams p = reference_point();
  CHECK(gamma_opt(p) == Approx(0.0084705882352941).epsilon(1e-12));
  p.g_eff_mag = 0.0;
  CHECK(gamma_opt(p) == 0.0);

  // Membrane-in-the-middle parameters, kappa_c = 2 pi x 196 kHz.
  const double kappa_hz = 196e3;
  SystemParams e;
  e.kappa_c = 1.0;
  e.omega_m = 103.0 / 196.0;
  e.delta = e.omega_m / 2.0;
  e.g_eff_mag = 0.035;
  const double gamma_hz = gamma_opt(e) * kappa_hz;
  CHECK(gamma_hz == Approx(320.0).epsilon(0.1));
}

TEST_CASE("steady phonon number in the weak-coupling limit") {
  SystemParams p = reference_point();
  CHECK(steady_phonon_weak(p) == Approx(std::pow(std::sinh(1.0), 2)).epsilon(1e-12));
  CHECK(steady_phonon_weak(p) == Approx(1.38).epsilon(1e-2));

  SystemParams t = reference_point();
  t.r = 0.0;
  t.n_th = 100.0;
  t.gamma_m = 1e-4;
  const double g = gamma_opt(t);
  CHECK(steady_phonon_weak(t) == Approx(t.gamma_m * t.n_th / (t.gamma_m + g)));

  t.g_eff_mag = 0.0;
  CHECK(steady_phonon_weak(t) == Approx(100.0));

  t.gamma_m = 0.0;
  CHECK_THROWS_AS(steady_phonon_weak(t), NumericalError);
}

TEST_CASE("steady_phonon_weak monotonicity") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    SystemParams p = reference_point();
    p.r = 1.5 * u(rng);
    p.gamma_m = 0.01 * u(rng) + 1e-6;
    p.n_th = 50.0 * u(rng);
    const double n_bath = std::pow(std::sinh(p.r), 2);
    const double n0 = steady_phonon_weak(p);
    SystemParams hotter = p;
    hotter.n_th += 1.0;
    CHECK(steady_phonon_weak(hotter) >= n0);
    SystemParams stronger = p;
    stronger.g_eff_mag *= 1.5;
    CHECK(std::abs(steady_phonon_weak(stronger) - n_bath) <= std::abs(n0 - n_bath) + 1e-15);
  }
}

TEST_CASE("ideal transferred squeezing") {
  auto v0 = ideal_variances(0.0);
  CHECK(v0.var_x == Approx(0.5));
  CHECK(v0.var_y == Approx(0.5));
  auto v1 = ideal_variances(1.0);
  CHECK(v1.var_x == Approx(0.0676676416).epsilon(1e-9));
  CHECK(v1.var_y == Approx(3.6945280495).epsilon(1e-9));
  for (double r : {0.01, 0.3, 1.0, 2.0}) {
    const auto v = ideal_variances(r);
    CHECK(v.var_x * v.var_y == Approx(0.25).epsilon(1e-12));
    CHECK(v.var_x < 0.5);
    CHECK(v.var_y > 0.5);
    const auto b = derive_bath_moments(r, 0.0);
    CHECK(v.var_x == Approx(b.n_bath + 0.5 - std::abs(b.m_bath)).epsilon(1e-9));
  }
}

TEST_CASE("first-order phonon number") {
  SystemParams p = reference_point();
  const auto fo = first_order_phonon(p);
  CHECK(fo.value == Approx(1.3905).epsilon(1e-4));
  CHECK_FALSE(fo.off_optimal_detuning);

  p.g_eff_mag = 0.0;
  CHECK(first_order_phonon(p).value == Approx(std::pow(std::sinh(1.0), 2)));

  SystemParams v = reference_point();
  v.r = 0.0;
  CHECK(first_order_phonon(v).value == Approx(0.0025));

  v.delta = 1.2;
  CHECK(first_order_phonon(v).off_optimal_detuning);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    SystemParams q = reference_point();
    q.r = 2.0 * u(rng);
    q.g_eff_mag = 0.1 * u(rng) + 1e-6;
    CHECK(first_order_phonon(q).value > std::pow(std::sinh(q.r), 2));
  }
}

TEST_CASE("reservoir frequencies") {
  SystemParams p = reference_point();
  auto f = reservoir_frequencies(p, 100.0);
  CHECK(f.omega_r == Approx(101.5));
  CHECK(f.omega_s == Approx(104.5));
  CHECK(f.omega_s_corrected == Approx(104.5 + spring_shift(p)));

  p.g_eff_mag = 0.0;
  f = reservoir_frequencies(p, 100.0);
  CHECK(f.omega_s_corrected == f.omega_s);

  p.s_disp = p.omega_m;
  CHECK(reservoir_frequencies(p, 100.0).omega_r == Approx(100.0));
}

TEST_CASE("weak-coupling report") {
  SystemParams p = reference_point();
  p.gamma_m = 2e-4;
  p.n_th = 3.0;
  const auto rep = weak_coupling_report(p);
  CHECK(rep.gamma_tot == rep.gamma_opt + p.gamma_m);
  CHECK(rep.var_x * rep.var_y == Approx(0.25));
  CHECK(rep.delta_opt == 1.5);
  CHECK(std::abs(rep.theta_minus) == 0.0);
  CHECK(rep.n_st == Approx(steady_phonon_weak(p)));
  CHECK_FALSE(rep.first_order_off_optimal);
}
