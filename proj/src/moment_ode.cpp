#include <algorithm>
#include <cmath>
#include <numbers>

#include "optosqz/fock_oracle.hpp"

namespace optosqz {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr double kDivergenceNorm = 1e6;

}  // namespace

double max_moment_step(const DriftSystem& drift, double delta_s) {
  const auto stab = stability_eigenvalues(drift.a_matrix, drift.kappa_c);
  const double fastest =
      std::max({2.0 * std::abs(delta_s), drift.kappa_c, stab.spectral_radius});
  return 0.05 / fastest;
}

MomentTrajectory propagate_moment_odes(const DriftSystem& drift, double delta_s,
                                       const MomentVector& x0, double t_end, double dt,
                                       TrajectorySampling sampling) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) {
    throw ConfigError("propagation needs dt > 0 and t_end >= 0");
  }
  if (dt > max_moment_step(drift, delta_s) * (1.0 + 1e-12)) {
    throw ConfigError("dt does not resolve the fastest scale of the moment equations");
  }
  if (sampling.stride < 1) throw ConfigError("sampling stride must be >= 1");

  const DriftMatrix& a = drift.a_matrix;
  const double omega = 2.0 * delta_s;
  auto rhs = [&](double t, const MomentVector& x) -> MomentVector {
    const cplx phase = std::exp(kI * (omega * t));
    return a * x + drift.b_plus * phase + drift.b_minus * std::conj(phase) + drift.b_zero;
  };

  MomentTrajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  MomentVector x = x0;
  for (long n = 0; n < steps; ++n) {
    const double t = n * dt;
    const MomentVector k1 = rhs(t, x);
    const MomentVector k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
    const MomentVector k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
    const MomentVector k4 = rhs(t + dt, x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double t_next = (n + 1) * dt;
    if ((n + 1) % 1024 == 0 && !(x.cwiseAbs().maxCoeff() < kDivergenceNorm)) {
      throw InstabilityError("moment trajectory diverges at t = " + std::to_string(t_next));
    }
    if (t_next >= sampling.record_from && (n + 1) % sampling.stride == 0) {
      traj.times.push_back(t_next);
      traj.states.push_back(x);
    }
  }
  if (!(x.cwiseAbs().maxCoeff() < kDivergenceNorm)) {
    throw InstabilityError("moment trajectory diverges");
  }
  return traj;
}

MomentOdeCheck check_moment_ode(const DriftSystem& drift, const HarmonicSteadyState& hss,
                                const MomentVector& x0, double accuracy,
                                double decay_factor) {
  const auto stab = stability_eigenvalues(drift.a_matrix, drift.kappa_c);
  if (!stab.hurwitz) {
    throw InstabilityError("no unique steady state: drift matrix is not Hurwitz");
  }
  const double delta_s = hss.delta_s;
  const double fastest = std::max(2.0 * std::abs(delta_s), stab.spectral_radius);

  // A weakly damped mode driven near resonance turns the RK4 per-step phase
  // error (w dt)^5 / 120 into a response error of about w^5 dt^4 / (120 gamma).
  const double scale = std::max({hss.x_zero.cwiseAbs().maxCoeff(),
                                 hss.x_plus.cwiseAbs().maxCoeff(), 1.0});
  const double dt_accurate = std::pow(
      accuracy * 120.0 * stab.slowest_decay / (std::pow(fastest, 5) * scale), 0.25);
  double dt = std::min(max_moment_step(drift, delta_s), dt_accurate);

  // Whole number of steps per drive period.
  const double period = std::numbers::pi / std::abs(delta_s);
  const long per_period = static_cast<long>(std::ceil(period / dt));
  dt = period / static_cast<double>(per_period);
  const long periods =
      static_cast<long>(std::ceil(decay_factor / stab.slowest_decay / period)) + 1;
  const double t_end = static_cast<double>(periods * per_period) * dt;

  TrajectorySampling sampling;
  sampling.record_from = t_end - period * (1.0 + 1e-9);
  const auto traj = propagate_moment_odes(drift, delta_s, x0, t_end, dt, sampling);

  MomentOdeCheck out;
  out.dt = dt;
  out.t_end = t_end;
  out.steps = periods * per_period;
  int counted = 0;
  for (std::size_t i = 1; i < traj.states.size(); ++i) {
    const double t = traj.times[i];
    out.max_error =
        std::max(out.max_error, (traj.states[i] - hss.at(t)).cwiseAbs().maxCoeff());
    if (i + 1 < traj.states.size()) {
      const auto& x = traj.states[i];
      out.mean_phonon +=
          (x(moment::kFpFp).real() - x(moment::kFmFm).real() - 2.0) / 4.0;
      ++counted;
    }
  }
  if (counted > 0) out.mean_phonon /= counted;
  return out;
}

}  // namespace optosqz
