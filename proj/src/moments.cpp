#include "optosqz/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Eigenvalues>

#include "optosqz/weak_coupling.hpp"

namespace optosqz {

namespace {

constexpr cplx kI{0.0, 1.0};

void require_dissipative(const SystemParams& p) {
  if (p.s_disp != 0.0) {
    throw ConfigError(
        "s_disp must be 0: the full moment model covers purely dissipative "
        "coupling only");
  }
}

// Relative residual of M x = b.
template <typename Mat>
double relative_residual(const Mat& m, const MomentVector& x, const MomentVector& b) {
  const double scale = m.cwiseAbs().rowwise().sum().maxCoeff() * x.cwiseAbs().maxCoeff() +
                       b.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m * x - b).cwiseAbs().maxCoeff() / scale;
}

struct SolveResult {
  MomentVector x;
  double residual;
  double rcond;
};

SolveResult solve_refined(const DriftMatrix& m, const MomentVector& b) {
  Eigen::PartialPivLU<DriftMatrix> lu(m);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    throw NumericalError("singular harmonic solve (rcond = " + std::to_string(rc) + ")");
  }
  MomentVector x = lu.solve(b);
  x += lu.solve(b - m * x);
  return {x, relative_residual(m, x, b), rc};
}

void check_residual(double residual) {
  if (!(residual < 1e-10)) {
    throw NumericalError("harmonic steady state residual too large: " +
                         std::to_string(residual));
  }
}

}  // namespace

DriftMatrix build_drift_matrix(const SystemParams& p) {
  require_dissipative(p);
  const auto c = derive_couplings(p);
  const cplx chi = c.chi;
  const cplx chi_c = std::conj(c.chi);
  const cplx xi = c.xi;
  const cplx xi_c = std::conj(c.xi);
  const cplx lower = cplx(-p.kappa_c, p.delta);    // i Delta - kappa
  const cplx upper = cplx(-p.kappa_c, -p.delta);   // -(i Delta + kappa)
  const cplx wm = kI * p.omega_m;

  DriftMatrix a = DriftMatrix::Zero();
  using namespace moment;
  a(kDD, kDD) = 2.0 * lower;
  a(kDD, kDFp) = xi;

  a(kDdDd, kDdDd) = 2.0 * upper;
  a(kDdDd, kDdFp) = xi_c;

  a(kDdD, kDdD) = -2.0 * p.kappa_c;
  a(kDdD, kDFp) = xi_c / 2.0;
  a(kDdD, kDdFp) = xi / 2.0;

  a(kDFp, kDFp) = lower;
  a(kDFp, kDFm) = -wm;
  a(kDFp, kFpFp) = xi / 2.0;

  a(kDFm, kDD) = chi_c;
  a(kDFm, kDdD) = -chi;
  a(kDFm, kDFp) = -wm;
  a(kDFm, kDFm) = lower;
  a(kDFm, kFmFp) = xi / 2.0;

  a(kDdFp, kDdFp) = upper;
  a(kDdFp, kDdFm) = -wm;
  a(kDdFp, kFpFp) = xi_c / 2.0;

  a(kDdFm, kDdDd) = -chi;
  a(kDdFm, kDdD) = chi_c;
  a(kDdFm, kDdFp) = -wm;
  a(kDdFm, kDdFm) = upper;
  a(kDdFm, kFmFp) = xi_c / 2.0;

  a(kFpFp, kFmFp) = -2.0 * wm;

  a(kFmFp, kDFp) = chi_c;
  a(kFmFp, kDdFp) = -chi;
  a(kFmFp, kFpFp) = -wm;
  a(kFmFp, kFmFm) = -wm;

  a(kFmFm, kDFm) = 2.0 * chi_c;
  a(kFmFm, kDdFm) = -2.0 * chi;
  a(kFmFm, kFmFp) = -2.0 * wm;
  return a;
}

DriveVectors build_drive_vectors(const SystemParams& p) {
  require_dissipative(p);
  const auto bath = derive_bath_moments(p.r, p.phi);
  const auto c = derive_couplings(p);
  const double n = bath.n_bath;
  const cplx m = bath.m_bath;
  const cplx m_c = std::conj(m);
  const cplx zeta = c.zeta;
  const cplx zeta_c = std::conj(zeta);
  const double k = p.kappa_c;
  const cplx wm = kI * p.omega_m;

  DriveVectors b;
  using namespace moment;
  b.b_plus(kDdDd) = 2.0 * k * m_c;
  b.b_plus(kDdFm) = -zeta * m_c;
  b.b_plus(kFmFm) = zeta * zeta * m_c / (2.0 * k);

  b.b_minus(kDD) = 2.0 * k * m;
  b.b_minus(kDFm) = zeta_c * m;
  b.b_minus(kFmFm) = zeta_c * zeta_c * m / (2.0 * k);

  b.b_zero(kDdD) = 2.0 * k * n;
  b.b_zero(kDFm) = -zeta * n;
  b.b_zero(kDdFm) = std::conj(c.chi) + zeta_c * (n + 1.0);
  b.b_zero(kFpFp) = 2.0 * wm;
  b.b_zero(kFmFm) = 2.0 * wm - (2.0 * n + 1.0) * std::norm(zeta) / (2.0 * k);
  return b;
}

DriftSystem build_drift_system(const SystemParams& params) {
  validate(params);
  DriftSystem sys;
  sys.a_matrix = build_drift_matrix(params);
  const auto b = build_drive_vectors(params);
  sys.b_plus = b.b_plus;
  sys.b_minus = b.b_minus;
  sys.b_zero = b.b_zero;
  sys.kappa_c = params.kappa_c;
  return sys;
}

MomentVector vacuum_moments() {
  MomentVector x = MomentVector::Zero();
  x(moment::kFpFp) = 1.0;
  x(moment::kFmFp) = 1.0;
  x(moment::kFmFm) = -1.0;
  return x;
}

StabilityReport stability_eigenvalues(const DriftMatrix& a_matrix, double kappa_c) {
  Eigen::ComplexEigenSolver<DriftMatrix> solver(a_matrix, false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigenvalue solver failed on drift matrix");
  }
  StabilityReport rep;
  rep.spectral_abscissa = -std::numeric_limits<double>::infinity();
  rep.slowest_decay = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kMomentDim; ++i) {
    const cplx ev = solver.eigenvalues()(i);
    rep.eigenvalues[static_cast<std::size_t>(i)] = ev;
    rep.spectral_abscissa = std::max(rep.spectral_abscissa, ev.real());
    rep.slowest_decay = std::min(rep.slowest_decay, std::abs(ev.real()));
    rep.spectral_radius = std::max(rep.spectral_radius, std::abs(ev));
  }
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
            [](cplx a, cplx b) {
              return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            });
  rep.hurwitz = rep.spectral_abscissa < -kStabilityMargin * kappa_c;
  return rep;
}

MomentVector HarmonicSteadyState::at(double t) const {
  const cplx phase = std::exp(kI * (2.0 * delta_s * t));
  return x_zero + x_plus * phase + x_minus * std::conj(phase);
}

SteadyStateSolver::SteadyStateSolver(DriftSystem system)
    : system_(std::move(system)),
      stability_(stability_eigenvalues(system_.a_matrix, system_.kappa_c)) {
  if (!stability_.hurwitz) {
    throw InstabilityError(
        "no unique steady state: drift matrix is not Hurwitz (max Re eig = " +
        std::to_string(stability_.spectral_abscissa) + ")");
  }
  const DriftMatrix neg_a = -system_.a_matrix;
  const auto zero = solve_refined(neg_a, system_.b_zero);
  x_zero_ = zero.x;
  residual_zero_ = zero.residual;
  check_residual(residual_zero_);
  lu_zero_.compute(neg_a);
}

HarmonicSteadyState SteadyStateSolver::solve(double delta_s) const {
  HarmonicSteadyState hss;
  hss.delta_s = delta_s;
  hss.x_zero = x_zero_;
  hss.rcond = lu_zero_.rcond();
  hss.residual = residual_zero_;

  const DriftMatrix id = DriftMatrix::Identity();
  const cplx drive = kI * (2.0 * delta_s);
  if (system_.b_plus.cwiseAbs().maxCoeff() > 0.0) {
    const auto plus = solve_refined(drive * id - system_.a_matrix, system_.b_plus);
    hss.x_plus = plus.x;
    hss.residual = std::max(hss.residual, plus.residual);
    hss.rcond = std::min(hss.rcond, plus.rcond);
  }
  if (system_.b_minus.cwiseAbs().maxCoeff() > 0.0) {
    // X- = -(i 2 Ds + A)^{-1} B-
    const auto minus = solve_refined(-(drive * id + system_.a_matrix), system_.b_minus);
    hss.x_minus = minus.x;
    hss.residual = std::max(hss.residual, minus.residual);
    hss.rcond = std::min(hss.rcond, minus.rcond);
  }
  check_residual(hss.residual);
  return hss;
}

HarmonicSteadyState harmonic_steady_state(const DriftSystem& drift, double delta_s) {
  return SteadyStateSolver(drift).solve(delta_s);
}

MirrorObservables extract_observables(const HarmonicSteadyState& hss, double tolerance) {
  using namespace moment;
  MirrorObservables obs;
  const auto& x0 = hss.x_zero;
  const auto& xm = hss.x_minus;
  // <f+^2> - <f-^2> = 4 <f^dag f> + 2
  obs.n_st = (x0(kFpFp).real() - x0(kFmFm).real() - 2.0) / 4.0;
  if (obs.n_st < -tolerance) {
    throw NumericalError("negative phonon number " + std::to_string(obs.n_st) +
                         ": unconverged or unstable solve");
  }
  // f^2 = (f+^2 + f-^2)/4 + f- f+/2 - 1/2; the constant only enters the DC part.
  obs.f2_amp = (xm(kFpFp) + xm(kFmFm)) / 4.0 + xm(kFmFp) / 2.0;
  const double amp = std::abs(obs.f2_amp);
  obs.var_min = obs.n_st + 0.5 - amp;
  obs.var_max = obs.n_st + 0.5 + amp;
  obs.is_squeezed = obs.var_min < 0.5;
  obs.deviation_gap = squeezed_state_deviation(obs);
  return obs;
}

double squeezed_state_deviation(const MirrorObservables& obs) {
  const double n = std::max(obs.n_st, 0.0);
  return std::sqrt(n * (n + 1.0)) - std::abs(obs.f2_amp);
}

double analytic_phonon_full(const SystemParams& params) {
  validate(params);
  require_dissipative(params);
  const SystemParams p = normalized(params);
  constexpr double eps = 1e-6;
  const double d = p.delta;
  const double w = p.omega_m;
  const double d2 = d * d;
  if (std::abs(d) < eps || std::abs(d2 - 1.0) < eps) {
    throw ConfigError("analytic phonon number is singular at delta = 0, +-kappa_c");
  }
  // chi^2 read as |chi|^2 under the real cavity-field convention.
  const double chi2 = std::norm(derive_couplings(p).chi);
  const double n = derive_bath_moments(p.r, p.phi).n_bath;
  const double s = d2 + 1.0;  // Delta^2 + kappa^2
  const double m = d2 - 1.0;  // Delta^2 - kappa^2

  const double first = (w * m * (w - 2.0 * d) - d2 * s) / (w * d * m);
  const double den_a = chi2 * d * (d2 - 3.0) + w * s * s;
  const double den_b = d * s * (2.0 * d2 - 2.0 - w * w) + chi2 * d2 * w;
  if (std::abs(den_a) < eps || std::abs(den_b) < eps) {
    throw NumericalError("analytic phonon number hits a pole of its closed form");
  }
  const double bracket = -d * s / den_a + (chi2 * d / 2.0 - s * w) / den_b;
  return n + (1.0 + 2.0 * n) / 4.0 * (first + s * s / m * bracket);
}

SearchWindow default_squeezing_window(const SystemParams& p) {
  const double scale = std::max(std::abs(spring_shift(p)), 1e-3 * p.kappa_c);
  return {p.omega_m - 5.0 * scale, p.omega_m + 5.0 * scale};
}

namespace {

struct Bracketed {
  double x;
  double fx;
};

template <typename F>
Bracketed golden_section(F&& f, double lo, double hi, double tol, int& evals) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  evals += 2;
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  return fc < fd ? Bracketed{c, fc} : Bracketed{d, fd};
}

}  // namespace

SqueezingOptimum optimize_squeezing(const SystemParams& params,
                                    std::optional<SearchWindow> window) {
  validate(params);
  const SteadyStateSolver solver(build_drift_system(params));
  SqueezingOptimum out;
  out.window = window.value_or(default_squeezing_window(params));
  if (!(out.window.lo < out.window.hi)) {
    throw ConfigError("squeezing search window must satisfy lo < hi");
  }
  const double tol = 1e-8 * params.kappa_c;

  auto objective = [&](double ds) {
    return extract_observables(solver.solve(ds)).var_min;
  };

  auto best = golden_section(objective, out.window.lo, out.window.hi, tol, out.evaluations);
  const double f_lo = objective(out.window.lo);
  const double f_hi = objective(out.window.hi);
  out.evaluations += 2;

  if (f_lo < best.fx || f_hi < best.fx) {
    out.non_unimodal = true;
    constexpr int kGrid = 101;
    const double step = (out.window.hi - out.window.lo) / (kGrid - 1);
    int arg = 0;
    double f_arg = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGrid; ++i) {
      const double v = objective(out.window.lo + step * i);
      if (v < f_arg) {
        f_arg = v;
        arg = i;
      }
    }
    out.evaluations += kGrid;
    const double lo = out.window.lo + step * std::max(arg - 1, 0);
    const double hi = out.window.lo + step * std::min(arg + 1, kGrid - 1);
    best = golden_section(objective, lo, hi, tol, out.evaluations);
    if (f_arg < best.fx) best = {out.window.lo + step * arg, f_arg};
  }

  out.delta_s = best.x;
  out.steady_state = solver.solve(best.x);
  out.observables = extract_observables(out.steady_state);
  out.var_min = out.observables.var_min;
  return out;
}

PointSolution solve_point(const SystemParams& params) {
  validate(params);
  const SteadyStateSolver solver(build_drift_system(params));
  PointSolution out;
  out.stability = solver.stability();
  out.steady_state = solver.solve(params.delta_s);
  out.observables = extract_observables(out.steady_state);
  return out;
}

}  // namespace optosqz
