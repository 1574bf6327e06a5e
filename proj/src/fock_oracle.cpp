#include "optosqz/fock_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/KroneckerProduct>
#ifdef OPTOSQZ_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace optosqz {

namespace {

constexpr cplx kI{0.0, 1.0};

SparseOperator identity(int n) {
  SparseOperator id(n, n);
  id.setIdentity();
  return id;
}

SparseOperator annihilation(int n) {
  SparseOperator a(n, n);
  std::vector<Eigen::Triplet<cplx>> t;
  for (int k = 1; k < n; ++k) t.emplace_back(k - 1, k, std::sqrt(static_cast<double>(k)));
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// Column-stacking: vec(X rho Y) = (Y^T kron X) vec(rho).
class SuperOps {
 public:
  explicit SuperOps(int dim) : id_(identity(dim)) {}

  [[nodiscard]] SparseOperator left(const SparseOperator& x) const {
    return Eigen::kroneckerProduct(id_, x);
  }
  [[nodiscard]] SparseOperator right(const SparseOperator& y) const {
    SparseOperator yt = y.transpose();
    return Eigen::kroneckerProduct(yt, id_);
  }
  [[nodiscard]] SparseOperator sandwich(const SparseOperator& x, const SparseOperator& y) const {
    SparseOperator yt = y.transpose();
    return Eigen::kroneckerProduct(yt, x);
  }
  [[nodiscard]] SparseOperator commutator(const SparseOperator& h) const {
    return left(h) - right(h);
  }

 private:
  SparseOperator id_;
};

struct SparseLadders {
  SparseOperator d;
  SparseOperator f;
};

SparseLadders sparse_ladders(const FockConfig& fock) {
  const SparseOperator a = annihilation(fock.dim_cavity);
  const SparseOperator b = annihilation(fock.dim_mirror);
  return {Eigen::kroneckerProduct(a, identity(fock.dim_mirror)),
          Eigen::kroneckerProduct(identity(fock.dim_cavity), b)};
}

void require_dissipative(const SystemParams& p) {
  if (p.s_disp != 0.0) {
    throw ConfigError("s_disp must be 0 for the Fock-space oracle");
  }
}

// Tr(O rho) = sum_k vec(O^T)_k vec(rho)_k. Stored conjugated so that
// row.dot(rho) (which conjugates its left operand) yields the trace.
Eigen::VectorXcd expectation_row(const DenseOperator& op) {
  const DenseOperator t = op.adjoint();
  return Eigen::Map<const Eigen::VectorXcd>(t.data(), t.size());
}

DenseOperator unvec(const Eigen::VectorXcd& v, int dim) {
  return Eigen::Map<const DenseOperator>(v.data(), dim, dim);
}

struct StateDiagnostics {
  double top_cavity = 0.0;
  double top_mirror = 0.0;
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
};

StateDiagnostics diagnose(const DenseOperator& rho, const FockConfig& fock) {
  StateDiagnostics s;
  const int dm = fock.dim_mirror;
  for (int c = 0; c < fock.dim_cavity; ++c) {
    for (int m = 0; m < dm; ++m) {
      const double pop = rho(c * dm + m, c * dm + m).real();
      if (c == fock.dim_cavity - 1) s.top_cavity += pop;
      if (m == dm - 1) s.top_mirror += pop;
    }
  }
  s.trace_error = std::abs(rho.trace() - 1.0);
  s.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const DenseOperator herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseOperator> es(herm, Eigen::EigenvaluesOnly);
  s.min_eigenvalue = es.eigenvalues().minCoeff();
  return s;
}

FockMoments summarize(const DenseOperator& rho, const FockConfig& fock) {
  const auto ops = fock_operators(fock);
  FockMoments out;
  out.moments = density_moments(rho, ops);
  out.n_st = (ops.f.adjoint() * ops.f * rho).trace().real();
  out.f2 = (ops.f * ops.f * rho).trace();
  const auto diag = diagnose(rho, fock);
  out.top_cavity = diag.top_cavity;
  out.top_mirror = diag.top_mirror;
  out.trace_error = diag.trace_error;
  out.hermiticity_error = diag.hermiticity_error;
  out.min_eigenvalue = diag.min_eigenvalue;
  return out;
}

void check_leak(const FockMoments& m, const FockConfig& fock) {
  if (m.leak() > fock.leak_threshold) {
    throw NumericalError("Fock cutoff too small: top-level population " +
                         std::to_string(m.leak()) + " exceeds leak threshold");
  }
}

// Largest absolute row sum of |L0| + |L+| + |L-|, an upper bound on the
// spectral radius of L(t).
double gershgorin_bound(const Liouvillian& l) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(l.static_part.rows());
  for (const SparseOperator* part : {&l.static_part, &l.plus_part, &l.minus_part}) {
    for (int k = 0; k < part->outerSize(); ++k) {
      for (SparseOperator::InnerIterator it(*part, k); it; ++it) {
        rows(it.row()) += std::abs(it.value());
      }
    }
  }
  return rows.maxCoeff();
}

Eigen::VectorXcd vacuum_state(int dim) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim) * dim);
  v(0) = 1.0;
  return v;
}

using RowOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// Every term moves the total excitation number by an even amount, so a state
// that starts in the parity-diagonal blocks |even><even| + |odd><odd| stays
// there. Restricting to those entries halves the superoperator.
class ParitySector {
 public:
  explicit ParitySector(const FockConfig& fock) {
    const int dm = fock.dim_mirror;
    dim_ = fock.dim_cavity * dm;
    position_.assign(static_cast<std::size_t>(dim_) * dim_, -1);
    for (int j = 0; j < dim_; ++j) {
      for (int i = 0; i < dim_; ++i) {
        if ((i / dm + i % dm + j / dm + j % dm) % 2 != 0) continue;
        const Eigen::Index full = static_cast<Eigen::Index>(j) * dim_ + i;
        position_[static_cast<std::size_t>(full)] = static_cast<Eigen::Index>(keep_.size());
        keep_.push_back(full);
        charge_.push_back((i % dm - j % dm) - (i / dm - j / dm));
      }
    }
  }

  [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(keep_.size()); }
  [[nodiscard]] Eigen::Index position(Eigen::Index full) const {
    return position_[static_cast<std::size_t>(full)];
  }

  /// Mirror minus cavity excitation difference of the entry.
  [[nodiscard]] int charge(Eigen::Index reduced) const {
    return charge_[static_cast<std::size_t>(reduced)];
  }

  [[nodiscard]] RowOperator restrict(const SparseOperator& op) const {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int col = 0; col < op.outerSize(); ++col) {
      const Eigen::Index c = position(col);
      if (c < 0) continue;
      for (SparseOperator::InnerIterator it(op, col); it; ++it) {
        const Eigen::Index r = position(it.row());
        if (r < 0) throw NumericalError("generator does not conserve excitation parity");
        trip.emplace_back(r, c, it.value());
      }
    }
    RowOperator out(size(), size());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  }

  [[nodiscard]] Eigen::VectorXcd reduce(const Eigen::VectorXcd& full) const {
    Eigen::VectorXcd out(size());
    for (Eigen::Index k = 0; k < size(); ++k) out(k) = full(keep_[static_cast<std::size_t>(k)]);
    return out;
  }

  [[nodiscard]] Eigen::VectorXcd expand(const Eigen::VectorXcd& reduced) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim_) * dim_);
    for (Eigen::Index k = 0; k < size(); ++k) out(keep_[static_cast<std::size_t>(k)]) = reduced(k);
    return out;
  }

 private:
  int dim_ = 0;
  std::vector<Eigen::Index> keep_;
  std::vector<int> charge_;
  std::vector<Eigen::Index> position_;
};

// L(t) = sum_h e^{i h omega t} parts[h] on the parity sector.
struct ReducedGenerator {
  std::vector<int> harmonics;
  std::vector<RowOperator> parts;
  double omega = 0.0;
};

ReducedGenerator lab_frame(const Liouvillian& l, const ParitySector& sector) {
  ReducedGenerator g;
  g.omega = 2.0 * l.delta_s;
  g.harmonics = {0, 1, -1};
  g.parts = {sector.restrict(l.static_part), sector.restrict(l.plus_part),
             sector.restrict(l.minus_part)};
  return g;
}

// rho~_ij = e^{i theta_ij t} rho_ij with theta_ij = Ds (q_i - q_j), where q is
// the mirror minus the cavity excitation number. This removes the fast free
// rotation of the mirror coherences that the squeezed drive hits resonantly,
// so RK4 only has to resolve the small off-resonant harmonics.
ReducedGenerator co_rotating_frame(const Liouvillian& l, const ParitySector& sector) {
  ReducedGenerator g;
  g.omega = 2.0 * l.delta_s;
  std::map<int, std::vector<Eigen::Triplet<cplx>>> trip;
  const std::pair<int, const SparseOperator*> lab[] = {
      {0, &l.static_part}, {1, &l.plus_part}, {-1, &l.minus_part}};
  for (const auto& [shift, part] : lab) {
    for (int col = 0; col < part->outerSize(); ++col) {
      const Eigen::Index b = sector.position(col);
      if (b < 0) continue;
      for (SparseOperator::InnerIterator it(*part, col); it; ++it) {
        const Eigen::Index a = sector.position(it.row());
        const int h = shift + (sector.charge(a) - sector.charge(b)) / 2;
        trip[h].emplace_back(a, b, it.value());
      }
    }
  }
  for (Eigen::Index a = 0; a < sector.size(); ++a) {
    trip[0].emplace_back(a, a, kI * (l.delta_s * sector.charge(a)));
  }
  for (auto& [h, t] : trip) {
    RowOperator part(sector.size(), sector.size());
    part.setFromTriplets(t.begin(), t.end());
    part.prune(cplx(0.0), 0.0);
    if (part.nonZeros() == 0) continue;
    g.harmonics.push_back(h);
    g.parts.push_back(std::move(part));
  }
  return g;
}

double gershgorin_bound(const ReducedGenerator& g) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(g.parts.front().rows());
  for (const auto& part : g.parts) {
    for (Eigen::Index r = 0; r < part.outerSize(); ++r) {
      for (RowOperator::InnerIterator it(part, r); it; ++it) rows(r) += std::abs(it.value());
    }
  }
  return rows.maxCoeff();
}

class Rk4Stepper {
 public:
  explicit Rk4Stepper(const ReducedGenerator& l) : l_(l) {}

  void step(Eigen::VectorXcd& rho, double t, double dt) {
    apply(t, rho, k1_);
    y_ = rho + (0.5 * dt) * k1_;
    apply(t + 0.5 * dt, y_, k2_);
    y_ = rho + (0.5 * dt) * k2_;
    apply(t + 0.5 * dt, y_, k3_);
    y_ = rho + dt * k3_;
    apply(t + dt, y_, k4_);
    rho += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  void apply(double t, const Eigen::VectorXcd& x, Eigen::VectorXcd& out) {
    out = Eigen::VectorXcd::Zero(x.size());
    for (std::size_t k = 0; k < l_.parts.size(); ++k) {
      if (l_.parts[k].nonZeros() == 0) continue;
      tmp_.noalias() = l_.parts[k] * x;
      if (l_.harmonics[k] == 0) {
        out += tmp_;
      } else {
        out += std::exp(kI * (l_.omega * l_.harmonics[k] * t)) * tmp_;
      }
    }
  }

  const ReducedGenerator& l_;
  Eigen::VectorXcd k1_, k2_, k3_, k4_, y_, tmp_;
};

}  // namespace

void validate(const FockConfig& fock) {
  if (fock.dim_cavity < 2 || fock.dim_mirror < 2) {
    throw ConfigError("Fock cutoffs must be at least 2");
  }
  if (!(fock.leak_threshold > 0.0 && fock.leak_threshold < 1.0)) {
    throw ConfigError("leak_threshold must lie in (0, 1)");
  }
}

SparseOperator Liouvillian::at(double t) const {
  const cplx phase = std::exp(kI * (2.0 * delta_s * t));
  SparseOperator out = static_part + phase * plus_part + std::conj(phase) * minus_part;
  return out;
}

Eigen::VectorXcd Liouvillian::apply(double t, const Eigen::VectorXcd& rho) const {
  const cplx phase = std::exp(kI * (2.0 * delta_s * t));
  Eigen::VectorXcd out = static_part * rho;
  out.noalias() += phase * (plus_part * rho);
  out.noalias() += std::conj(phase) * (minus_part * rho);
  return out;
}

Liouvillian build_liouvillian_parts(const SystemParams& params, const FockConfig& fock) {
  validate(params);
  validate(fock);
  require_dissipative(params);

  const auto bath = derive_bath_moments(params.r, params.phi);
  const auto c = derive_couplings(params);
  const double n = bath.n_bath;
  const cplx m = bath.m_bath;
  const cplx m_c = std::conj(m);
  const double k = params.kappa_c;
  const cplx g = c.zeta / 4.0;  // g_eff under the real cavity-field convention
  const cplx g_c = std::conj(g);
  const cplx chi = c.chi;

  const auto lad = sparse_ladders(fock);
  const SparseOperator& d = lad.d;
  const SparseOperator& f = lad.f;
  const SparseOperator dd = d.adjoint();
  const SparseOperator fd = f.adjoint();
  const SparseOperator fp = f + fd;
  const SparseOperator fp2 = fp * fp;
  const int dim = fock.dim_cavity * fock.dim_mirror;
  const SuperOps so(dim);

  const SparseOperator d_dd = d * dd;
  const SparseOperator dd_d = dd * d;
  const SparseOperator d_fp = d * fp;
  const SparseOperator dd_fp = dd * fp;
  const SparseOperator fp_d = fp * d;
  const SparseOperator fp_dd = fp * dd;
  // Double commutator -[f+, [f+, rho]].
  const SparseOperator mirror_diffusion =
      2.0 * so.sandwich(fp, fp) - so.left(fp2) - so.right(fp2);
  const double diffusion_scale = std::norm(c.zeta) / (16.0 * k);  // |g_eff|^2 / kappa

  Liouvillian l;
  l.delta_s = params.delta_s;
  l.hilbert_dim = dim;

  // Cavity in the squeezed bath.
  SparseOperator l0 = (kI * params.delta) * so.commutator(dd_d);
  l0 += (k * n) * (2.0 * so.sandwich(dd, d) - so.left(d_dd) - so.right(d_dd));
  l0 += (k * (n + 1.0)) * (2.0 * so.sandwich(d, dd) - so.left(dd_d) - so.right(dd_d));
  // Free mirror with coupling-induced position diffusion.
  l0 += (-kI * params.omega_m) * so.commutator(fd * f);
  l0 += (diffusion_scale * (2.0 * n + 1.0)) * mirror_diffusion;
  // Coherent part of the interaction, H = (i/2)(chi* d - chi d^dag) f+.
  const SparseOperator h_int = (std::conj(chi) / 2.0) * d_fp - (chi / 2.0) * dd_fp;
  l0 += so.commutator(h_int);
  // Incoherent cross terms and their Hermitian conjugates.
  l0 += (2.0 * g * n) * (so.sandwich(dd, fp) - so.right(dd_fp));
  l0 += (2.0 * g_c * n) * (so.sandwich(fp, d) - so.left(fp_d));
  l0 += (2.0 * g * (n + 1.0)) * (so.sandwich(fp, dd) - so.left(dd_fp));
  l0 += (2.0 * g_c * (n + 1.0)) * (so.sandwich(d, fp) - so.right(fp_d));

  SparseOperator lp = (k * m_c) * (so.left(d * d) + so.right(d * d) - 2.0 * so.sandwich(d, d));
  lp += (-diffusion_scale * m_c) * mirror_diffusion;
  lp += (2.0 * g * m_c) *
        (so.left(d_fp) + so.right(d_fp) - so.sandwich(fp, d) - so.sandwich(d, fp));

  SparseOperator lm =
      (k * m) * (so.left(dd * dd) + so.right(dd * dd) - 2.0 * so.sandwich(dd, dd));
  lm += (-diffusion_scale * m) * mirror_diffusion;
  lm += (2.0 * g_c * m) *
        (so.right(fp_dd) + so.left(fp_dd) - so.sandwich(dd, fp) - so.sandwich(fp, dd));

  l0.prune(cplx(0.0), 0.0);
  lp.prune(cplx(0.0), 0.0);
  lm.prune(cplx(0.0), 0.0);
  l.static_part = std::move(l0);
  l.plus_part = std::move(lp);
  l.minus_part = std::move(lm);
  return l;
}

SparseOperator build_liouvillian(const SystemParams& params, const FockConfig& fock,
                                 double t) {
  return build_liouvillian_parts(params, fock).at(t);
}

FockOperators fock_operators(const FockConfig& fock) {
  const auto lad = sparse_ladders(fock);
  return {DenseOperator(lad.d), DenseOperator(lad.f)};
}

MomentVector density_moments(const DenseOperator& rho, const FockOperators& ops) {
  const DenseOperator& d = ops.d;
  const DenseOperator dd = d.adjoint();
  const DenseOperator fp = ops.f + ops.f.adjoint();
  const DenseOperator fm = ops.f - ops.f.adjoint();
  auto tr = [&](const DenseOperator& o) { return (o * rho).trace(); };
  MomentVector x;
  using namespace moment;
  x(kDD) = tr(d * d);
  x(kDdDd) = tr(dd * dd);
  x(kDdD) = tr(dd * d);
  x(kDFp) = tr(d * fp);
  x(kDFm) = tr(d * fm);
  x(kDdFp) = tr(dd * fp);
  x(kDdFm) = tr(dd * fm);
  x(kFpFp) = tr(fp * fp);
  x(kFmFp) = tr(fm * fp);
  x(kFmFm) = tr(fm * fm);
  return x;
}

FockSteadyState lindblad_steady_state_static(const SystemParams& params,
                                             const FockConfig& fock) {
  const auto bath = derive_bath_moments(params.r, params.phi);
  if (std::abs(bath.m_bath) != 0.0) {
    throw ConfigError("static Lindblad steady state requires M = 0 (r = 0)");
  }
  const auto stab = stability_eigenvalues(build_drift_matrix(params), params.kappa_c);
  if (stab.spectral_abscissa > kStabilityMargin * params.kappa_c) {
    throw InstabilityError("no steady state: second moments grow without bound");
  }
  const Liouvillian l = build_liouvillian_parts(params, fock);
  const int dim = l.hilbert_dim;
  const ParitySector sector(fock);
  const ReducedGenerator gen = lab_frame(l, sector);
  const RowOperator& l0 = gen.parts.front();
  const Eigen::Index size = sector.size();

  // Replace the first equation by the trace condition.
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(l0.nonZeros() + dim));
  for (Eigen::Index row = 1; row < size; ++row) {
    for (RowOperator::InnerIterator it(l0, row); it; ++it) {
      trip.emplace_back(row, it.col(), it.value());
    }
  }
  for (int i = 0; i < dim; ++i) {
    trip.emplace_back(0, sector.position(static_cast<Eigen::Index>(i) * (dim + 1)), 1.0);
  }
  SparseOperator system(size, size);
  system.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(size);
  rhs(0) = 1.0;

  Eigen::VectorXcd rho_red;
#ifdef OPTOSQZ_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseOperator> lu;
#else
  Eigen::SparseLU<SparseOperator, Eigen::COLAMDOrdering<int>> lu;
#endif
  lu.compute(system);
  bool solved = lu.info() == Eigen::Success;
  if (solved) {
    rho_red = lu.solve(rhs);
    solved = lu.info() == Eigen::Success && rho_red.allFinite();
  }
  const double scale = gershgorin_bound(l);
  if (!solved) {
    // Non-unique stationary state: relax the vacuum instead and accept the
    // result only if it is stationary.
    const double horizon = 10.0 / params.kappa_c;
    const double dt = std::min(1.0 / scale, 0.05 / params.kappa_c);
    const long steps = static_cast<long>(std::ceil(horizon / dt));
    rho_red = sector.reduce(vacuum_state(dim));
    Rk4Stepper stepper(gen);
    for (long n = 0; n < steps; ++n) stepper.step(rho_red, n * dt, dt);
  }
  const double stationarity = (l0 * rho_red).cwiseAbs().maxCoeff() / scale;
  if (!(stationarity < 1e-10)) {
    throw NumericalError("no unique steady state: degenerate null space of the generator");
  }
  const Eigen::VectorXcd rho_vec = sector.expand(rho_red);

  FockSteadyState out;
  out.rho = unvec(rho_vec, dim);
  out.moments = summarize(out.rho, fock);
  check_leak(out.moments, fock);
  return out;
}

StrobeResult lindblad_strobe_average(const SystemParams& params, const FockConfig& fock,
                                     int cycles) {
  if (cycles < 2) throw ConfigError("stroboscopic averaging needs at least 2 cycles");
  if (!(params.delta_s != 0.0)) throw ConfigError("delta_s must be non-zero");
  const auto stab = stability_eigenvalues(build_drift_matrix(params), params.kappa_c);
  if (!stab.hurwitz) {
    throw InstabilityError("no unique steady state: drift matrix is not Hurwitz");
  }
  const Liouvillian l = build_liouvillian_parts(params, fock);
  const int dim = l.hilbert_dim;
  const ParitySector sector(fock);
  const ReducedGenerator gen = co_rotating_frame(l, sector);

  const double period = std::numbers::pi / std::abs(params.delta_s);
  const double fastest =
      std::max({2.0 * std::abs(params.delta_s), params.omega_m, params.kappa_c});
  const double dt_max = std::min(2.0 / gershgorin_bound(gen), 0.1 / fastest);
  const long per_period = static_cast<long>(std::ceil(period / dt_max));
  const double dt = period / static_cast<double>(per_period);

  StrobeResult out;
  out.dt = dt;
  const long prelude_periods =
      static_cast<long>(std::ceil(10.0 / stab.slowest_decay / period));
  out.prelude = static_cast<double>(prelude_periods) * period;

  const auto ops = fock_operators(fock);
  const Eigen::VectorXcd n_row = sector.reduce(expectation_row(ops.f.adjoint() * ops.f));
  const Eigen::VectorXcd f2_row = sector.reduce(expectation_row(ops.f * ops.f));

  const long prelude_steps = prelude_periods * per_period;
  Eigen::VectorXcd rho = sector.reduce(vacuum_state(dim));
  Rk4Stepper stepper(gen);
  for (long n = 0; n < prelude_steps; ++n) stepper.step(rho, n * dt, dt);

  std::vector<double> n_avg(static_cast<std::size_t>(cycles), 0.0);
  std::vector<cplx> f2_harm(static_cast<std::size_t>(cycles), 0.0);
  DenseOperator rho_last;
  double min_eig = 0.0;
  double max_trace_err = 0.0;
  double max_herm_err = 0.0;
  double top_c = 0.0;
  double top_m = 0.0;

  // Rectangle rule over whole periods projects exactly onto the harmonics
  // resolved by the grid.
  for (int cyc = 0; cyc < cycles; ++cyc) {
    const long first = prelude_steps + cyc * per_period;
    double n_sum = 0.0;
    cplx f2_sum{};
    for (long j = 0; j < per_period; ++j) {
      const double time = static_cast<double>(first + j) * dt;
      n_sum += n_row.dot(rho).real();
      // In the co-rotating frame <f^2> e^{i 2 Ds t} is read off directly.
      f2_sum += f2_row.dot(rho);
      stepper.step(rho, time, dt);
    }
    n_avg[static_cast<std::size_t>(cyc)] = n_sum / static_cast<double>(per_period);
    f2_harm[static_cast<std::size_t>(cyc)] = f2_sum / static_cast<double>(per_period);

    const double t_now = static_cast<double>(first + per_period) * dt;
    Eigen::VectorXcd lab = rho;
    for (Eigen::Index a = 0; a < lab.size(); ++a) {
      lab(a) *= std::exp(-kI * (params.delta_s * sector.charge(a) * t_now));
    }
    rho_last = unvec(sector.expand(lab), dim);
    const auto diag = diagnose(rho_last, fock);
    min_eig = std::min(min_eig, diag.min_eigenvalue);
    max_trace_err = std::max(max_trace_err, diag.trace_error);
    max_herm_err = std::max(max_herm_err, diag.hermiticity_error);
    top_c = std::max(top_c, diag.top_cavity);
    top_m = std::max(top_m, diag.top_mirror);
  }
  out.steps = prelude_steps + cycles * per_period;

  const auto last = static_cast<std::size_t>(cycles - 1);
  const double n_change = std::abs(n_avg[last] - n_avg[last - 1]) /
                          std::max(std::abs(n_avg[last]), 1e-12);
  // |<f^2>| is bounded by sqrt(n (n + 1)); measuring its change against that
  // scale keeps a vanishing harmonic (M -> 0) from reading as non-convergence.
  const double f2_scale = std::max(
      {std::abs(f2_harm[last]), std::sqrt(std::abs(n_avg[last]) * (std::abs(n_avg[last]) + 1.0)),
       1e-12});
  const double f2_change = std::abs(f2_harm[last] - f2_harm[last - 1]) / f2_scale;
  out.cycle_change = std::max(n_change, f2_change);

  out.moments.n_st = n_avg[last];
  out.moments.f2 = f2_harm[last];
  out.moments.moments = density_moments(rho_last, ops);
  out.moments.top_cavity = top_c;
  out.moments.top_mirror = top_m;
  out.moments.trace_error = max_trace_err;
  out.moments.hermiticity_error = max_herm_err;
  out.moments.min_eigenvalue = min_eig;
  check_leak(out.moments, fock);
  if (out.cycle_change > 1e-3) {
    throw NumericalError("stroboscopic averages did not converge (relative change " +
                         std::to_string(out.cycle_change) + ")");
  }
  return out;
}

}  // namespace optosqz
