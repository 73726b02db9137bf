#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "kubo/core.hpp"
#include "kubo/fermi.hpp"
#include "kubo/linalg.hpp"
#include "kubo/models.hpp"
#include "kubo/parallel.hpp"
#include "kubo/rng.hpp"

namespace kubo {

/// Poisson resets at rate gamma.
struct ScatteringProcess {
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_events = 10000;
  std::size_t burn_in = 0;

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw NonPositiveGamma("gamma must be positive and finite");
    if (n_events < 2) throw ValidationError("n_events must be at least 2");
  }
};

/// Field E(t) = amplitude * cos(omega t + theta), theta averaged over
/// theta_nodes equally spaced values.
struct DriveSpec {
  Vector amplitude;
  double omega = 0.0;
  int theta_nodes = 8;
  bool dc = false;
  bool phase_average = true;

  void validate(int d) const {
    if (amplitude.size() != d) throw DimensionMismatch("field amplitude has the wrong dimension");
    if (!amplitude.allFinite()) throw ValidationError("field amplitude must be finite");
    if (!std::isfinite(omega)) throw ValidationError("omega must be finite");
    if (phase_average && theta_nodes < 4) throw ValidationError("theta_nodes must be >= 4");
  }
};

/// Monte Carlo ratio estimate sum(Y_n) / sum(tau_n) with delta-method errors.
struct StochasticEstimate {
  CVector value;
  Vector stderr_re;
  Vector stderr_im;
  std::size_t n_events = 0;
  double total_time = 0.0;
  json metadata = json::object();
};

/// Interval lengths: burn_in + n_events draws, index i from the (seed, 0, i) counter.
inline std::vector<double> draw_intervals(const ScatteringProcess& p) {
  p.validate();
  const CounterRng rng(p.seed, 0);
  std::vector<double> tau(p.burn_in + p.n_events);
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = rng.exponential(i, p.gamma);
  return tau;
}

namespace detail {

/// (e^z - 1) / z
inline cplx phi1(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx term = 1.0, sum = 0.0;
    for (int k = 0; k < 18; ++k) {
      sum += term;
      term *= z / double(k + 2);
    }
    return sum;
  }
  return (std::exp(z) - 1.0) / z;
}

/// (e^z - 1 - z) / z^2
inline cplx phi2(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx term = 0.5, sum = 0.0;
    for (int k = 0; k < 18; ++k) {
      sum += term;
      term *= z / double(k + 3);
    }
    return sum;
  }
  return (std::exp(z) - 1.0 - z) / (z * z);
}

inline StochasticEstimate ratio_estimate(const std::vector<CVector>& Y, const std::vector<double>& tau, int d) {
  const std::size_t n = Y.size();
  StochasticEstimate est;
  CVector sumY = CVector::Zero(d);
  double sumT = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sumY += Y[i];
    sumT += tau[i];
  }
  est.value = sumY / sumT;
  Vector vr = Vector::Zero(d), vi = Vector::Zero(d);
  for (std::size_t i = 0; i < n; ++i) {
    const CVector r = Y[i] - est.value * tau[i];
    vr += r.real().cwiseAbs2();
    vi += r.imag().cwiseAbs2();
  }
  const double mean_tau = sumT / double(n);
  const double denom = double(n) * double(n - 1);
  est.stderr_re = (vr / denom).cwiseSqrt() / mean_tau;
  est.stderr_im = (vi / denom).cwiseSqrt() / mean_tau;
  est.n_events = n;
  est.total_time = sumT;
  return est;
}

inline json process_json(const ScatteringProcess& p) {
  return json{{"gamma", p.gamma}, {"seed", p.seed}, {"n_events", p.n_events}, {"burn_in", p.burn_in}};
}

inline json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace detail

/// J_l(s) = sum_j coeff(j, l) exp(-i lambda_j s) for constant field.
struct ModeExpansion {
  Vector lambda;
  Matrix coeff;
};

/// The linear map x -> G x with G = -L_H + (e / hbar) E . grad acting on
/// density matrices, plus the observables needed by the simulators.
class LiouvilleSystem {
public:
  virtual ~LiouvilleSystem() = default;
  virtual Eigen::Index state_size() const = 0;
  virtual int spatial_dim() const = 0;
  virtual const CVector& equilibrium() const = 0;
  /// out = G(field) x
  virtual void apply(const CVector& x, const Vector& field, CVector& out) const = 0;
  /// current density J_l = -(e / hbar |Omega|) Tr(d_l H rho)
  virtual CVector current(const CVector& x) const = 0;
  /// Tr(H rho) per unit volume
  virtual cplx energy(const CVector& x) const = 0;
  /// Tr(rho) per unit volume
  virtual cplx trace(const CVector& x) const = 0;
  /// full density matrix
  virtual Matrix density_matrix(const CVector& x) const = 0;
  /// exact constant-field evolution of the current
  virtual ModeExpansion dc_modes(const Vector& field) const = 0;
  /// spectral radius of H
  virtual double hamiltonian_norm() const = 0;
};

namespace detail {

/// Non-periodic model with site positions; rho stored column-major.
class DenseLiouville final : public LiouvilleSystem {
public:
  DenseLiouville(const FiniteModel& m, double beta, double mu, const PhysicalConstants& c)
      : H_(m.hamiltonian()), dH_(m.derivations()), X_(*m.positions()), volume_(m.volume()), c_(c) {
    const auto eig = diagonalize(H_);
    norm_ = eig.spectral_radius();
    const Matrix rho = matrix_function(eig, [&](double e) { return cplx(fermi_dirac(e, beta, mu)); });
    x0_ = Eigen::Map<const CVector>(rho.data(), rho.size());
  }

  Eigen::Index state_size() const override { return H_.size(); }
  int spatial_dim() const override { return static_cast<int>(dH_.size()); }
  const CVector& equilibrium() const override { return x0_; }
  double hamiltonian_norm() const override { return norm_; }

  void apply(const CVector& x, const Vector& field, CVector& out) const override {
    const Eigen::Index n = H_.rows();
    Eigen::Map<const Matrix> rho(x.data(), n, n);
    out.resize(x.size());
    Eigen::Map<Matrix> o(out.data(), n, n);
    o.noalias() = H_ * rho;
    o.noalias() -= rho * H_;
    o *= -imag_unit / c_.hbar;
    const Vector pot = X_ * field;  // E . x_a
    if (pot.size() > 0 && field.cwiseAbs().maxCoeff() > 0.0) {
      const cplx f = -imag_unit * c_.e_charge / c_.hbar;
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index a = 0; a < n; ++a) o(a, b) += f * (pot(a) - pot(b)) * rho(a, b);
    }
  }

  CVector current(const CVector& x) const override {
    const Eigen::Index n = H_.rows();
    Eigen::Map<const Matrix> rho(x.data(), n, n);
    CVector J(spatial_dim());
    for (int l = 0; l < spatial_dim(); ++l)
      J(l) = -(c_.e_charge / (c_.hbar * volume_)) * dH_[static_cast<std::size_t>(l)].cwiseProduct(rho.transpose()).sum();
    return J;
  }

  cplx energy(const CVector& x) const override {
    Eigen::Map<const Matrix> rho(x.data(), H_.rows(), H_.rows());
    return H_.cwiseProduct(rho.transpose()).sum() / volume_;
  }

  cplx trace(const CVector& x) const override {
    Eigen::Map<const Matrix> rho(x.data(), H_.rows(), H_.rows());
    return rho.trace() / volume_;
  }

  Matrix density_matrix(const CVector& x) const override {
    return Eigen::Map<const Matrix>(x.data(), H_.rows(), H_.rows());
  }

  ModeExpansion dc_modes(const Vector& field) const override {
    const Eigen::Index n = H_.rows();
    const int d = spatial_dim();
    Matrix HE = H_;
    const Vector pot = X_ * field;
    for (Eigen::Index a = 0; a < n; ++a) HE(a, a) += c_.e_charge * pot(a);
    const auto eig = diagonalize(HE);
    const Matrix rho = eig.to_eigenbasis(density_matrix(x0_));
    std::vector<Matrix> D;
    for (int l = 0; l < d; ++l) D.push_back(eig.to_eigenbasis(dH_[static_cast<std::size_t>(l)]));
    ModeExpansion modes;
    modes.lambda.resize(n * n);
    modes.coeff.resize(n * n, d);
    const double pref = -(c_.e_charge / (c_.hbar * volume_));
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index a = 0; a < n; ++a) {
        const Eigen::Index j = b * n + a;
        modes.lambda(j) = (eig.energies(a) - eig.energies(b)) / c_.hbar;
        for (int l = 0; l < d; ++l) modes.coeff(j, l) = pref * D[static_cast<std::size_t>(l)](b, a) * rho(a, b);
      }
    return modes;
  }

private:
  Matrix H_;
  std::vector<Matrix> dH_;
  RealMatrix X_;
  double volume_;
  PhysicalConstants c_;
  CVector x0_;
  double norm_ = 0.0;
};

/// Translation-invariant density matrices on a torus, stored as the blocks
/// f(R)_{ab} = rho[(0, a), (R, b)]. The field acts through the minimal-image
/// hop displacement of each entry.
class TorusLiouville final : public LiouvilleSystem {
public:
  TorusLiouville(const FiniteModel& m, double beta, double mu, const PhysicalConstants& c) : c_(c) {
    const TorusInfo& t = *m.torus();
    d_ = t.dim();
    N_ = t.n_orbitals();
    L_ = t.L;
    cells_ = grid_indices(d_, L_);
    nc_ = cells_.size();
    cell_volume_ = t.lattice.cell_volume();
    IndexVector zero = IndexVector::Zero(d_);
    origin_ = grid_linear_index(zero, L_);
    const Eigen::Index n = static_cast<Eigen::Index>(nc_) * N_ * N_;

    const Matrix& H = m.hamiltonian();
    auto block = [&](const Matrix& M, std::size_t R) {
      return M.block(static_cast<Eigen::Index>(origin_) * N_, static_cast<Eigen::Index>(R) * N_, N_, N_);
    };
    std::vector<Matrix> h(nc_);
    for (std::size_t R = 0; R < nc_; ++R) h[R] = block(H, R);

    neg_.resize(nc_);
    for (std::size_t R = 0; R < nc_; ++R) neg_[R] = grid_linear_index(-cells_[R], L_);

    K0_ = Matrix::Zero(n, n);
    for (std::size_t R = 0; R < nc_; ++R)
      for (std::size_t S = 0; S < nc_; ++S) {
        const Matrix& blk = h[grid_linear_index(cells_[R] - cells_[S], L_)];
        if (max_abs(blk) == 0.0) continue;
        for (int a = 0; a < N_; ++a)
          for (int b = 0; b < N_; ++b)
            for (int g = 0; g < N_; ++g) {
              K0_(index(R, a, b), index(S, g, b)) += blk(a, g) / c_.hbar;
              K0_(index(R, a, b), index(S, a, g)) -= blk(g, b) / c_.hbar;
            }
      }

    disp_.assign(static_cast<std::size_t>(d_), Vector::Zero(n));
    for (std::size_t R = 0; R < nc_; ++R) {
      const Vector r = t.lattice.cell_position(t.minimal_image(cells_[R]));
      for (int a = 0; a < N_; ++a)
        for (int b = 0; b < N_; ++b)
          for (int l = 0; l < d_; ++l)
            disp_[static_cast<std::size_t>(l)](index(R, a, b)) =
                r(l) + t.taus[static_cast<std::size_t>(b)](l) - t.taus[static_cast<std::size_t>(a)](l);
    }

    const auto eig = diagonalize(H);
    norm_ = eig.spectral_radius();
    const Matrix rho = matrix_function(eig, [&](double e) { return cplx(fermi_dirac(e, beta, mu)); });
    x0_.resize(n);
    for (std::size_t R = 0; R < nc_; ++R) {
      const Matrix f = block(rho, R);
      for (int a = 0; a < N_; ++a)
        for (int b = 0; b < N_; ++b) x0_(index(R, a, b)) = f(a, b);
    }

    // Tr(A rho) per cell = sum_S sum_ab a(-S)_{ba} f(S)_{ab}
    auto functional = [&](const Matrix& A, double scale) {
      CVector w(n);
      for (std::size_t S = 0; S < nc_; ++S) {
        const Matrix a = block(A, neg_[S]);
        for (int p = 0; p < N_; ++p)
          for (int q = 0; q < N_; ++q) w(index(S, p, q)) = scale * a(q, p);
      }
      return w;
    };
    for (int l = 0; l < d_; ++l)
      current_w_.push_back(functional(m.derivation(l), -c_.e_charge / (c_.hbar * cell_volume_)));
    energy_w_ = functional(H, 1.0 / cell_volume_);
  }

  Eigen::Index state_size() const override { return x0_.size(); }
  int spatial_dim() const override { return d_; }
  const CVector& equilibrium() const override { return x0_; }
  double hamiltonian_norm() const override { return norm_; }

  void apply(const CVector& x, const Vector& field, CVector& out) const override {
    out.noalias() = (-imag_unit) * (K0_ * x);
    const cplx f = imag_unit * c_.e_charge / c_.hbar;
    for (int l = 0; l < d_; ++l) {
      const double E = field(l);
      if (E == 0.0) continue;
      out += (f * E) * disp_[static_cast<std::size_t>(l)].cwiseProduct(x);
    }
  }

  CVector current(const CVector& x) const override {
    CVector J(d_);
    for (int l = 0; l < d_; ++l) J(l) = current_w_[static_cast<std::size_t>(l)].transpose() * x;
    return J;
  }

  cplx energy(const CVector& x) const override { return energy_w_.transpose() * x; }

  cplx trace(const CVector& x) const override {
    cplx s = 0.0;
    for (int a = 0; a < N_; ++a) s += x(index(origin_, a, a));
    return s / cell_volume_;
  }

  Matrix density_matrix(const CVector& x) const override {
    const Eigen::Index n = static_cast<Eigen::Index>(nc_) * N_;
    Matrix rho(n, n);
    for (std::size_t A = 0; A < nc_; ++A)
      for (std::size_t B = 0; B < nc_; ++B) {
        const std::size_t R = grid_linear_index(cells_[B] - cells_[A], L_);
        for (int a = 0; a < N_; ++a)
          for (int b = 0; b < N_; ++b)
            rho(static_cast<Eigen::Index>(A) * N_ + a, static_cast<Eigen::Index>(B) * N_ + b) = x(index(R, a, b));
      }
    return rho;
  }

  ModeExpansion dc_modes(const Vector& field) const override {
    // G = -i K with K Hermitian
    Matrix K = K0_;
    for (int l = 0; l < d_; ++l)
      K.diagonal() -= (c_.e_charge / c_.hbar * field(l)) * disp_[static_cast<std::size_t>(l)].cast<cplx>();
    K = 0.5 * (K + K.adjoint()).eval();
    const auto eig = diagonalize(K);
    const CVector proj = eig.vectors.adjoint() * x0_;
    ModeExpansion modes;
    modes.lambda = eig.energies;
    modes.coeff.resize(eig.energies.size(), d_);
    for (int l = 0; l < d_; ++l) {
      const CVector wl = eig.vectors.transpose() * current_w_[static_cast<std::size_t>(l)];
      modes.coeff.col(l) = wl.cwiseProduct(proj);
    }
    return modes;
  }

private:
  Eigen::Index index(std::size_t R, int a, int b) const {
    return static_cast<Eigen::Index>(R) * N_ * N_ + a * N_ + b;
  }

  PhysicalConstants c_;
  int d_ = 0, N_ = 0, L_ = 0;
  std::vector<IndexVector> cells_;
  std::size_t nc_ = 0, origin_ = 0;
  std::vector<std::size_t> neg_;
  double cell_volume_ = 1.0;
  Matrix K0_;
  std::vector<Vector> disp_;
  CVector x0_;
  std::vector<CVector> current_w_;
  CVector energy_w_;
  double norm_ = 0.0;
};

}  // namespace detail

inline constexpr Eigen::Index max_dense_dim = 512;
inline constexpr Eigen::Index max_reduced_dim = 2048;

/// Chooses the dense (site positions) or reduced torus representation.
inline std::unique_ptr<LiouvilleSystem> make_liouville_system(const FiniteModel& model, const OccupationSpec& occ,
                                                              const PhysicalConstants& c = {}) {
  c.validate();
  occ.validate();
  occ.require_finite_beta();
  double mu = 0.0;
  if (occ.has_mu()) {
    mu = occ.mu();
  } else {
    const auto eig = diagonalize(model.hamiltonian());
    mu = resolve_mu(occ, model, eig);
  }
  if (model.has_positions()) {
    if (model.dim() > max_dense_dim)
      throw DimensionTooLarge("dense evolution limited to dimension " + std::to_string(max_dense_dim));
    return std::make_unique<detail::DenseLiouville>(model, occ.beta, mu, c);
  }
  if (model.periodic()) {
    const auto& t = *model.torus();
    const Eigen::Index n = static_cast<Eigen::Index>(t.n_cells()) * t.n_orbitals() * t.n_orbitals();
    if (n > max_reduced_dim || model.dim() > 4 * max_dense_dim)
      throw DimensionTooLarge("torus evolution limited to " + std::to_string(max_reduced_dim) + " reduced entries");
    return std::make_unique<detail::TorusLiouville>(model, occ.beta, mu, c);
  }
  throw UnsupportedModel("time evolution needs site positions or a torus model");
}

/// Constant field: exact evolution between resets.
inline StochasticEstimate simulate_quantum_dc(const FiniteModel& model, const OccupationSpec& occ,
                                              const ScatteringProcess& process, const Vector& field,
                                              const PhysicalConstants& c = {}) {
  process.validate();
  auto sys = make_liouville_system(model, occ, c);
  const int d = sys->spatial_dim();
  if (field.size() != d) throw DimensionMismatch("field has the wrong dimension");
  const ModeExpansion modes = sys->dc_modes(field);
  const auto tau_all = draw_intervals(process);
  const std::vector<double> tau(tau_all.begin() + static_cast<std::ptrdiff_t>(process.burn_in), tau_all.end());
  std::vector<CVector> Y(tau.size());
  for_each_chunk(tau.size(), 256, [&](std::size_t, std::size_t begin, std::size_t end) {
    CVector phases(modes.lambda.size());
    for (std::size_t i = begin; i < end; ++i) {
      for (Eigen::Index j = 0; j < phases.size(); ++j)
        phases(j) = tau[i] * detail::phi1(-imag_unit * modes.lambda(j) * tau[i]);
      Y[i] = modes.coeff.transpose() * phases;
    }
  });
  auto est = detail::ratio_estimate(Y, tau, d);
  est.metadata = json{{"method", "dynamics_quantum"},
                      {"mode", "dc"},
                      {"process", detail::process_json(process)},
                      {"field", detail::vector_json(field)},
                      {"beta", detail::beta_json(occ.beta)},
                      {"representation", model.periodic() ? "torus" : "dense"}};
  return est;
}

struct IntegratorOptions {
  std::optional<double> step;  // default: the largest step allowed by the bound
  bool check_equilibrium = true;
};

/// h <= min(1 / (20 |H| / hbar), 2 pi / (40 |omega|))
inline double max_step(double h_norm, double omega, const PhysicalConstants& c) {
  double h = std::numeric_limits<double>::infinity();
  if (h_norm > 0.0) h = std::min(h, c.hbar / (20.0 * h_norm));
  if (omega != 0.0) h = std::min(h, 2.0 * pi / (40.0 * std::abs(omega)));
  return h;
}

namespace detail {

/// RK4 from x over [0, tau] under E(s) = amp cos(phase + omega s), returning
/// Q = int_0^tau exp(i (phase + omega s)) J(s) ds. x is overwritten.
inline CVector integrate_interval(const LiouvilleSystem& sys, CVector& x, double tau, double h_max, const Vector& amp,
                                  double omega, double phase) {
  const int d = sys.spatial_dim();
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(tau / h_max)));
  const double h = tau / double(steps);
  CVector Q = CVector::Zero(d);
  CVector k1, k2, k3, k4, tmp;
  auto field = [&](double s) -> Vector { return amp * std::cos(phase + omega * s); };
  auto weight = [&](double s) { return std::exp(imag_unit * (phase + omega * s)); };
  for (long i = 0; i < steps; ++i) {
    const double s = double(i) * h;
    const Vector f0 = field(s), fm = field(s + 0.5 * h), f1 = field(s + h);
    const CVector q1 = weight(s) * sys.current(x);
    sys.apply(x, f0, k1);
    tmp = x + (0.5 * h) * k1;
    const CVector q2 = weight(s + 0.5 * h) * sys.current(tmp);
    sys.apply(tmp, fm, k2);
    tmp = x + (0.5 * h) * k2;
    const CVector q3 = weight(s + 0.5 * h) * sys.current(tmp);
    sys.apply(tmp, fm, k3);
    tmp = x + h * k3;
    const CVector q4 = weight(s + h) * sys.current(tmp);
    sys.apply(tmp, f1, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Q += (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
  }
  return Q;
}

}  // namespace detail

/// Evolves rho(0) = Phi(H) for a time T under the given drive (phase theta),
/// returning the final state. Used for integrator diagnostics.
inline CVector evolve_state(const LiouvilleSystem& sys, double T, double h, const Vector& amp, double omega,
                            double theta) {
  CVector x = sys.equilibrium();
  detail::integrate_interval(sys, x, T, h, amp, omega, theta);
  return x;
}

/// Equilibrium must stay put at zero field: state to 1e-10 and energy to 1e-8
/// over 10 / gamma.
inline void check_integrator(const LiouvilleSystem& sys, double h, double gamma) {
  const Vector zero = Vector::Zero(sys.spatial_dim());
  const CVector& x0 = sys.equilibrium();
  const CVector x = evolve_state(sys, 10.0 / gamma, h, zero, 0.0, 0.0);
  const double drift = (x - x0).cwiseAbs().maxCoeff();
  const double e0 = std::abs(sys.energy(x0));
  const double de = std::abs(sys.energy(x) - sys.energy(x0));
  if (drift > 1e-10 || de > 1e-8 * std::max(1.0, e0))
    throw StepSizeTooCoarse("equilibrium drift " + std::to_string(drift) + ", energy drift " + std::to_string(de) +
                            " with step " + std::to_string(h));
}

/// Harmonic drive: returns the complex amplitude of the current at omega,
/// 2 <exp(i(omega t + theta)) J(t)>, which equals sigma(omega) E for small E.
inline StochasticEstimate simulate_quantum_ac(const FiniteModel& model, const OccupationSpec& occ,
                                              const ScatteringProcess& process, const DriveSpec& drive,
                                              const PhysicalConstants& c = {}, const IntegratorOptions& opts = {}) {
  process.validate();
  if (drive.dc) return simulate_quantum_dc(model, occ, process, drive.amplitude, c);
  auto sys = make_liouville_system(model, occ, c);
  const int d = sys->spatial_dim();
  drive.validate(d);
  const double bound = max_step(sys->hamiltonian_norm(), drive.omega, c);
  double h = std::min(bound, 0.5 / process.gamma);
  if (opts.step) {
    if (!(*opts.step > 0.0)) throw ValidationError("integrator step must be positive");
    if (*opts.step > bound * (1.0 + 1e-12))
      throw StepSizeTooCoarse("requested step " + std::to_string(*opts.step) + " exceeds the bound " +
                              std::to_string(bound));
    h = *opts.step;
  }
  if (opts.check_equilibrium) check_integrator(*sys, h, process.gamma);

  const int M = drive.phase_average ? drive.theta_nodes : 1;
  std::vector<double> theta(static_cast<std::size_t>(M), 0.0);
  if (drive.phase_average)
    for (int j = 0; j < M; ++j) theta[static_cast<std::size_t>(j)] = -pi + 2.0 * pi * j / M;

  const auto tau_all = draw_intervals(process);
  std::vector<double> start(tau_all.size());
  double t = 0.0;
  for (std::size_t i = 0; i < tau_all.size(); ++i) {
    start[i] = t;
    t += tau_all[i];
  }
  const std::size_t skip = process.burn_in;
  const std::vector<double> tau(tau_all.begin() + static_cast<std::ptrdiff_t>(skip), tau_all.end());
  std::vector<CVector> Y(tau.size());
  for_each_chunk(tau.size(), 64, [&](std::size_t, std::size_t begin, std::size_t end) {
    CVector x;
    for (std::size_t i = begin; i < end; ++i) {
      CVector acc = CVector::Zero(d);
      for (int j = 0; j < M; ++j) {
        x = sys->equilibrium();
        const double phase = drive.omega * start[skip + i] + theta[static_cast<std::size_t>(j)];
        acc += detail::integrate_interval(*sys, x, tau[i], h, drive.amplitude, drive.omega, phase);
      }
      Y[i] = (2.0 / M) * acc;
    }
  });
  auto est = detail::ratio_estimate(Y, tau, d);
  est.metadata = json{{"method", "dynamics_quantum"},
                      {"mode", "ac"},
                      {"process", detail::process_json(process)},
                      {"field", detail::vector_json(drive.amplitude)},
                      {"omega", drive.omega},
                      {"theta_nodes", M},
                      {"phase_average", drive.phase_average},
                      {"step", h},
                      {"beta", detail::beta_json(occ.beta)},
                      {"representation", model.periodic() ? "torus" : "dense"}};
  return est;
}

/// Classical Drude gas: every reset returns the momentum distribution to the
/// Maxwellian, after which J(t) = (e^2 n / m) int_{t_n}^t E. With the complex
/// field E e^{-i omega t}, the interval contributes
/// (e^2 n E / m) tau^2 phi2(i omega tau) to int e^{i omega t} J dt.
inline StochasticEstimate simulate_classical(const ScatteringProcess& process, double beta, double density,
                                             double mass, const DriveSpec& drive, const PhysicalConstants& c = {}) {
  process.validate();
  c.validate();
  if (!(beta > 0.0) || std::isinf(beta)) throw InvalidOccupation("beta must be positive and finite");
  if (!(density > 0.0)) throw InvalidOccupation("density must be positive");
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  const int d = static_cast<int>(drive.amplitude.size());
  if (d < 1) throw DimensionMismatch("field amplitude is empty");
  if (!drive.amplitude.allFinite()) throw ValidationError("field amplitude must be finite");
  const double omega = drive.dc ? 0.0 : drive.omega;
  const auto tau_all = draw_intervals(process);
  const std::vector<double> tau(tau_all.begin() + static_cast<std::ptrdiff_t>(process.burn_in), tau_all.end());
  const CVector base = (c.e_charge * c.e_charge * density / mass) * drive.amplitude.cast<cplx>();
  std::vector<CVector> Y(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i)
    Y[i] = base * (tau[i] * tau[i] * detail::phi2(imag_unit * omega * tau[i]));
  auto est = detail::ratio_estimate(Y, tau, d);
  est.metadata = json{{"method", "dynamics_classical"},
                      {"process", detail::process_json(process)},
                      {"field", detail::vector_json(drive.amplitude)},
                      {"omega", omega},
                      {"beta", beta},
                      {"density", density},
                      {"mass", mass}};
  return est;
}

/// e^2 n / (m (gamma - i omega))
inline cplx classical_drude(double density, double mass, double gamma, double omega, const PhysicalConstants& c = {}) {
  return c.e_charge * c.e_charge * density / (mass * cplx(gamma, -omega));
}

}  // namespace kubo
