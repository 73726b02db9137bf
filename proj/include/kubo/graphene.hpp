#pragma once

#include <array>
#include <cmath>

#include "kubo/core.hpp"
#include "kubo/fermi.hpp"
#include "kubo/kubo_bloch.hpp"
#include "kubo/models.hpp"

namespace kubo {

/// Where the Bloch phases of the B orbital are anchored. `orbital` uses the
/// atom position (A at 0, B at (0, a/sqrt 3)); `cell` puts both orbitals at
/// the cell origin and gives H(k) = -t [[0, F], [conj F, 0]] with the bare
/// structure factor. Band energies and the Drude part agree; the interband
/// matrix elements do not.
enum class GrapheneGauge { orbital, cell };

struct GrapheneParams {
  double a = 1.0;
  double t = 1.0;
  GrapheneGauge gauge = GrapheneGauge::orbital;

  void validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("graphene: a must be positive");
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("graphene: t must be positive");
  }
};

inline RealMatrix graphene_lattice_matrix(double a = 1.0) {
  RealMatrix A(2, 2);
  A << 0.5 * a, -0.5 * a, 0.5 * std::sqrt(3.0) * a, 0.5 * std::sqrt(3.0) * a;
  return A;
}

inline Lattice graphene_lattice(double a = 1.0) { return reciprocal_of(graphene_lattice_matrix(a)); }

/// Offset of the B atom inside the cell.
inline Vector graphene_tau_b(double a = 1.0) {
  Vector tau(2);
  tau << 0.0, a / std::sqrt(3.0);
  return tau;
}

/// F(k) = 1 + exp(-i k.a1) + exp(-i k.a2)
inline cplx structure_factor(const Vector& k, double a = 1.0) {
  const RealMatrix A = graphene_lattice_matrix(a);
  return 1.0 + std::exp(-imag_unit * k.dot(A.col(0))) + std::exp(-imag_unit * k.dot(A.col(1)));
}

inline std::array<cplx, 2> structure_factor_gradient(const Vector& k, double a = 1.0) {
  const RealMatrix A = graphene_lattice_matrix(a);
  const cplx e1 = std::exp(-imag_unit * k.dot(A.col(0)));
  const cplx e2 = std::exp(-imag_unit * k.dot(A.col(1)));
  return {-imag_unit * (A(0, 0) * e1 + A(0, 1) * e2), -imag_unit * (A(1, 0) * e1 + A(1, 1) * e2)};
}

namespace detail {

/// Structure factor and gradient in the requested gauge.
struct GaugedF {
  cplx F;
  std::array<cplx, 2> dF;
};

inline GaugedF gauged_structure_factor(const GrapheneParams& p, const Vector& k) {
  GaugedF g{structure_factor(k, p.a), structure_factor_gradient(k, p.a)};
  if (p.gauge == GrapheneGauge::orbital) {
    const Vector tau = graphene_tau_b(p.a);
    const cplx ph = std::exp(imag_unit * k.dot(tau));
    for (int l = 0; l < 2; ++l) g.dF[l] = (g.dF[l] + imag_unit * tau(l) * g.F) * ph;
    g.F *= ph;
  }
  return g;
}

}  // namespace detail

inline BlochModel graphene_bloch(const GrapheneParams& p = {}) {
  p.validate();
  BlochModel m;
  m.lattice = graphene_lattice(p.a);
  m.n_bands = 2;
  m.h_of_k = [p](const Vector& k) {
    const auto g = detail::gauged_structure_factor(p, k);
    Matrix H = Matrix::Zero(2, 2);
    H(0, 1) = -p.t * g.F;
    H(1, 0) = -p.t * std::conj(g.F);
    return H;
  };
  m.dh_dk = [p](const Vector& k, int l) {
    const auto g = detail::gauged_structure_factor(p, k);
    Matrix D = Matrix::Zero(2, 2);
    D(0, 1) = -p.t * g.dF[static_cast<std::size_t>(l)];
    D(1, 0) = -p.t * std::conj(g.dF[static_cast<std::size_t>(l)]);
    return D;
  };
  m.name = "graphene";
  return m;
}

/// Nearest-neighbour hoppings A(0) -> B(R), R in {0, -a1, -a2}, value -t.
inline TightBindingModel graphene_tight_binding(const GrapheneParams& p = {}) {
  p.validate();
  std::vector<Orbital> orbs{{"A", Vector::Zero(2)},
                            {"B", p.gauge == GrapheneGauge::orbital ? graphene_tau_b(p.a) : Vector::Zero(2)}};
  std::vector<Hopping> hops;
  const int Rs[3][2] = {{0, 0}, {-1, 0}, {0, -1}};
  for (const auto& r : Rs) {
    IndexVector R(2);
    R << r[0], r[1];
    hops.push_back({R, 0, 1, cplx(-p.t)});
    hops.push_back({-R, 1, 0, cplx(-p.t)});
  }
  return TightBindingModel(graphene_lattice(p.a), std::move(orbs), std::move(hops), "graphene");
}

struct GrapheneEigenpair {
  double energy;
  CVector vector;
};

/// (E_-, E_+) = (-t|F|, +t|F|) with chi_pm = (1, -+ conj F / |F|) / sqrt 2.
inline std::array<GrapheneEigenpair, 2> graphene_eigenpairs(const GrapheneParams& p, const Vector& k) {
  const auto g = detail::gauged_structure_factor(p, k);
  const double absF = std::abs(g.F);
  const cplx u = absF > 1e-12 ? std::conj(g.F) / absF : cplx(1.0);
  CVector minus(2), plus(2);
  minus << 1.0, u;
  plus << 1.0, -u;
  minus /= std::sqrt(2.0);
  plus /= std::sqrt(2.0);
  return {GrapheneEigenpair{-p.t * absF, minus}, GrapheneEigenpair{p.t * absF, plus}};
}

/// Drude and interband conductivity from the explicit two-band integrands:
/// intraband weight t^2 Re(conj F dF_l) Re(conj F dF_m) / |F|^2 and interband
/// weight t^2 Im(conj F dF_l) Im(conj F dF_m) / |F|^2.
inline BlochConductivity conductivity_graphene_closed_form(const GrapheneParams& p, const OccupationSpec& occ,
                                                           double gamma, const FrequencyGrid& omegas, int L,
                                                           const PhysicalConstants& c = {},
                                                           const BlochOptions& opts = {}) {
  p.validate();
  c.validate();
  occ.validate();
  occ.require_finite_beta();
  DissipationSpec{gamma}.validate();
  const Lattice lat = graphene_lattice(p.a);
  const auto ks = k_grid(lat, L);
  const std::size_t nk = ks.size();
  const double total_volume = double(nk) * lat.cell_volume();
  const std::size_t nw = omegas.size();
  const double beta = occ.beta;

  std::vector<detail::GaugedF> fs(nk);
  for (std::size_t i = 0; i < nk; ++i) fs[i] = detail::gauged_structure_factor(p, ks[i]);
  std::vector<double> all_E;
  double radius = 0.0;
  for (const auto& g : fs) {
    const double e = p.t * std::abs(g.F);
    all_E.push_back(-e);
    all_E.push_back(e);
    radius = std::max(radius, e);
  }
  const double mu = resolve_mu(occ, all_E, total_volume);
  const double eps = opts.eps_deg.value_or(default_degeneracy_tolerance(radius));

  struct Partial {
    std::vector<Matrix> drude, regular;
  };
  std::vector<Partial> partial(chunk_count(nk, kpoint_chunk));
  for_each_chunk(nk, kpoint_chunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Partial acc;
    acc.drude.assign(nw, Matrix::Zero(2, 2));
    acc.regular.assign(nw, Matrix::Zero(2, 2));
    for (std::size_t i = begin; i < end; ++i) {
      const auto& g = fs[i];
      const double absF = std::abs(g.F);
      if (absF < 1e-12) continue;
      Matrix intra(2, 2), inter(2, 2);
      for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) {
          const cplx xl = std::conj(g.F) * g.dF[static_cast<std::size_t>(l)];
          const cplx xm = std::conj(g.F) * g.dF[static_cast<std::size_t>(m)];
          intra(l, m) = p.t * p.t * xl.real() * xm.real() / (absF * absF);
          inter(l, m) = p.t * p.t * xl.imag() * xm.imag() / (absF * absF);
        }
      for (int s : {-1, 1}) {
        const double Es = s * p.t * absF;
        const double Eo = -Es;
        // intraband pair (s, s)
        const double wd = fermi_derivative(Es, beta, mu);
        // interband pair (s, -s)
        const bool merged = std::abs(Eo - Es) <= eps;
        const double wr = fermi_divided_difference(Es, Eo, beta, mu, eps);
        const cplx de = imag_unit * (Eo - Es) / c.hbar;
        for (std::size_t w = 0; w < nw; ++w) {
          acc.drude[w] += (wd / (-imag_unit * omegas[w] + gamma)) * intra;
          (merged ? acc.drude[w] : acc.regular[w]) += (wr / (de - imag_unit * omegas[w] + gamma)) * inter;
        }
      }
    }
    partial[chunk] = std::move(acc);
  });

  BlochConductivity out = detail::make_parts(2, omegas, Method::graphene_closed_form);
  const double pref = -(c.e_charge * c.e_charge) / (c.hbar * c.hbar * total_volume);
  for (std::size_t w = 0; w < nw; ++w) {
    Matrix D = Matrix::Zero(2, 2), R = Matrix::Zero(2, 2);
    for (const auto& part : partial) {
      D += part.drude[w];
      R += part.regular[w];
    }
    out.drude.sigma[w] = pref * D;
    out.regular.sigma[w] = pref * R;
    out.total.sigma[w] = pref * (D + R);
  }
  double occupied = 0.0;
  for (double e : all_E) occupied += fermi_dirac(e, beta, mu);
  BlochModel shape;
  shape.lattice = lat;
  shape.n_bands = 2;
  shape.name = "graphene";
  json meta = detail::bloch_metadata("graphene_closed_form", shape, L, occ, mu, occupied / total_volume, gamma, eps, c);
  meta["t"] = p.t;
  meta["a"] = p.a;
  meta["gauge"] = p.gauge == GrapheneGauge::orbital ? "orbital" : "cell";
  for (auto* r : {&out.total, &out.drude, &out.regular}) {
    r->metadata = meta;
    r->check_finite();
  }
  out.drude.metadata["part"] = "drude";
  out.regular.metadata["part"] = "regular";
  out.total.metadata["part"] = "total";
  return out;
}

inline BlochConductivity conductivity_graphene_converged(const GrapheneParams& p, const OccupationSpec& occ,
                                                         double gamma, const FrequencyGrid& omegas,
                                                         const ConvergenceOptions& conv,
                                                         const PhysicalConstants& c = {},
                                                         const BlochOptions& opts = {}) {
  return converge_in_L([&](int L) { return conductivity_graphene_closed_form(p, occ, gamma, omegas, L, c, opts); },
                       conv);
}

}  // namespace kubo
