#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kubo/core.hpp"
#include "kubo/fermi.hpp"
#include "kubo/kubo_trace.hpp"
#include "kubo/linalg.hpp"
#include "kubo/models.hpp"
#include "kubo/parallel.hpp"

namespace kubo {

/// Eigenpairs and velocity matrices V^l = chi^dagger dH/dk_l chi on a k grid.
struct BandData {
  int L = 0;
  std::vector<Vector> kpoints;
  std::vector<Vector> energies;
  std::vector<Matrix> vectors;
  std::vector<std::vector<Matrix>> velocities;  // [k][l]

  std::size_t size() const { return kpoints.size(); }
  double spectral_radius() const {
    double r = 0.0;
    for (const auto& e : energies)
      if (e.size() > 0) r = std::max(r, e.cwiseAbs().maxCoeff());
    return r;
  }
  std::vector<double> all_energies() const {
    std::vector<double> out;
    for (const auto& e : energies) out.insert(out.end(), e.data(), e.data() + e.size());
    return out;
  }
};

inline constexpr std::size_t kpoint_chunk = 64;

inline BandData compute_bands(const BlochModel& model, int L) {
  BandData bd;
  bd.L = L;
  bd.kpoints = k_grid(model.lattice, L);
  const std::size_t nk = bd.kpoints.size();
  const int d = model.dim();
  bd.energies.resize(nk);
  bd.vectors.resize(nk);
  bd.velocities.resize(nk);
  for_each_chunk(nk, kpoint_chunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vector& k = bd.kpoints[i];
      const Matrix H = model.h_of_k(k);
      if (!is_hermitian(H, 1e-10)) throw NonHermitianInput("H(k) is not Hermitian");
      auto eig = diagonalize(0.5 * (H + H.adjoint()));
      std::vector<Matrix> V;
      for (int l = 0; l < d; ++l) V.push_back(eig.to_eigenbasis(model.dh_dk(k, l)));
      bd.energies[i] = std::move(eig.energies);
      bd.vectors[i] = std::move(eig.vectors);
      bd.velocities[i] = std::move(V);
    }
  });
  return bd;
}

struct BlochOptions {
  std::optional<double> eps_deg;  // default 1e-8 * max(1, max_k spectral radius)
};

/// Total conductivity and its intraband (Drude) and interband (regular) parts.
struct BlochConductivity {
  ConductivityResult total;
  ConductivityResult drude;
  ConductivityResult regular;
};

namespace detail {

inline json bloch_metadata(const char* method, const BlochModel& model, int L, const OccupationSpec& occ, double mu,
                           double density, double gamma, double eps, const PhysicalConstants& c) {
  return json{{"method", method},
              {"model", model.name},
              {"L", L},
              {"n_kpoints", [&] {
                 std::size_t n = 1;
                 for (int i = 0; i < model.dim(); ++i) n *= static_cast<std::size_t>(L);
                 return n;
               }()},
              {"n_bands", model.n_bands},
              {"spatial_dim", model.dim()},
              {"cell_volume", model.cell_volume()},
              {"beta", beta_json(occ.beta)},
              {"mu", mu},
              {"density", density},
              {"gamma", gamma},
              {"eps_deg", eps},
              {"constants", constants_json(c)}};
}

inline BlochConductivity make_parts(int d, const FrequencyGrid& omegas, Method method) {
  BlochConductivity out;
  for (auto* r : {&out.total, &out.drude, &out.regular}) {
    r->dim = d;
    r->method = method;
    r->omegas = omegas.values();
    r->sigma.assign(omegas.size(), Matrix::Zero(d, d));
  }
  return out;
}

/// Smallest gap between adjacent bands over the grid, and the total bandwidth.
inline std::pair<double, double> gap_and_bandwidth(const BandData& bd) {
  double gap = std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : bd.energies) {
    for (Eigen::Index n = 1; n < e.size(); ++n) gap = std::min(gap, e(n) - e(n - 1));
    if (e.size() > 0) {
      lo = std::min(lo, e.minCoeff());
      hi = std::max(hi, e.maxCoeff());
    }
  }
  return {gap, hi - lo};
}

}  // namespace detail

/// Finite-L Brillouin-zone sum with the Drude/regular split.
inline BlochConductivity conductivity_bloch_parts(const BlochModel& model, const OccupationSpec& occ, double gamma,
                                                  const FrequencyGrid& omegas, int L, const PhysicalConstants& c = {},
                                                  const BlochOptions& opts = {}) {
  c.validate();
  occ.validate();
  occ.require_finite_beta();
  DissipationSpec{gamma}.validate();
  const int d = model.dim();
  const BandData bd = compute_bands(model, L);
  const std::size_t nk = bd.size();
  const double total_volume = double(nk) * model.cell_volume();
  const auto all_E = bd.all_energies();
  const double mu = resolve_mu(occ, all_E, total_volume);
  const double eps = opts.eps_deg.value_or(default_degeneracy_tolerance(bd.spectral_radius()));
  const std::size_t nw = omegas.size();
  const double beta = occ.beta;

  struct Partial {
    std::vector<Matrix> drude, regular;
  };
  std::vector<Partial> partial(chunk_count(nk, kpoint_chunk));
  for_each_chunk(nk, kpoint_chunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Partial p;
    p.drude.assign(nw, Matrix::Zero(d, d));
    p.regular.assign(nw, Matrix::Zero(d, d));
    for (std::size_t i = begin; i < end; ++i) {
      const Vector& E = bd.energies[i];
      const auto& V = bd.velocities[i];
      const Eigen::Index N = E.size();
      for (Eigen::Index n = 0; n < N; ++n)
        for (Eigen::Index np = 0; np < N; ++np) {
          const bool intra = std::abs(E(np) - E(n)) <= eps;
          const double dphi = fermi_divided_difference(E(n), E(np), beta, mu, eps);
          if (dphi == 0.0) continue;
          Matrix vv(d, d);
          for (int l = 0; l < d; ++l)
            for (int m = 0; m < d; ++m) vv(l, m) = V[l](n, np) * V[m](np, n);
          const cplx de = imag_unit * (E(np) - E(n)) / c.hbar;
          for (std::size_t w = 0; w < nw; ++w) {
            const cplx factor = dphi / (de - imag_unit * omegas[w] + gamma);
            (intra ? p.drude[w] : p.regular[w]) += factor * vv;
          }
        }
    }
    partial[chunk] = std::move(p);
  });

  BlochConductivity out = detail::make_parts(d, omegas, Method::bloch);
  const double pref = -(c.e_charge * c.e_charge) / (c.hbar * c.hbar * total_volume);
  for (std::size_t w = 0; w < nw; ++w) {
    Matrix D = Matrix::Zero(d, d), R = Matrix::Zero(d, d);
    for (const auto& p : partial) {
      D += p.drude[w];
      R += p.regular[w];
    }
    out.drude.sigma[w] = pref * D;
    out.regular.sigma[w] = pref * R;
    out.total.sigma[w] = pref * (D + R);
  }

  double occupied = 0.0;
  for (double e : all_E) occupied += fermi_dirac(e, beta, mu);
  json meta = detail::bloch_metadata("bloch", model, L, occ, mu, occupied / total_volume, gamma, eps, c);
  json warnings = json::array();
  auto [gap, width] = detail::gap_and_bandwidth(bd);
  if (model.n_bands > 1 && gap < 1e-3 * width)
    warnings.push_back("smallest interband gap on the grid (" + std::to_string(gap) + ") is below 1e-3 of the bandwidth");
  meta["warnings"] = warnings;
  for (auto* r : {&out.total, &out.drude, &out.regular}) {
    r->metadata = meta;
    r->check_finite();
  }
  out.drude.metadata["part"] = "drude";
  out.regular.metadata["part"] = "regular";
  out.total.metadata["part"] = "total";
  return out;
}

inline ConductivityResult conductivity_bloch(const BlochModel& model, const OccupationSpec& occ, double gamma,
                                             const FrequencyGrid& omegas, int L, const PhysicalConstants& c = {},
                                             const BlochOptions& opts = {}) {
  return conductivity_bloch_parts(model, occ, gamma, omegas, L, c, opts).total;
}

inline ConductivityResult drude_part(const BlochModel& model, const OccupationSpec& occ, double gamma,
                                     const FrequencyGrid& omegas, int L, const PhysicalConstants& c = {},
                                     const BlochOptions& opts = {}) {
  return conductivity_bloch_parts(model, occ, gamma, omegas, L, c, opts).drude;
}

inline ConductivityResult regular_part(const BlochModel& model, const OccupationSpec& occ, double gamma,
                                       const FrequencyGrid& omegas, int L, const PhysicalConstants& c = {},
                                       const BlochOptions& opts = {}) {
  return conductivity_bloch_parts(model, occ, gamma, omegas, L, c, opts).regular;
}

/// Largest entrywise change between two results, relative to the largest
/// entry of the newer one at the same frequency.
inline double relative_change(const ConductivityResult& older, const ConductivityResult& newer) {
  double worst = 0.0;
  for (std::size_t w = 0; w < newer.sigma.size(); ++w) {
    const double scale = max_abs(newer.sigma[w]);
    const double diff = max_abs(newer.sigma[w] - older.sigma[w]);
    if (diff == 0.0) continue;
    worst = std::max(worst, scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity());
  }
  return worst;
}

struct ConvergenceOptions {
  int L0 = 16;
  double rtol = 1e-8;
  int max_refinements = 6;

  void validate() const {
    if (L0 < 2 || L0 % 2 != 0) throw InvalidResolution("L0 must be even and >= 2");
    if (!(rtol > 0.0)) throw ValidationError("rtol must be positive");
    if (max_refinements < 1) throw ValidationError("max_refinements must be >= 1");
  }
};

/// Doubles L until the total conductivity changes by less than rtol.
inline BlochConductivity converge_in_L(const std::function<BlochConductivity(int)>& at_L,
                                       const ConvergenceOptions& opts) {
  opts.validate();
  int L = opts.L0;
  BlochConductivity prev = at_L(L);
  json history = json::array();
  for (int r = 0; r < opts.max_refinements; ++r) {
    L *= 2;
    BlochConductivity next = at_L(L);
    const double change = relative_change(prev.total, next.total);
    history.push_back(json{{"L", L}, {"relative_change", change}});
    if (change < opts.rtol) {
      for (auto* res : {&next.total, &next.drude, &next.regular}) {
        res->metadata["converged"] = true;
        res->metadata["rtol"] = opts.rtol;
        res->metadata["refinements"] = history;
      }
      return next;
    }
    prev = std::move(next);
  }
  throw NoConvergence("grid doubling did not reach rtol " + std::to_string(opts.rtol) + " by L = " +
                      std::to_string(L));
}

inline BlochConductivity conductivity_bloch_converged(const BlochModel& model, const OccupationSpec& occ,
                                                      double gamma, const FrequencyGrid& omegas,
                                                      const ConvergenceOptions& conv, const PhysicalConstants& c = {},
                                                      const BlochOptions& opts = {}) {
  return converge_in_L([&](int L) { return conductivity_bloch_parts(model, occ, gamma, omegas, L, c, opts); }, conv);
}

// ---------------------------------------------------------------------------
// Effective mass

enum class MassForm { matrix_element, band_velocity, band_curvature };

inline const char* to_string(MassForm f) {
  switch (f) {
    case MassForm::matrix_element: return "matrix_element";
    case MassForm::band_velocity: return "band_velocity";
    case MassForm::band_curvature: return "band_curvature";
  }
  return "unknown";
}

struct EffectiveMassTensor {
  RealMatrix inv_m;
  MassForm form = MassForm::matrix_element;
  double density = 0.0;
  double mu = 0.0;
  int L = 0;
};

namespace detail {

/// Sixth-order central stencils in reduced coordinates s = B^{-1} k, step 1/L.
/// The mixed derivative is the product of two first-derivative stencils.
inline RealMatrix reduced_hessian(const std::vector<Vector>& E, int band, const IndexVector& n, int L) {
  const int d = static_cast<int>(n.size());
  auto at = [&](const IndexVector& m) { return E[grid_linear_index(m, L)](band); };
  static constexpr double c2[4] = {-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};
  static constexpr double c1[3] = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
  RealMatrix Hs(d, d);
  const double inv_h2 = double(L) * double(L);
  for (int i = 0; i < d; ++i) {
    IndexVector ei = IndexVector::Zero(d);
    ei(i) = 1;
    double s = c2[0] * at(n);
    for (int r = 1; r <= 3; ++r) s += c2[r] * (at(n + r * ei) + at(n - r * ei));
    Hs(i, i) = s * inv_h2;
    for (int j = 0; j < i; ++j) {
      IndexVector ej = IndexVector::Zero(d);
      ej(j) = 1;
      double m = 0.0;
      for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b)
          m += c1[a - 1] * c1[b - 1] *
               (at(n + a * ei + b * ej) - at(n + a * ei - b * ej) - at(n - a * ei + b * ej) + at(n - a * ei - b * ej));
      Hs(i, j) = Hs(j, i) = m * inv_h2;
    }
  }
  return Hs;
}

}  // namespace detail

/// (m^eff)^{-1} in one of three equivalent forms.
inline EffectiveMassTensor effective_mass(const BlochModel& model, const OccupationSpec& occ, int L, MassForm form,
                                          const PhysicalConstants& c = {}, const BlochOptions& opts = {}) {
  c.validate();
  occ.validate();
  occ.require_finite_beta();
  const int d = model.dim();
  const BandData bd = compute_bands(model, L);
  const std::size_t nk = bd.size();
  const double total_volume = double(nk) * model.cell_volume();
  const auto all_E = bd.all_energies();
  const double mu = resolve_mu(occ, all_E, total_volume);
  const double eps = opts.eps_deg.value_or(default_degeneracy_tolerance(bd.spectral_radius()));
  const double beta = occ.beta;

  double occupied = 0.0;
  for (double e : all_E) occupied += fermi_dirac(e, beta, mu);
  const double density = occupied / total_volume;
  if (!(density > 0.0)) throw DensityOutOfRange("no occupied states; effective mass undefined");

  if (form != MassForm::matrix_element) {
    for (std::size_t i = 0; i < nk; ++i) {
      const Vector& E = bd.energies[i];
      for (Eigen::Index n = 1; n < E.size(); ++n) {
        if (E(n) - E(n - 1) > 10.0 * eps) continue;
        auto weight = [&](double e) {
          return std::max(fermi_dirac(e, beta, mu), std::abs(fermi_derivative(e, beta, mu)) / beta);
        };
        if (std::max(weight(E(n)), weight(E(n - 1))) > 1e-13)
          throw SimplicityViolated("bands " + std::to_string(n - 1) + " and " + std::to_string(n) +
                                   " touch at an occupied grid point");
      }
    }
  }

  const auto idx = grid_indices(d, L);
  const RealMatrix Binv = model.lattice.reciprocal().inverse();
  std::vector<RealMatrix> partial(chunk_count(nk, kpoint_chunk));
  for_each_chunk(nk, kpoint_chunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    RealMatrix acc = RealMatrix::Zero(d, d);
    for (std::size_t i = begin; i < end; ++i) {
      const Vector& E = bd.energies[i];
      const auto& V = bd.velocities[i];
      const Eigen::Index N = E.size();
      for (Eigen::Index n = 0; n < N; ++n) {
        switch (form) {
          case MassForm::matrix_element:
            for (Eigen::Index np = 0; np < N; ++np) {
              if (std::abs(E(np) - E(n)) > eps) continue;
              const double w = fermi_derivative(0.5 * (E(n) + E(np)), beta, mu);
              for (int l = 0; l < d; ++l)
                for (int m = 0; m < d; ++m) acc(l, m) -= w * (V[l](n, np) * V[m](np, n)).real();
            }
            break;
          case MassForm::band_velocity: {
            const double w = fermi_derivative(E(n), beta, mu);
            for (int l = 0; l < d; ++l)
              for (int m = 0; m < d; ++m) acc(l, m) -= w * V[l](n, n).real() * V[m](n, n).real();
            break;
          }
          case MassForm::band_curvature: {
            const double w = fermi_dirac(E(n), beta, mu);
            if (w == 0.0) break;
            const RealMatrix Hs = detail::reduced_hessian(bd.energies, static_cast<int>(n), idx[i], L);
            acc += w * (Binv.transpose() * Hs * Binv);
            break;
          }
        }
      }
    }
    partial[chunk] = acc;
  });
  RealMatrix sum = RealMatrix::Zero(d, d);
  for (const auto& p : partial) sum += p;

  EffectiveMassTensor out;
  out.inv_m = sum / (c.hbar * c.hbar * total_volume * density);
  out.form = form;
  out.density = density;
  out.mu = mu;
  out.L = L;
  return out;
}

}  // namespace kubo
