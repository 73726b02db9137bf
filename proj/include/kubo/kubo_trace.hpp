#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kubo/core.hpp"
#include "kubo/fermi.hpp"
#include "kubo/linalg.hpp"
#include "kubo/models.hpp"
#include "kubo/parallel.hpp"

namespace kubo {

struct DissipationSpec {
  double gamma = 1.0;

  void validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw NonPositiveGamma("gamma must be positive and finite");
  }
};

struct TraceOptions {
  std::optional<double> eps_deg;  // default 1e-8 * max(1, spectral radius)
};

/// M_ab / ((i/hbar)(E_a - E_b) - i omega + gamma), the inverse of
/// L_H - i omega + gamma on a matrix written in the eigenbasis of H.
inline Matrix apply_liouvillian_resolvent(const Matrix& M, const Vector& E, double omega, double gamma,
                                          double hbar = 1.0) {
  if (!(gamma > 0.0)) throw NonPositiveGamma("gamma must be positive");
  if (M.rows() != E.size() || M.cols() != E.size()) throw DimensionMismatch("resolvent: shape mismatch");
  Matrix out(M.rows(), M.cols());
  for (Eigen::Index b = 0; b < M.cols(); ++b)
    for (Eigen::Index a = 0; a < M.rows(); ++a)
      out(a, b) = M(a, b) / (imag_unit * (E(a) - E(b)) / hbar - imag_unit * omega + gamma);
  return out;
}

/// Divided differences of Phi between every pair of levels.
inline RealMatrix fermi_difference_matrix(const Vector& E, double beta, double mu, double eps) {
  const Eigen::Index n = E.size();
  RealMatrix P(n, n);
  for (Eigen::Index b = 0; b < n; ++b)
    for (Eigen::Index a = 0; a <= b; ++a) {
      const double v = fermi_divided_difference(E(a), E(b), beta, mu, eps);
      P(a, b) = v;
      P(b, a) = v;
    }
  return P;
}

/// d_m Phi(H) in the eigenbasis: (Phi(E_a) - Phi(E_b)) / (E_a - E_b) * <a|d_m H|b>.
inline std::vector<Matrix> gradient_fermi(const FiniteModel& model, const EigenDecomposition& eig, double beta,
                                          double mu, std::optional<double> eps_deg = {}) {
  const double eps = eps_deg.value_or(default_degeneracy_tolerance(eig.spectral_radius()));
  const RealMatrix P = fermi_difference_matrix(eig.energies, beta, mu, eps);
  std::vector<Matrix> out;
  for (int m = 0; m < model.spatial_dim(); ++m)
    out.push_back(P.cast<cplx>().cwiseProduct(eig.to_eigenbasis(model.derivation(m))));
  return out;
}

namespace detail {

/// Warn when eps_deg swallows genuinely distinct levels.
inline std::optional<std::string> degeneracy_warning(const Vector& E, double eps) {
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, E.cwiseAbs().maxCoeff());
  double min_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < E.size(); ++i) {
    const double g = E(i) - E(i - 1);
    if (g > floor) min_gap = std::min(min_gap, g);
  }
  if (eps >= min_gap)
    return "eps_deg " + std::to_string(eps) + " is not below the smallest level spacing " + std::to_string(min_gap);
  return std::nullopt;
}

}  // namespace detail

/// sigma_lm(omega) = -(e^2 / hbar^2 |Omega|) Tr[d_l H (L_H - i omega + gamma)^{-1} d_m Phi(H)]
inline ConductivityResult conductivity_trace(const FiniteModel& model, const OccupationSpec& occ,
                                             const DissipationSpec& diss, const FrequencyGrid& omegas,
                                             const PhysicalConstants& c = {}, const TraceOptions& opts = {}) {
  c.validate();
  occ.validate();
  occ.require_finite_beta();
  diss.validate();
  const int d = model.spatial_dim();
  const auto eig = diagonalize(model.hamiltonian());
  const double mu = resolve_mu(occ, model, eig);
  const double eps = opts.eps_deg.value_or(default_degeneracy_tolerance(eig.spectral_radius()));
  const Vector& E = eig.energies;
  const Eigen::Index n = E.size();

  std::vector<Matrix> D;
  for (int l = 0; l < d; ++l) D.push_back(eig.to_eigenbasis(model.derivation(l)));
  const RealMatrix P = fermi_difference_matrix(E, occ.beta, mu, eps);

  ConductivityResult res;
  res.dim = d;
  res.method = Method::trace;
  res.omegas = omegas.values();
  res.sigma.assign(omegas.size(), Matrix::Zero(d, d));
  const double pref = -(c.e_charge * c.e_charge) / (c.hbar * c.hbar * model.volume());

  for_each_chunk(omegas.size(), 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      Matrix W(n, n);
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index a = 0; a < n; ++a)
          W(a, b) = P(a, b) / (imag_unit * (E(b) - E(a)) / c.hbar - imag_unit * omegas[w] + diss.gamma);
      Matrix s(d, d);
      for (int l = 0; l < d; ++l)
        for (int m = 0; m < d; ++m) {
          // sum_ab D^l_ab W_ab D^m_ba
          s(l, m) = pref * D[l].cwiseProduct(W).cwiseProduct(D[m].transpose()).sum();
        }
      res.sigma[w] = s;
    }
  });

  double occupied = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) occupied += fermi_dirac(E(a), occ.beta, mu);
  json warnings = json::array();
  if (auto w = detail::degeneracy_warning(E, eps)) warnings.push_back(*w);
  res.metadata = json{{"method", "trace"},
                      {"hilbert_dim", n},
                      {"spatial_dim", d},
                      {"volume", model.volume()},
                      {"beta", detail::beta_json(occ.beta)},
                      {"mu", mu},
                      {"density", occupied / model.volume()},
                      {"gamma", diss.gamma},
                      {"eps_deg", eps},
                      {"constants", detail::constants_json(c)},
                      {"warnings", warnings}};
  if (model.torus()) res.metadata["L"] = model.torus()->L;
  res.check_finite();
  return res;
}

}  // namespace kubo
