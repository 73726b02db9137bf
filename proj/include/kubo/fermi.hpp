#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <variant>

#include "kubo/core.hpp"

namespace kubo {

/// beta value standing for T = 0.
inline constexpr double zero_temperature = std::numeric_limits<double>::infinity();

inline double fermi_dirac(double E, double beta, double mu) {
  if (std::isinf(beta)) {
    if (E < mu) return 1.0;
    if (E > mu) return 0.0;
    return 0.5;
  }
  const double x = beta * (E - mu);
  if (x > 0.0) {
    const double ex = std::exp(-x);
    return ex / (1.0 + ex);
  }
  return 1.0 / (1.0 + std::exp(x));
}

/// dPhi/dE = -beta Phi (1 - Phi).
inline double fermi_derivative(double E, double beta, double mu) {
  if (std::isinf(beta)) throw ZeroTemperatureUnsupported("dPhi/dE is undefined at T = 0");
  const double x = std::abs(beta * (E - mu));
  const double ex = std::exp(-x);
  const double d = 1.0 + ex;
  return -beta * ex / (d * d);
}

/// (Phi(Eb) - Phi(Ea)) / (Eb - Ea), or dPhi/dE at the midpoint once the two
/// levels are closer than eps.
inline double fermi_divided_difference(double Ea, double Eb, double beta, double mu, double eps) {
  if (std::abs(Eb - Ea) > eps)
    return (fermi_dirac(Eb, beta, mu) - fermi_dirac(Ea, beta, mu)) / (Eb - Ea);
  return fermi_derivative(0.5 * (Ea + Eb), beta, mu);
}

struct ChemicalPotential {
  double value = 0.0;
};
struct Density {
  double value = 0.0;
};

/// Temperature plus either mu or a particle density.
struct OccupationSpec {
  double beta = 1.0;
  std::variant<ChemicalPotential, Density> level = ChemicalPotential{};

  static OccupationSpec at_mu(double beta, double mu) { return {beta, ChemicalPotential{mu}}; }
  static OccupationSpec at_density(double beta, double density) { return {beta, Density{density}}; }

  bool has_mu() const { return std::holds_alternative<ChemicalPotential>(level); }
  double mu() const { return std::get<ChemicalPotential>(level).value; }
  double density() const { return std::get<Density>(level).value; }

  void validate() const {
    if (std::isnan(beta) || !(beta > 0.0)) throw InvalidOccupation("beta must be positive");
    if (has_mu()) {
      if (!std::isfinite(mu())) throw InvalidOccupation("mu must be finite");
    } else if (!(density() > 0.0) || !std::isfinite(density())) {
      throw InvalidOccupation("density must be positive and finite");
    }
  }

  void require_finite_beta() const {
    if (std::isinf(beta)) throw ZeroTemperatureUnsupported("this quantity needs a finite beta");
  }
};

/// (1 / volume) * sum_n Phi(E_n).
inline double particle_density(std::span<const double> energies, double volume, double beta, double mu) {
  double s = 0.0;
  for (double E : energies) s += fermi_dirac(E, beta, mu);
  return s / volume;
}

/// mu such that particle_density(energies, volume, beta, mu) = target, by bisection.
inline double solve_mu(std::span<const double> energies, double volume, double target, double beta) {
  if (energies.empty()) throw DensityOutOfRange("empty spectrum");
  if (!(volume > 0.0)) throw ValidationError("volume must be positive");
  if (std::isnan(beta) || !(beta > 0.0)) throw InvalidOccupation("beta must be positive");
  const double max_density = double(energies.size()) / volume;
  if (!(target > 0.0) || !(target < max_density))
    throw DensityOutOfRange("target density " + std::to_string(target) + " outside (0, " +
                            std::to_string(max_density) + ")");
  auto [emin_it, emax_it] = std::minmax_element(energies.begin(), energies.end());
  const double pad = std::isinf(beta) ? 1.0 : 50.0 / beta;
  double lo = *emin_it - pad;
  double hi = *emax_it + pad;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double n = particle_density(energies, volume, beta, mid);
    if (std::abs(n - target) <= 1e-10 * target) return mid;
    if (n < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) {
      if (std::isinf(beta)) return mid;  // step function: best attainable
      break;
    }
  }
  throw NoConvergence("chemical potential bisection did not reach the target density");
}

/// mu as given, or solved from the spectrum in density mode.
inline double resolve_mu(const OccupationSpec& occ, std::span<const double> energies, double volume) {
  occ.validate();
  if (occ.has_mu()) return occ.mu();
  return solve_mu(energies, volume, occ.density(), occ.beta);
}

/// Maxwell-Boltzmann phase-space density normalised to `density`.
inline double maxwellian(const Vector& p, double beta, double density, double mass) {
  if (!(beta > 0.0) || std::isinf(beta)) throw InvalidOccupation("maxwellian needs finite beta > 0");
  if (!(mass > 0.0)) throw ValidationError("mass must be positive");
  const double d = double(p.size());
  return density * std::pow(beta / (2.0 * pi * mass), 0.5 * d) * std::exp(-beta * p.squaredNorm() / (2.0 * mass));
}

}  // namespace kubo
