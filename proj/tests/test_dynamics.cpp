#include <algorithm>
#include <cstdlib>

#include <gtest/gtest.h>

#include "kubo/dynamics.hpp"
#include "kubo/kubo_trace.hpp"

using namespace kubo;

namespace {

FiniteModel small_chain() {
  Vector onsite(8);
  onsite << 0.2, -0.1, 0.3, 0.0, -0.3, 0.1, 0.25, -0.2;
  return open_chain(8, 1.0, 1.0, onsite);
}

Vector field_x(double e) { return Vector::Constant(1, e); }

void expect_within(const StochasticEstimate& est, cplx ref, double k_sigma, double floor) {
  const double tol_re = std::max(k_sigma * est.stderr_re(0), floor);
  const double tol_im = std::max(k_sigma * est.stderr_im(0), floor);
  EXPECT_LE(std::abs(est.value(0).real() - ref.real()), tol_re) << est.value(0) << " vs " << ref;
  EXPECT_LE(std::abs(est.value(0).imag() - ref.imag()), tol_im) << est.value(0) << " vs " << ref;
}

}  // namespace

TEST(DrawIntervals, Deterministic) {
  const ScatteringProcess p{1.5, 99, 1000, 0};
  EXPECT_EQ(draw_intervals(p), draw_intervals(p));
  ScatteringProcess q = p;
  q.seed = 100;
  EXPECT_NE(draw_intervals(p), draw_intervals(q));
  ScatteringProcess longer = p;
  longer.n_events = 2000;
  const auto a = draw_intervals(p), b = draw_intervals(longer);
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
}

TEST(DrawIntervals, MeanWithinCltBound) {
  const std::size_t n = 1000000;
  const auto tau = draw_intervals({2.0, 12345, n, 0});
  double sum = 0.0;
  for (double t : tau) sum += t;
  EXPECT_LE(std::abs(sum / n - 0.5), 3.0 * 0.5 / std::sqrt(double(n)));
}

TEST(DrawIntervals, KolmogorovSmirnov) {
  const std::size_t n = 10000;
  const double gamma = 1.7;
  auto tau = draw_intervals({gamma, 2024, n, 0});
  std::sort(tau.begin(), tau.end());
  double D = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = 1.0 - std::exp(-gamma * tau[i]);
    D = std::max({D, double(i + 1) / n - F, F - double(i) / n});
  }
  EXPECT_LT(D, 1.628 / std::sqrt(double(n)));  // 1% critical value
}

TEST(QuantumDc, ZeroFieldGivesEquilibriumCurrent) {
  const auto occ = OccupationSpec::at_mu(2.0, 0.1);
  const ScatteringProcess p{0.5, 3, 200, 0};
  for (const auto& m : {small_chain(), ring_model().torus(12)}) {
    const auto est = simulate_quantum_dc(m, occ, p, field_x(0.0));
    EXPECT_LT(est.value.cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto flux = ring_model(1.0, 0.4).torus(12);
  const auto est = simulate_quantum_dc(flux, occ, p, field_x(0.0));
  EXPECT_NEAR(est.value(0).real(), equilibrium_current(flux, occ)(0), 1e-12);
  EXPECT_NEAR(est.value(0).imag(), 0.0, 1e-12);
}

TEST(QuantumDc, OpenChainMatchesKubo) {
  const auto model = small_chain();
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const double E = 1e-3;
  const auto kubo = conductivity_trace(model, occ, {0.5}, FrequencyGrid({0.0}));
  const auto est = simulate_quantum_dc(model, occ, {0.5, 20261016, 20000, 0}, field_x(E));
  expect_within(est, kubo.sigma[0](0, 0) * E, 3.0, 1e-9);
  EXPECT_EQ(est.metadata["representation"], "dense");
}

TEST(QuantumAc, OpenChainMatchesKubo) {
  const auto model = small_chain();
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const double E = 1e-3, omega = 0.8;
  const auto kubo = conductivity_trace(model, occ, {0.4}, FrequencyGrid({omega}));
  const auto est = simulate_quantum_ac(model, occ, {0.4, 20261016, 5000, 0}, {field_x(E), omega, 8, false, true});
  expect_within(est, kubo.sigma[0](0, 0) * E, 3.0, 1e-9);
}

TEST(QuantumAc, DcFlagDelegates) {
  const auto model = small_chain();
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const ScatteringProcess p{0.5, 8, 500, 0};
  const auto a = simulate_quantum_ac(model, occ, p, {field_x(1e-3), 0.0, 8, true, true});
  const auto b = simulate_quantum_dc(model, occ, p, field_x(1e-3));
  EXPECT_EQ(a.value(0), b.value(0));
}

TEST(QuantumAc, ZeroFrequencyIntegratorAgreesWithExactDc) {
  // the time-stepped path at omega = 0 and theta = 0 must reproduce the exact
  // mode evolution up to step error; same draws, so no sampling noise
  const auto model = small_chain();
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const ScatteringProcess p{0.5, 11, 300, 0};
  const auto ac = simulate_quantum_ac(model, occ, p, {field_x(1e-3), 0.0, 8, false, false});
  const auto dc = simulate_quantum_dc(model, occ, p, field_x(1e-3));
  // without phase averaging the estimate is 2 <cos(0) J> = 2 J
  EXPECT_NEAR(ac.value(0).real(), 2.0 * dc.value(0).real(), 1e-7 * std::abs(dc.value(0)));  // RK4 truncation
}

TEST(QuantumAc, PhaseAverageOrderInsensitive) {
  const auto model = ring_model().torus(8);
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const ScatteringProcess p{0.4, 5, 1500, 0};
  const auto m4 = simulate_quantum_ac(model, occ, p, {field_x(1e-3), 0.8, 4, false, true});
  const auto m8 = simulate_quantum_ac(model, occ, p, {field_x(1e-3), 0.8, 8, false, true});
  EXPECT_LT(std::abs(m4.value(0) - m8.value(0)), 0.1 * std::min(m8.stderr_re(0), m8.stderr_im(0)));
}

TEST(Integrator, EquilibriumStationaryAndInvariants) {
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  for (const auto& m : {small_chain(), ring_model().torus(10)}) {
    const auto sys = make_liouville_system(m, occ);
    const double h = max_step(sys->hamiltonian_norm(), 0.8, {});
    EXPECT_NO_THROW(check_integrator(*sys, h, 0.5));
    const CVector x0 = sys->equilibrium();
    const CVector still = evolve_state(*sys, 20.0, h, Vector::Zero(1), 0.0, 0.0);
    EXPECT_LT((still - x0).cwiseAbs().maxCoeff(), 1e-10);
    // driven: trace and hermiticity preserved
    const CVector x = evolve_state(*sys, 20.0, h, field_x(0.05), 0.8, 0.3);
    EXPECT_LT(std::abs(sys->trace(x) - sys->trace(x0)), 1e-10);
    const Matrix rho = sys->density_matrix(x);
    EXPECT_LT(max_abs(rho - rho.adjoint()), 1e-10);
    EXPECT_GT(max_abs(rho - sys->density_matrix(x0)), 1e-6);
  }
}

TEST(Integrator, StepBound) {
  EXPECT_NEAR(max_step(2.0, 0.0, {}), 1.0 / 40.0, 1e-15);
  EXPECT_NEAR(max_step(0.1, 10.0, {}), 2 * pi / 400.0, 1e-15);
  IntegratorOptions opts;
  opts.step = 1.0;
  EXPECT_THROW(simulate_quantum_ac(small_chain(), OccupationSpec::at_mu(1.0, 0.0), {0.5, 1, 10, 0},
                                   {field_x(1e-3), 0.8, 8, false, true}, {}, opts),
               StepSizeTooCoarse);
}

TEST(QuantumDynamics, Errors) {
  const auto occ = OccupationSpec::at_mu(1.0, 0.0);
  EXPECT_THROW(simulate_quantum_dc(open_chain(600, 1.0), occ, {0.5, 1, 10, 0}, field_x(0.0)), DimensionTooLarge);
  EXPECT_THROW(simulate_quantum_dc(small_chain(), occ, {0.0, 1, 10, 0}, field_x(0.0)), NonPositiveGamma);
  const FiniteModel bare(Matrix::Zero(3, 3), {Matrix::Zero(3, 3)}, 3.0);
  EXPECT_THROW(simulate_quantum_dc(bare, occ, {0.5, 1, 10, 0}, field_x(0.0)), UnsupportedModel);
  EXPECT_THROW(simulate_quantum_dc(small_chain(), occ, {0.5, 1, 10, 0}, Vector::Zero(2)), DimensionMismatch);
}

TEST(QuantumDynamics, ThreadCountIndependent) {
  const auto model = ring_model().torus(8);
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const ScatteringProcess p{0.4, 77, 400, 0};
  const DriveSpec drive{field_x(1e-3), 0.8, 4, false, true};
  setenv("KUBO_THREADS", "1", 1);
  const auto a = simulate_quantum_ac(model, occ, p, drive);
  const auto c = simulate_quantum_dc(model, occ, p, field_x(1e-3));
  setenv("KUBO_THREADS", "5", 1);
  const auto b = simulate_quantum_ac(model, occ, p, drive);
  const auto d = simulate_quantum_dc(model, occ, p, field_x(1e-3));
  unsetenv("KUBO_THREADS");
  EXPECT_EQ(a.value(0), b.value(0));
  EXPECT_EQ(a.stderr_re(0), b.stderr_re(0));
  EXPECT_EQ(c.value(0), d.value(0));
}

TEST(Classical, DcDrude) {
  const double gamma = 0.7, E = 0.01;
  const auto est = simulate_classical({gamma, 4, 100000, 0}, 1.0, 1.3, 2.0, {field_x(E), 0.0, 8, true, true});
  expect_within(est, classical_drude(1.3, 2.0, gamma, 0.0) * E, 3.0, 0.0);
}

TEST(Classical, AcDrude) {
  const double gamma = 0.5, omega = 2 * gamma, E = 0.01;
  const auto est = simulate_classical({gamma, 6, 100000, 0}, 1.0, 1.0, 1.0, {field_x(E), omega, 8, false, true});
  expect_within(est, classical_drude(1.0, 1.0, gamma, omega) * E, 3.0, 0.0);
}

TEST(Classical, StrongScatteringSuppressesResponse) {
  const double gamma = 50.0, E = 1.0;
  const auto est = simulate_classical({gamma, 9, 20000, 0}, 1.0, 1.0, 1.0, {field_x(E), 1.0, 8, false, true});
  EXPECT_NEAR(std::abs(est.value(0)), E / gamma, 0.02 * E / gamma);
  EXPECT_NEAR(std::abs(classical_drude(1.0, 1.0, gamma, 1.0)), 1.0 / gamma, 2e-4 / gamma);
}

TEST(Classical, Errors) {
  EXPECT_THROW(simulate_classical({0.0, 1, 10, 0}, 1.0, 1.0, 1.0, {field_x(1.0), 0.0, 8, true, true}), NonPositiveGamma);
  EXPECT_THROW(simulate_classical({1.0, 1, 10, 0}, 1.0, -1.0, 1.0, {field_x(1.0), 0.0, 8, true, true}), InvalidOccupation);
}

TEST(Phi, SeriesAndClosedFormAgree) {
  for (double r : {0.49, 0.51}) {
    const cplx z = std::polar(r, 0.7);
    EXPECT_LT(std::abs(detail::phi1(z) - (std::exp(z) - 1.0) / z), 1e-14);
    EXPECT_LT(std::abs(detail::phi2(z) - (std::exp(z) - 1.0 - z) / (z * z)), 1e-13);
  }
}
