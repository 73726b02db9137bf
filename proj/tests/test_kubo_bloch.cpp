#include <gtest/gtest.h>

#include "kubo/graphene.hpp"
#include "kubo/kubo_bloch.hpp"
#include "kubo/kubo_trace.hpp"

using namespace kubo;

namespace {

double max_rel(const ConductivityResult& a, const ConductivityResult& b) {
  double worst = 0.0;
  for (std::size_t w = 0; w < a.sigma.size(); ++w)
    worst = std::max(worst, max_abs(a.sigma[w] - b.sigma[w]) / max_abs(b.sigma[w]));
  return worst;
}

/// Square lattice with anisotropic nearest-neighbour hopping.
TightBindingModel square_model(double tx, double ty) {
  std::vector<Hopping> hops;
  for (int s : {1, -1}) {
    IndexVector Rx(2), Ry(2);
    Rx << s, 0;
    Ry << 0, s;
    hops.push_back({Rx, 0, 0, tx});
    hops.push_back({Ry, 0, 0, ty});
  }
  return TightBindingModel(cubic_lattice(2), {{"s", Vector::Zero(2)}}, hops, "square");
}

std::vector<BlochModel> shipped_bloch() {
  std::map<std::vector<int>, cplx> V{{{1}, 0.3}, {{-1}, 0.3}};
  return {ring_model().bloch(),           ring_model(1.0, 0.3).bloch(), dimerized_chain_model(1.0, 0.5).bloch(),
          graphene_bloch(),               graphene_bloch({1.0, 1.0, GrapheneGauge::cell}),
          square_model(1.0, 0.5).bloch(), free_band_bloch(1),
          build_planewave_bloch(cubic_lattice(1), V, 3.5 * 2 * pi)};
}

}  // namespace

TEST(BandData, OrthonormalAndHermitian) {
  const auto bd = compute_bands(graphene_bloch(), 8);
  ASSERT_EQ(bd.size(), 64u);
  for (std::size_t i = 0; i < bd.size(); ++i) {
    EXPECT_LT(max_abs(bd.vectors[i].adjoint() * bd.vectors[i] - Matrix::Identity(2, 2)), 1e-12);
    for (const auto& V : bd.velocities[i]) EXPECT_TRUE(is_hermitian(V));
  }
}

TEST(ConductivityBloch, MatchesTraceAtSameL) {
  const auto occ = OccupationSpec::at_mu(2.0, 0.1);
  const FrequencyGrid w({0.0, 0.5, 1.5});
  for (const auto& tb : {ring_model(), ring_model(1.0, 0.3), dimerized_chain_model(1.0, 0.5), square_model(1.0, 0.5)}) {
    const auto a = conductivity_trace(tb.torus(8), occ, {0.3}, w);
    const auto b = conductivity_bloch(tb.bloch(), occ, 0.3, w, 8);
    EXPECT_LT(max_rel(a, b), 1e-10) << tb.name();
  }
}

TEST(ConductivityBloch, FreeBandIsDrude) {
  const double gamma = 0.5;
  const auto occ = OccupationSpec::at_mu(5.0, 0.5);
  const auto parts = conductivity_bloch_parts(free_band_bloch(1), occ, gamma, FrequencyGrid({0.0, 1.0, 3.0}), 256);
  const double n = parts.total.metadata["density"].get<double>();
  for (std::size_t w = 0; w < parts.total.size(); ++w) {
    const cplx drude = n / cplx(gamma, -parts.total.omegas[w]);
    EXPECT_LT(std::abs(parts.total.sigma[w](0, 0) - drude) / std::abs(drude), 1e-3);
    EXPECT_LE(max_abs(parts.regular.sigma[w]), 1e-14);
  }
}

TEST(ConductivityBloch, PartitionIdentity) {
  const auto occ = OccupationSpec::at_mu(3.0, 0.2);
  const FrequencyGrid w({0.0, 0.8, 2.5});
  for (const auto& m : shipped_bloch()) {
    const auto p = conductivity_bloch_parts(m, occ, 0.25, w, 16);
    for (std::size_t i = 0; i < w.size(); ++i)
      EXPECT_LE(max_abs(p.drude.sigma[i] + p.regular.sigma[i] - p.total.sigma[i]), 1e-12) << m.name;
  }
}

TEST(ConductivityBloch, SingleBandHasNoRegularPart) {
  const auto r = regular_part(ring_model().bloch(), OccupationSpec::at_mu(2.0, 0.0), 0.3, FrequencyGrid({0.0, 1.0}), 32);
  for (const auto& s : r.sigma) EXPECT_EQ(max_abs(s), 0.0);
}

TEST(ConductivityBloch, GrapheneDrudeWeightVanishesAtDiracPoint) {
  // Dirac cones: sigma_D(0) = ln 2 / (pi gamma beta) at mu = 0, linear in T
  const auto g = graphene_bloch();
  const FrequencyGrid w({0.0});
  const double gamma = 0.2;
  const auto hot = drude_part(g, OccupationSpec::at_mu(2.0, 0.0), gamma, w, 512);
  double prev = std::abs(hot.sigma[0](0, 0));
  for (double beta : {20.0, 40.0}) {
    const auto cold = drude_part(g, OccupationSpec::at_mu(beta, 0.0), gamma, w, 512);
    const double s = cold.sigma[0](0, 0).real();
    EXPECT_NEAR(s, std::log(2.0) / (pi * gamma * beta), 2e-3 * s);
    EXPECT_LT(s, 0.5 * prev);
    prev = s;
  }
}

TEST(ConductivityBloch, DimerInterbandPeakAtGap) {
  const double t1 = 1.0, t2 = 0.5;
  const auto grid = FrequencyGrid::linspace(0.0, 4.0, 401);
  const auto r = regular_part(dimerized_chain_model(t1, t2).bloch(), OccupationSpec::at_mu(20.0, 0.0), 0.02, grid, 4096);
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(r.sigma[i](0, 0)) > std::abs(r.sigma[best](0, 0))) best = i;
  // smallest direct gap from the 2x2 bands on a fine k grid
  double gap = 1e9;
  for (int j = 0; j < 20000; ++j) {
    const double k = -pi + 2 * pi * j / 20000.0;
    gap = std::min(gap, 2 * std::abs(t1 + t2 * std::exp(cplx(0.0, -k))));
  }
  EXPECT_LE(std::abs(grid[best] - gap), grid[1] - grid[0] + 1e-12);
}

TEST(ConductivityBloch, ConjugationSymmetry) {
  const FrequencyGrid w({-1.5, -0.4, 0.4, 1.5});
  for (const auto& m : {ring_model().bloch(), dimerized_chain_model(1.0, 0.4).bloch(), graphene_bloch()}) {
    const auto r = conductivity_bloch(m, OccupationSpec::at_mu(2.0, 0.3), 0.2, w, 16);
    for (std::size_t i = 0; i < 2; ++i)
      EXPECT_LT(max_abs(r.sigma[i] - r.sigma[3 - i].conjugate()), 1e-10 * max_abs(r.sigma[3 - i])) << m.name;
  }
}

TEST(ConductivityBloch, ConvergesUnderDoubling) {
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const auto r = conductivity_bloch_converged(ring_model().bloch(), occ, 0.3, FrequencyGrid({0.0, 1.0}), {16, 1e-8, 6});
  EXPECT_TRUE(r.total.metadata["converged"].get<bool>());
  const int L = r.total.metadata["L"].get<int>();
  const auto finer = conductivity_bloch(ring_model().bloch(), occ, 0.3, FrequencyGrid({0.0, 1.0}), 2 * L);
  EXPECT_LT(relative_change(r.total, finer), 1e-8);
}

TEST(ConductivityBloch, NoConvergence) {
  EXPECT_THROW(conductivity_bloch_converged(graphene_bloch(), OccupationSpec::at_mu(4.0, 0.0), 0.05,
                                            FrequencyGrid({1.0}), {4, 1e-14, 1}),
               NoConvergence);
}

TEST(ConductivityBloch, SmallGapWarning) {
  const auto r = conductivity_bloch(graphene_bloch(), OccupationSpec::at_mu(2.0, 0.0), 0.3, FrequencyGrid({1.0}), 6);
  EXPECT_FALSE(r.metadata["warnings"].empty());
  const auto ok = conductivity_bloch(dimerized_chain_model(1.0, 0.5).bloch(), OccupationSpec::at_mu(2.0, 0.0), 0.3,
                                     FrequencyGrid({1.0}), 8);
  EXPECT_TRUE(ok.metadata["warnings"].empty());
}

TEST(ConductivityBloch, Errors) {
  const auto m = ring_model().bloch();
  EXPECT_THROW(conductivity_bloch(m, OccupationSpec::at_mu(2.0, 0.0), 0.3, FrequencyGrid({0.0}), 7), InvalidResolution);
  EXPECT_THROW(conductivity_bloch(m, OccupationSpec::at_mu(2.0, 0.0), -0.3, FrequencyGrid({0.0}), 8), NonPositiveGamma);
  EXPECT_THROW(drude_part(m, OccupationSpec::at_mu(zero_temperature, 0.0), 0.3, FrequencyGrid({0.0}), 8),
               ZeroTemperatureUnsupported);
}

TEST(EffectiveMass, FreeBandAllFormsGiveInverseMass) {
  const PhysicalConstants c{1.0, 1.0, 2.0};
  for (int d : {1, 2}) {
    const auto m = free_band_bloch(d, 1.0, c);
    const int L = d == 1 ? 256 : 64;
    for (auto form : {MassForm::matrix_element, MassForm::band_velocity, MassForm::band_curvature}) {
      const auto em = effective_mass(m, OccupationSpec::at_mu(10.0, 0.1), L, form, c);
      EXPECT_LT((em.inv_m - 0.5 * RealMatrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-6)
          << to_string(form) << " d=" << d;
    }
  }
}

TEST(EffectiveMass, FormsAgreeOnRing) {
  const auto m = ring_model().bloch();
  const auto occ = OccupationSpec::at_mu(2.0, 0.3);
  const auto a = effective_mass(m, occ, 256, MassForm::matrix_element);
  const auto b = effective_mass(m, occ, 256, MassForm::band_velocity);
  const auto c = effective_mass(m, occ, 256, MassForm::band_curvature);
  EXPECT_NEAR(a.inv_m(0, 0), b.inv_m(0, 0), 1e-6);
  EXPECT_NEAR(a.inv_m(0, 0), c.inv_m(0, 0), 1e-6);
  EXPECT_NEAR(b.inv_m(0, 0), c.inv_m(0, 0), 1e-6);
}

TEST(EffectiveMass, FormsAgreeOnAnisotropicSquareLattice) {
  const auto m = square_model(1.0, 0.4).bloch();
  const auto occ = OccupationSpec::at_mu(2.0, -0.5);
  const auto a = effective_mass(m, occ, 64, MassForm::matrix_element);
  const auto b = effective_mass(m, occ, 64, MassForm::band_velocity);
  const auto c = effective_mass(m, occ, 64, MassForm::band_curvature);
  EXPECT_LT((a.inv_m - b.inv_m).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((a.inv_m - c.inv_m).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_GT(a.inv_m(0, 0), 1.5 * a.inv_m(1, 1));
  EXPECT_LT((c.inv_m - c.inv_m.transpose()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EffectiveMass, DrudePartMatchesMassTensor) {
  const auto m = square_model(1.0, 0.4).bloch();
  const auto occ = OccupationSpec::at_mu(2.0, -0.5);
  const double gamma = 0.3;
  const auto em = effective_mass(m, occ, 32, MassForm::matrix_element);
  const auto D = drude_part(m, occ, gamma, FrequencyGrid({0.7}), 32);
  const Matrix expected = (em.density / cplx(gamma, -0.7)) * em.inv_m.cast<cplx>();
  EXPECT_LT(max_abs(D.sigma[0] - expected), 1e-12);
}

TEST(EffectiveMass, GrapheneIsotropic) {
  const auto em = effective_mass(graphene_bloch(), OccupationSpec::at_mu(2.0, 0.0), 128, MassForm::matrix_element);
  EXPECT_NEAR(em.inv_m(0, 0), em.inv_m(1, 1), 1e-6);
  EXPECT_LT(std::abs(em.inv_m(0, 1)), 1e-8);
  EXPECT_LT(std::abs(em.inv_m(0, 1) - em.inv_m(1, 0)), 1e-9);
}

TEST(EffectiveMass, SimplicityViolatedAtBandTouching) {
  // L divisible by 3 puts the Dirac points on the grid
  EXPECT_THROW(effective_mass(graphene_bloch(), OccupationSpec::at_mu(2.0, 0.0), 12, MassForm::band_velocity),
               SimplicityViolated);
  EXPECT_THROW(effective_mass(dimerized_chain_model(1.0, 1.0).bloch(), OccupationSpec::at_mu(2.0, 0.0), 16,
                              MassForm::band_curvature),
               SimplicityViolated);
  EXPECT_NO_THROW(effective_mass(graphene_bloch(), OccupationSpec::at_mu(2.0, 0.0), 12, MassForm::matrix_element));
}
