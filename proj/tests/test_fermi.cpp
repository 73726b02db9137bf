#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "kubo/fermi.hpp"

using namespace kubo;

TEST(FermiDirac, HalfAtMu) {
  for (double beta : {0.1, 1.0, 37.0}) EXPECT_DOUBLE_EQ(fermi_dirac(0.3, beta, 0.3), 0.5);
}

TEST(FermiDirac, TailWithoutOverflow) {
  const double f = fermi_dirac(100.0, 10.0, 0.0);
  EXPECT_LT(f, 1e-43);
  EXPECT_GE(f, 0.0);
  EXPECT_DOUBLE_EQ(fermi_dirac(-1e6, 10.0, 0.0), 1.0);
}

TEST(FermiDirac, ZeroTemperatureStep) {
  EXPECT_EQ(fermi_dirac(-0.5, zero_temperature, 0.0), 1.0);
  EXPECT_EQ(fermi_dirac(0.5, zero_temperature, 0.0), 0.0);
  EXPECT_EQ(fermi_dirac(0.0, zero_temperature, 0.0), 0.5);
}

TEST(FermiDirac, BoundedAndMonotone) {
  for (double beta : {0.01, 1.0, 50.0, zero_temperature}) {
    double prev = 1.0;
    for (double E = -20.0; E <= 20.0; E += 0.01) {
      const double f = fermi_dirac(E, beta, 0.1);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      EXPECT_LE(f, prev);
      prev = f;
    }
  }
}

TEST(FermiDerivative, AtMu) { EXPECT_DOUBLE_EQ(fermi_derivative(1.0, 8.0, 1.0), -2.0); }

TEST(FermiDerivative, MatchesFiniteDifferences) {
  for (double beta : {0.5, 2.0, 10.0})
    for (double x : {-1.0, -0.3, 0.0, 0.4, 1.0}) {
      const double h = 1e-5;
      const double fd = (fermi_dirac(x + h, beta, 0.0) - fermi_dirac(x - h, beta, 0.0)) / (2 * h);
      EXPECT_NEAR(fermi_derivative(x, beta, 0.0), fd, 1e-8);
      EXPECT_LE(fermi_derivative(x, beta, 0.0), 0.0);
    }
}

TEST(FermiDerivative, Tail) {
  const double beta = 2.0;
  EXPECT_LT(std::abs(fermi_derivative(20.0, beta, 0.0)), 1e-16 * beta);
  EXPECT_LT(std::abs(fermi_derivative(-20.0, beta, 0.0)), 1e-16 * beta);
}

TEST(FermiDerivative, ZeroTemperatureRejected) {
  EXPECT_THROW(fermi_derivative(0.0, zero_temperature, 0.0), ZeroTemperatureUnsupported);
}

TEST(DividedDifference, BranchesAgreeNearDegeneracy) {
  const double beta = 3.0;
  const double eps = 1e-8;
  EXPECT_DOUBLE_EQ(fermi_divided_difference(0.2, 0.2, beta, 0.0, eps), fermi_derivative(0.2, beta, 0.0));
  EXPECT_NEAR(fermi_divided_difference(0.2, 0.2 + 1e-5, beta, 0.0, eps), fermi_derivative(0.2, beta, 0.0), 1e-5);
  const double dd = fermi_divided_difference(-1.0, 2.0, beta, 0.0, eps);
  EXPECT_NEAR(dd, (fermi_dirac(2.0, beta, 0.0) - fermi_dirac(-1.0, beta, 0.0)) / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(dd, fermi_divided_difference(2.0, -1.0, beta, 0.0, eps));
}

TEST(SolveMu, SingleLevelInvertsLogistic) {
  const std::vector<double> E{0.0};
  EXPECT_NEAR(solve_mu(E, 1.0, 0.25, 1.0), -std::log(3.0), 1e-9);
}

TEST(SolveMu, ParticleHoleSymmetricSpectrum) {
  std::vector<double> E;
  for (int i = 0; i < 50; ++i) {
    const double e = 0.1 + 0.05 * i;
    E.push_back(e);
    E.push_back(-e);
  }
  // half filling: one particle per pair of levels
  EXPECT_NEAR(solve_mu(E, 50.0, 1.0, 4.0), 0.0, 1e-9);
}

TEST(SolveMu, FreeGasRoundTrip) {
  std::vector<double> E;
  const double box = 200.0;
  for (int n = -300; n <= 300; ++n) {
    const double k = 2 * pi * n / box;
    E.push_back(0.5 * k * k);
  }
  const double mu = solve_mu(E, box, 0.1, 5.0);
  EXPECT_NEAR(particle_density(E, box, 5.0, mu), 0.1, 1e-10 * 0.1);
}

TEST(SolveMu, MonotoneInDensity) {
  std::vector<double> E;
  for (int i = 0; i < 40; ++i) E.push_back(std::cos(0.3 * i));
  double prev = -1e9;
  for (double n : {0.05, 0.2, 0.5, 0.8, 0.95}) {
    const double mu = solve_mu(E, 40.0, n, 3.0);
    EXPECT_GT(mu, prev);
    prev = mu;
  }
}

TEST(SolveMu, OutOfRange) {
  const std::vector<double> E{0.0, 1.0};
  EXPECT_THROW(solve_mu(E, 1.0, 2.0, 1.0), DensityOutOfRange);
  EXPECT_THROW(solve_mu(E, 1.0, 0.0, 1.0), DensityOutOfRange);
  EXPECT_THROW(solve_mu(std::vector<double>{}, 1.0, 0.5, 1.0), DensityOutOfRange);
}

TEST(Occupation, Validation) {
  EXPECT_THROW(OccupationSpec::at_mu(0.0, 0.0).validate(), InvalidOccupation);
  EXPECT_THROW(OccupationSpec::at_mu(-1.0, 0.0).validate(), InvalidOccupation);
  EXPECT_THROW(OccupationSpec::at_density(1.0, -0.1).validate(), InvalidOccupation);
  EXPECT_NO_THROW(OccupationSpec::at_mu(zero_temperature, 0.0).validate());
  EXPECT_THROW(OccupationSpec::at_mu(zero_temperature, 0.0).require_finite_beta(), ZeroTemperatureUnsupported);
}

TEST(Maxwellian, PeakValue) {
  EXPECT_NEAR(maxwellian(Vector::Zero(1), 1.0, 1.0, 1.0), 1.0 / std::sqrt(2 * pi), 1e-15);
}

TEST(Maxwellian, NormalisationAndMoments) {
  using boost::math::quadrature::gauss_kronrod;
  for (double beta : {0.5, 2.0})
    for (double m : {1.0, 3.0}) {
      auto f = [&](double p) { return maxwellian(Vector::Constant(1, p), beta, 0.7, m); };
      const double norm = gauss_kronrod<double, 61>::integrate(f, -std::numeric_limits<double>::infinity(),
                                                               std::numeric_limits<double>::infinity(), 15, 1e-12);
      EXPECT_NEAR(norm, 0.7, 1e-8);
      auto g = [&](double p) { return p * f(p); };
      const double first = gauss_kronrod<double, 61>::integrate(g, -std::numeric_limits<double>::infinity(),
                                                                std::numeric_limits<double>::infinity(), 15, 1e-12);
      EXPECT_NEAR(first, 0.0, 1e-10);
      auto h = [&](double p) { return p * p * f(p); };
      const double second = gauss_kronrod<double, 61>::integrate(h, -std::numeric_limits<double>::infinity(),
                                                                 std::numeric_limits<double>::infinity(), 15, 1e-12);
      EXPECT_NEAR(second, 0.7 * m / beta, 1e-8);
    }
}
