// Optical conductivity of graphene at three temperatures, then a model file
// through the trace route and the stochastic simulator.
#include <cstdio>

#include "kubo/kubo.hpp"

using namespace kubo;

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : KUBO_DEMO_MODELS;
  const FrequencyGrid w = FrequencyGrid::parse("0:6:13");

  std::printf("graphene Re sigma_xx, gamma = 0.1, mu = 0\n%8s", "omega");
  const double betas[] = {2.0, 5.0, 20.0};
  std::vector<BlochConductivity> runs;
  for (double b : betas) {
    std::printf("  beta=%-6g", b);
    runs.push_back(conductivity_graphene_closed_form({}, OccupationSpec::at_mu(b, 0.0), 0.1, w, 256));
  }
  std::printf("\n");
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::printf("%8.3f", w[i]);
    for (const auto& r : runs) std::printf("  %-11.5f", r.total.sigma[i](0, 0).real());
    std::printf("\n");
  }
  std::printf("(interband edge sits near omega = 2|mu| = 0; the van Hove peak near 2t)\n\n");

  const auto loaded = load_tight_binding(dir + "/twisted_ring.json");
  const auto ring = loaded.model.torus(12);
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const double E = 1e-3;
  // the small-torus simulation tracks the large-L Kubo value, not the L = 12 one
  const auto kubo = conductivity_trace(loaded.model.torus(96), occ, {0.5}, FrequencyGrid({0.0}));
  const ScatteringProcess proc{0.5, 7, 4000, 0};
  const auto on = simulate_quantum_dc(ring, occ, proc, Vector::Constant(1, E));
  const auto off = simulate_quantum_dc(ring, occ, proc, Vector::Constant(1, 0.0));
  std::printf("%s: equilibrium current %.6e\n", loaded.model.name().c_str(), off.value(0).real());
  std::printf("  sigma_xx Kubo (L = 96) %.5f, simulated (L = 12) %.5f +- %.5f\n", kubo.sigma[0](0, 0).real(),
              (on.value(0).real() - off.value(0).real()) / E, on.stderr_re(0) / E);
  return 0;
}
