#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kubo/cli.hpp"

namespace {

void add_model_flags(CLI::App* sub, kubo::RunConfig& c) {
  sub->add_option("--model", c.model, "free, chain, dimer, planewave, graphene or a model file");
  sub->add_option("--t", c.t, "hopping energy");
  sub->add_option("--t2", c.t2, "second hopping (dimer)");
  sub->add_option("--a", c.a, "lattice constant");
  sub->add_option("--flux", c.flux, "phase of the chain hopping");
  sub->add_option("--potential", c.potential, "cosine potential amplitude (planewave)");
  sub->add_option("--dim", c.dim, "dimension for free / planewave");
  sub->add_option("--gauge", c.gauge, "graphene Bloch gauge: orbital or cell");
  sub->add_option("--cutoff", c.cutoff, "Fourier cutoff index");
  sub->add_option("--box", c.box, "free-gas box size");
  sub->add_option("--L", c.L, "grid size (cells per direction)");
  sub->add_option("--eps-deg", c.eps_deg, "degeneracy tolerance");
}

void add_physics_flags(CLI::App* sub, kubo::RunConfig& c) {
  sub->add_option("--beta", c.beta, "inverse temperature");
  sub->add_option("--mu", c.mu, "chemical potential");
  sub->add_option("--density", c.density, "particle density");
  sub->add_option("--gamma", c.gamma, "scattering rate");
  sub->add_option("--mass", c.mass, "particle mass");
  sub->add_option("--hbar", c.hbar, "reduced Planck constant");
  sub->add_option("--e-charge", c.e_charge, "elementary charge");
  sub->add_option("--omega", c.omega, "min:max:count or comma list");
}

void add_output_flags(CLI::App* sub, kubo::RunConfig& c) {
  sub->add_option("-o,--output", c.output, "output path (stdout if omitted)");
  sub->add_option("--format", c.format, "csv or json");
}

void add_stochastic_flags(CLI::App* sub, kubo::RunConfig& c) {
  sub->add_option("--seed", c.seed, "RNG seed");
  sub->add_option("--n-events", c.n_events, "number of scattering intervals");
  sub->add_option("--theta-nodes", c.theta_nodes, "phase-average nodes");
  sub->add_option("--field", c.field, "field amplitude along x");
  sub->add_flag("--dc", c.dc, "constant field");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kubo conductivity engine"};
  app.set_version_flag("--version", std::string(kubo::version_string));
  app.require_subcommand(1);

  kubo::RunConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path, "start from a JSON config or result sidecar");

  auto* cond = app.add_subcommand("conductivity", "sigma(omega) by trace, Bloch or closed form");
  add_model_flags(cond, cfg);
  add_physics_flags(cond, cfg);
  add_output_flags(cond, cfg);
  cond->add_option("--method", cfg.method, "auto, trace, bloch or closed-form");
  cond->add_option("--part", cfg.part, "total, drude or regular");
  cond->add_flag("--converge", cfg.converge, "double L until converged");
  cond->add_option("--rtol", cfg.rtol, "convergence tolerance");
  cond->add_option("--max-refinements", cfg.max_refinements, "maximum L doublings");

  auto* mass = app.add_subcommand("effective-mass", "inverse effective-mass tensor");
  add_model_flags(mass, cfg);
  add_physics_flags(mass, cfg);
  add_output_flags(mass, cfg);
  mass->add_option("--mass-form", cfg.mass_form, "all, matrix_element, band_velocity or band_curvature");

  auto* quant = app.add_subcommand("simulate-quantum", "stochastic von Neumann evolution with resets");
  add_model_flags(quant, cfg);
  add_physics_flags(quant, cfg);
  add_output_flags(quant, cfg);
  add_stochastic_flags(quant, cfg);

  auto* classical = app.add_subcommand("simulate-classical", "classical Drude Monte Carlo");
  add_physics_flags(classical, cfg);
  add_output_flags(classical, cfg);
  add_stochastic_flags(classical, cfg);
  classical->add_option("--dim", cfg.dim, "dimension");

  auto* val = app.add_subcommand("validate", "cross-check the computation routes");
  val->add_option("--suite", cfg.suite, "oracle");
  add_output_flags(val, cfg);

  // A config file provides defaults; explicit flags parsed afterwards win.
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") {
      try {
        auto j = kubo::json::parse(kubo::read_text(argv[i + 1]));
        if (j.contains("config")) j = j["config"];
        cfg = kubo::config_from_json(j);
      } catch (const std::exception& e) {
        std::cerr << "error: --config: " << e.what() << "\n";
        return 1;
      }
    }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (auto* sub : app.get_subcommands()) cfg.command = kubo::command_from_string(sub->get_name());
  return kubo::run(cfg);
}
