#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "kubo/kubo.hpp"

namespace kubo {

inline constexpr const char* version_string = "1.0.0";

enum class Command { conductivity, effective_mass, simulate_quantum, simulate_classical, validate };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::conductivity: return "conductivity";
    case Command::effective_mass: return "effective-mass";
    case Command::simulate_quantum: return "simulate-quantum";
    case Command::simulate_classical: return "simulate-classical";
    case Command::validate: return "validate";
  }
  return "unknown";
}

inline Command command_from_string(const std::string& s) {
  for (auto c : {Command::conductivity, Command::effective_mass, Command::simulate_quantum,
                 Command::simulate_classical, Command::validate})
    if (s == to_string(c)) return c;
  throw ValidationError("command: unknown value '" + s + "'");
}

/// Everything a run needs. Field names follow the command-line flags.
struct RunConfig {
  Command command = Command::conductivity;
  // model
  std::string model = "graphene";  // free, chain, dimer, planewave, graphene or a model-file path
  std::string method = "auto";     // trace, bloch, closed-form, auto
  double t = 1.0;
  double t2 = 0.5;
  double a = 1.0;
  double flux = 0.0;
  double potential = 0.2;  // planewave cosine amplitude
  int dim = 1;             // free gas / planewave dimension
  std::string gauge = "orbital";
  // physics
  double beta = 1.0;
  std::optional<double> mu;
  std::optional<double> density;
  double gamma = 0.1;
  double mass = 1.0;
  double hbar = 1.0;
  double e_charge = 1.0;
  // sweep
  std::string omega = "0:4:81";
  // numerics
  int L = 64;
  int cutoff = 8;
  double box = 400.0;
  bool converge = false;
  double rtol = 1e-8;
  int max_refinements = 6;
  std::optional<double> eps_deg;
  std::string part = "total";
  std::string mass_form = "all";
  // stochastic
  std::uint64_t seed = 1;
  std::size_t n_events = 10000;
  int theta_nodes = 8;
  double field = 1e-3;
  bool dc = false;
  // validate
  std::string suite = "oracle";
  // output
  std::string output;
  std::string format = "csv";

  PhysicalConstants constants() const { return {hbar, e_charge, mass}; }

  OccupationSpec occupation() const {
    if (mu && density) throw ValidationError("--mu and --density are mutually exclusive");
    OccupationSpec occ = density ? OccupationSpec::at_density(beta, *density) : OccupationSpec::at_mu(beta, mu.value_or(0.0));
    try {
      occ.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(density ? "--density/--beta: " : "--mu/--beta: ") + e.what());
    }
    return occ;
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + ": must be positive");
    };
    occupation();
    positive(gamma, "--gamma");
    positive(t, "--t");
    positive(a, "--a");
    positive(mass, "--mass");
    positive(hbar, "--hbar");
    positive(e_charge, "--e-charge");
    positive(box, "--box");
    positive(rtol, "--rtol");
    if (L < 2 || L % 2 != 0) throw ValidationError("--L: must be even and >= 2");
    if (cutoff < 1) throw ValidationError("--cutoff: must be >= 1");
    if (dim < 1 || dim > 3) throw ValidationError("--dim: must be 1, 2 or 3");
    if (max_refinements < 1) throw ValidationError("--max-refinements: must be >= 1");
    if (eps_deg && !(*eps_deg > 0.0)) throw ValidationError("--eps-deg: must be positive");
    if (method != "auto" && method != "trace" && method != "bloch" && method != "closed-form")
      throw ValidationError("--method: expected auto, trace, bloch or closed-form");
    if (part != "total" && part != "drude" && part != "regular")
      throw ValidationError("--part: expected total, drude or regular");
    if (format != "csv" && format != "json") throw ValidationError("--format: expected csv or json");
    if (gauge != "orbital" && gauge != "cell") throw ValidationError("--gauge: expected orbital or cell");
    if (mass_form != "all" && mass_form != "matrix_element" && mass_form != "band_velocity" &&
        mass_form != "band_curvature")
      throw ValidationError("--mass-form: expected all, matrix_element, band_velocity or band_curvature");
    if (theta_nodes < 4) throw ValidationError("--theta-nodes: must be >= 4");
    if (n_events < 2) throw ValidationError("--n-events: must be >= 2");
    if (!std::isfinite(field)) throw ValidationError("--field: must be finite");
    if (suite != "oracle") throw ValidationError("--suite: only 'oracle' is available");
    try {
      FrequencyGrid::parse(omega);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("--omega: ") + e.what());
    }
  }
};

inline json config_to_json(const RunConfig& c) {
  json j{{"command", to_string(c.command)},
         {"model", c.model},
         {"method", c.method},
         {"t", c.t},
         {"t2", c.t2},
         {"a", c.a},
         {"flux", c.flux},
         {"potential", c.potential},
         {"dim", c.dim},
         {"gauge", c.gauge},
         {"beta", c.beta},
         {"mu", c.mu ? json(*c.mu) : json(nullptr)},
         {"density", c.density ? json(*c.density) : json(nullptr)},
         {"gamma", c.gamma},
         {"mass", c.mass},
         {"hbar", c.hbar},
         {"e_charge", c.e_charge},
         {"omega", c.omega},
         {"L", c.L},
         {"cutoff", c.cutoff},
         {"box", c.box},
         {"converge", c.converge},
         {"rtol", c.rtol},
         {"max_refinements", c.max_refinements},
         {"eps_deg", c.eps_deg ? json(*c.eps_deg) : json(nullptr)},
         {"part", c.part},
         {"mass_form", c.mass_form},
         {"seed", c.seed},
         {"n_events", c.n_events},
         {"theta_nodes", c.theta_nodes},
         {"field", c.field},
         {"dc", c.dc},
         {"suite", c.suite},
         {"output", c.output},
         {"format", c.format}};
  return j;
}

/// Inverse of config_to_json; missing keys keep their defaults.
inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key) || j[key].is_null()) return;
    try {
      field = j[key].get<std::decay_t<decltype(field)>>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(std::string("config field '") + key + "' has the wrong type");
    }
  };
  auto get_opt = [&](const char* key, std::optional<double>& field) {
    if (!j.contains(key) || j[key].is_null()) return;
    if (!j[key].is_number()) throw ValidationError(std::string("config field '") + key + "' must be a number");
    field = j[key].get<double>();
  };
  if (j.contains("command")) c.command = command_from_string(j["command"].get<std::string>());
  get("model", c.model);
  get("method", c.method);
  get("t", c.t);
  get("t2", c.t2);
  get("a", c.a);
  get("flux", c.flux);
  get("potential", c.potential);
  get("dim", c.dim);
  get("gauge", c.gauge);
  get("beta", c.beta);
  get_opt("mu", c.mu);
  get_opt("density", c.density);
  get("gamma", c.gamma);
  get("mass", c.mass);
  get("hbar", c.hbar);
  get("e_charge", c.e_charge);
  get("omega", c.omega);
  get("L", c.L);
  get("cutoff", c.cutoff);
  get("box", c.box);
  get("converge", c.converge);
  get("rtol", c.rtol);
  get("max_refinements", c.max_refinements);
  get_opt("eps_deg", c.eps_deg);
  get("part", c.part);
  get("mass_form", c.mass_form);
  get("seed", c.seed);
  get("n_events", c.n_events);
  get("theta_nodes", c.theta_nodes);
  get("field", c.field);
  get("dc", c.dc);
  get("suite", c.suite);
  get("output", c.output);
  get("format", c.format);
  return c;
}

namespace cli_detail {

inline bool is_builtin(const std::string& m) {
  return m == "free" || m == "chain" || m == "dimer" || m == "planewave" || m == "graphene";
}

inline GrapheneParams graphene_params(const RunConfig& c) {
  return GrapheneParams{c.a, c.t, c.gauge == "cell" ? GrapheneGauge::cell : GrapheneGauge::orbital};
}

inline std::optional<TightBindingModel> tight_binding(const RunConfig& c) {
  if (c.model == "chain") return ring_model(c.t, c.flux, c.a);
  if (c.model == "dimer") return dimerized_chain_model(c.t, c.t2, c.a);
  if (c.model == "graphene") return graphene_tight_binding(graphene_params(c));
  if (!is_builtin(c.model)) return load_tight_binding(c.model).model;
  return std::nullopt;
}

inline BlochModel bloch_model(const RunConfig& c) {
  if (c.model == "free") return free_band_bloch(c.dim, c.a, c.constants());
  if (c.model == "planewave") {
    if (c.dim != 1) throw ValidationError("--model planewave: only dim 1 is built in");
    std::map<std::vector<int>, cplx> V{{{1}, cplx(c.potential)}, {{-1}, cplx(c.potential)}};
    const double b = 2.0 * pi / c.a;
    return build_planewave_bloch(cubic_lattice(1, c.a), V, (c.cutoff + 0.5) * b, c.constants());
  }
  if (c.model == "graphene") return graphene_bloch(graphene_params(c));
  return tight_binding(c)->bloch();
}

inline FiniteModel finite_model(const RunConfig& c) {
  if (c.model == "free") return build_free_gas(c.box, c.dim, c.cutoff, c.constants());
  if (c.model == "planewave") throw ValidationError("--model planewave has no finite-volume form; use --method bloch");
  return tight_binding(c)->torus(c.L);
}

inline std::string resolve_method(const RunConfig& c) {
  if (c.method != "auto") return c.method;
  if (c.model == "graphene") return "closed-form";
  if (c.model == "free") return "trace";
  if (is_builtin(c.model)) return "bloch";
  return "trace";
}

inline MassForm mass_form_from_string(const std::string& s) {
  if (s == "matrix_element") return MassForm::matrix_element;
  if (s == "band_velocity") return MassForm::band_velocity;
  return MassForm::band_curvature;
}

inline void write_output(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (c.output.empty()) {
    out << text;
  } else {
    write_text(c.output, text);
  }
}

inline void write_sidecar(const RunConfig& c, json meta, double seconds) {
  if (c.output.empty()) return;
  meta["config"] = config_to_json(c);
  meta["code_version"] = version_string;
  meta["wall_time_seconds"] = seconds;
  write_text(c.output + ".json", meta.dump(2) + "\n");
}

inline std::string estimate_csv_header() {
  return "omega,component,re_estimate,im_estimate,re_stderr,im_stderr,re_reference,im_reference\n";
}

inline std::string estimate_csv_row(double omega, int l, const StochasticEstimate& e, cplx ref) {
  return format_double(omega) + "," + axis_name(l) + "," + format_double(e.value(l).real()) + "," +
         format_double(e.value(l).imag()) + "," + format_double(e.stderr_re(l)) + "," +
         format_double(e.stderr_im(l)) + "," + format_double(ref.real()) + "," + format_double(ref.imag()) + "\n";
}

inline int run_conductivity(const RunConfig& c, std::ostream& out, std::ostream& err, json& meta) {
  const auto occ = c.occupation();
  const auto omegas = FrequencyGrid::parse(c.omega);
  const auto consts = c.constants();
  const std::string method = resolve_method(c);
  BlochOptions bopts{c.eps_deg};
  ConvergenceOptions conv{c.L, c.rtol, c.max_refinements};
  ConductivityResult res;
  if (method == "trace") {
    res = conductivity_trace(finite_model(c), occ, {c.gamma}, omegas, consts, TraceOptions{c.eps_deg});
    if (c.part != "total") throw ValidationError("--part: the trace method only reports the total");
  } else {
    BlochConductivity parts;
    if (method == "closed-form") {
      if (c.model != "graphene") throw ValidationError("--method closed-form is only available for graphene");
      const auto gp = graphene_params(c);
      parts = c.converge ? conductivity_graphene_converged(gp, occ, c.gamma, omegas, conv, consts, bopts)
                         : conductivity_graphene_closed_form(gp, occ, c.gamma, omegas, c.L, consts, bopts);
    } else {
      const auto bm = bloch_model(c);
      parts = c.converge ? conductivity_bloch_converged(bm, occ, c.gamma, omegas, conv, consts, bopts)
                         : conductivity_bloch_parts(bm, occ, c.gamma, omegas, c.L, consts, bopts);
    }
    res = c.part == "drude" ? parts.drude : c.part == "regular" ? parts.regular : parts.total;
  }
  for (const auto& w : res.metadata.value("warnings", json::array())) err << "warning: " << w.get<std::string>() << "\n";
  meta = res.metadata;
  meta["method_selected"] = method;
  write_output(c, c.format == "csv" ? format_csv(res) : result_json(res).dump(2) + "\n", out);
  return 0;
}

inline int run_effective_mass(const RunConfig& c, std::ostream& out, json& meta) {
  const auto occ = c.occupation();
  const auto bm = bloch_model(c);
  std::vector<MassForm> forms;
  if (c.mass_form == "all")
    forms = {MassForm::matrix_element, MassForm::band_velocity, MassForm::band_curvature};
  else
    forms = {mass_form_from_string(c.mass_form)};
  const int d = bm.dim();
  std::string text = "form";
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m) text += ",inv_m_" + axis_name(l) + axis_name(m);
  text += ",density,mu\n";
  json jforms = json::array();
  for (auto f : forms) {
    const auto em = effective_mass(bm, occ, c.L, f, c.constants(), BlochOptions{c.eps_deg});
    text += to_string(f);
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m) text += "," + format_double(em.inv_m(l, m));
    text += "," + format_double(em.density) + "," + format_double(em.mu) + "\n";
    jforms.push_back(to_string(f));
  }
  meta = json{{"method", "effective_mass"}, {"model", bm.name}, {"L", c.L}, {"forms", jforms}};
  write_output(c, text, out);
  return 0;
}

inline int run_simulate_quantum(const RunConfig& c, std::ostream& out, json& meta) {
  const auto occ = c.occupation();
  const auto omegas = FrequencyGrid::parse(c.omega);
  const auto consts = c.constants();
  const auto fm = finite_model(c);
  const auto kubo = conductivity_trace(fm, occ, {c.gamma}, omegas, consts, TraceOptions{c.eps_deg});
  const int d = fm.spatial_dim();
  Vector amp = Vector::Zero(d);
  amp(0) = c.field;
  const ScatteringProcess proc{c.gamma, c.seed, c.n_events, 0};
  std::string text = estimate_csv_header();
  json runs = json::array();
  for (std::size_t w = 0; w < omegas.size(); ++w) {
    const bool dc = c.dc || omegas[w] == 0.0;
    StochasticEstimate est = dc ? simulate_quantum_dc(fm, occ, proc, amp, consts)
                                : simulate_quantum_ac(fm, occ, proc, DriveSpec{amp, omegas[w], c.theta_nodes, false, true},
                                                      consts);
    const CVector ref = kubo.sigma[w] * amp.cast<cplx>();
    for (int l = 0; l < d; ++l) text += estimate_csv_row(omegas[w], l, est, ref(l));
    runs.push_back(est.metadata);
  }
  meta = json{{"method", "dynamics_quantum"}, {"runs", runs}, {"reference", kubo.metadata}};
  write_output(c, text, out);
  return 0;
}

inline int run_simulate_classical(const RunConfig& c, std::ostream& out, json& meta) {
  const auto omegas = FrequencyGrid::parse(c.omega);
  const double density = c.density.value_or(1.0);
  if (c.mu) throw ValidationError("--mu: simulate-classical takes --density");
  const ScatteringProcess proc{c.gamma, c.seed, c.n_events, 0};
  const int d = c.dim;
  Vector amp = Vector::Zero(d);
  amp(0) = c.field;
  std::string text = estimate_csv_header();
  json runs = json::array();
  for (double w : omegas) {
    const auto est = simulate_classical(proc, c.beta, density, c.mass, DriveSpec{amp, w, c.theta_nodes, w == 0.0, true},
                                        c.constants());
    const cplx ref = classical_drude(density, c.mass, c.gamma, w, c.constants());
    for (int l = 0; l < d; ++l) text += estimate_csv_row(w, l, est, ref * amp(l));
    runs.push_back(est.metadata);
  }
  meta = json{{"method", "dynamics_classical"}, {"runs", runs}};
  write_output(c, text, out);
  return 0;
}

struct OracleCheck {
  std::string name;
  double deviation;
  double tolerance;
};

/// Trace versus Bloch at matched L, and graphene closed form versus Bloch.
inline std::vector<OracleCheck> oracle_suite(const PhysicalConstants& consts = {}) {
  std::vector<OracleCheck> checks;
  const auto occ = OccupationSpec::at_mu(2.0, 0.0);
  const FrequencyGrid w({0.0, 0.5, 1.0, 2.0, 3.0});
  const double gamma = 0.3;
  auto rel = [](const ConductivityResult& a, const ConductivityResult& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.sigma.size(); ++i)
      worst = std::max(worst, max_abs(a.sigma[i] - b.sigma[i]) / std::max(max_abs(b.sigma[i]), 1e-300));
    return worst;
  };
  for (const auto& tb : {ring_model(), dimerized_chain_model(1.0, 0.5), graphene_tight_binding()})
    for (int L : {8, 16}) {
      const auto a = conductivity_trace(tb.torus(L), occ, {gamma}, w, consts);
      const auto b = conductivity_bloch(tb.bloch(), occ, gamma, w, L, consts);
      checks.push_back({"trace-vs-bloch " + tb.name() + " L=" + std::to_string(L), rel(a, b), 1e-9});
    }
  const auto g = GrapheneParams{};
  const auto occ4 = OccupationSpec::at_mu(4.0, 0.0);
  const FrequencyGrid wg({0.0, 1.0, 2.0, 3.0});
  const auto cf = conductivity_graphene_closed_form(g, occ4, 0.2, wg, 32, consts);
  const auto bl = conductivity_bloch_parts(graphene_bloch(g), occ4, 0.2, wg, 32, consts);
  checks.push_back({"closed-form-vs-bloch graphene total L=32", rel(cf.total, bl.total), 1e-9});
  checks.push_back({"closed-form-vs-bloch graphene regular L=32", rel(cf.regular, bl.regular), 1e-9});
  return checks;
}

inline int run_validate(const RunConfig& c, std::ostream& out, json& meta) {
  const auto checks = oracle_suite(c.constants());
  bool ok = true;
  json jc = json::array();
  std::string text = "check,max_relative_deviation,tolerance,status\n";
  for (const auto& ch : checks) {
    const bool pass = ch.deviation <= ch.tolerance;
    ok = ok && pass;
    text += ch.name + "," + format_double(ch.deviation) + "," + format_double(ch.tolerance) + "," +
            (pass ? "pass" : "FAIL") + "\n";
    jc.push_back(json{{"name", ch.name}, {"deviation", ch.deviation}, {"tolerance", ch.tolerance}, {"pass", pass}});
  }
  meta = json{{"suite", c.suite}, {"checks", jc}, {"pass", ok}};
  write_output(c, text, out);
  return ok ? 0 : 2;
}

}  // namespace cli_detail

/// Runs one configuration. Exit code 0 on success, 1 for invalid input,
/// 2 for numerical failure or a failed oracle check.
inline int run(const RunConfig& config, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const auto start = std::chrono::steady_clock::now();
  try {
    config.validate();
    json meta;
    int code = 0;
    switch (config.command) {
      case Command::conductivity: code = cli_detail::run_conductivity(config, out, err, meta); break;
      case Command::effective_mass: code = cli_detail::run_effective_mass(config, out, meta); break;
      case Command::simulate_quantum: code = cli_detail::run_simulate_quantum(config, out, meta); break;
      case Command::simulate_classical: code = cli_detail::run_simulate_classical(config, out, meta); break;
      case Command::validate: code = cli_detail::run_validate(config, out, meta); break;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    cli_detail::write_sidecar(config, meta, secs);
    return code;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace kubo
