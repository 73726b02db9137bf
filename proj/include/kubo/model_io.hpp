#pragma once

#include <optional>
#include <string>

#include "kubo/core.hpp"
#include "kubo/io.hpp"
#include "kubo/models.hpp"

namespace kubo {

/// A tight-binding model read from a model file.
struct LoadedModel {
  TightBindingModel model;
  std::optional<PhysicalConstants> constants;
};

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "/" + key, "missing field");
  return *it;
}

inline double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError(where, "number must be finite");
  return x;
}

inline int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where, "expected an integer");
  return v.get<int>();
}

inline Vector as_vector(const json& v, int d, const std::string& where) {
  if (!v.is_array() || static_cast<int>(v.size()) != d)
    throw ParseError(where, "expected an array of " + std::to_string(d) + " numbers");
  Vector out(d);
  for (int i = 0; i < d; ++i) out(i) = as_number(v[static_cast<std::size_t>(i)], where + "/" + std::to_string(i));
  return out;
}

inline int orbital_ref(const json& v, const std::vector<Orbital>& orbs, const std::string& where) {
  if (v.is_string()) {
    for (std::size_t i = 0; i < orbs.size(); ++i)
      if (orbs[i].label == v.get<std::string>()) return static_cast<int>(i);
    throw ParseError(where, "unknown orbital label '" + v.get<std::string>() + "'");
  }
  const int i = as_int(v, where);
  if (i < 0 || i >= static_cast<int>(orbs.size())) throw ParseError(where, "orbital index out of range");
  return i;
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace detail

/// Model file:
///   {"dim": d, "lattice_A": [[...], ...] (rows of A, columns are the
///    primitive vectors), "orbitals": [{"label", "tau"}],
///    "hoppings": [{"R", "from", "to", "value": [re, im]}], "constants": {...}}
inline LoadedModel parse_tight_binding(const std::string& text, const std::string& name = "model-file") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(detail::line_of(text, e.byte)), "invalid JSON");
  }
  if (!doc.is_object()) throw ParseError("", "model file must be a JSON object");
  const int d = detail::as_int(detail::require(doc, "dim", ""), "/dim");
  if (d < 1 || d > 3) throw ParseError("/dim", "dimension must be 1, 2 or 3");

  const json& jA = detail::require(doc, "lattice_A", "");
  RealMatrix A(d, d);
  if (jA.is_array() && static_cast<int>(jA.size()) == d * d && !jA[0].is_array()) {
    for (int i = 0; i < d * d; ++i)
      A(i / d, i % d) = detail::as_number(jA[static_cast<std::size_t>(i)], "/lattice_A/" + std::to_string(i));
  } else if (jA.is_array() && static_cast<int>(jA.size()) == d) {
    for (int i = 0; i < d; ++i)
      A.row(i) = detail::as_vector(jA[static_cast<std::size_t>(i)], d, "/lattice_A/" + std::to_string(i)).transpose();
  } else {
    throw ParseError("/lattice_A", "expected a d x d matrix");
  }
  Lattice lattice;
  try {
    lattice = reciprocal_of(A);
  } catch (const SingularLattice& e) {
    throw ParseError("/lattice_A", e.what());
  }

  const json& jo = detail::require(doc, "orbitals", "");
  if (!jo.is_array() || jo.empty()) throw ParseError("/orbitals", "expected a non-empty array");
  std::vector<Orbital> orbs;
  for (std::size_t i = 0; i < jo.size(); ++i) {
    const std::string where = "/orbitals/" + std::to_string(i);
    Orbital o;
    o.label = jo[i].contains("label") && jo[i]["label"].is_string() ? jo[i]["label"].get<std::string>()
                                                                     : "o" + std::to_string(i);
    o.tau = jo[i].contains("tau") ? detail::as_vector(jo[i]["tau"], d, where + "/tau") : Vector::Zero(d);
    orbs.push_back(o);
  }

  const json& jh = detail::require(doc, "hoppings", "");
  if (!jh.is_array()) throw ParseError("/hoppings", "expected an array");
  std::vector<Hopping> hops;
  for (std::size_t i = 0; i < jh.size(); ++i) {
    const std::string where = "/hoppings/" + std::to_string(i);
    const json& h = jh[i];
    const json& jR = detail::require(h, "R", where);
    if (!jR.is_array() || static_cast<int>(jR.size()) != d)
      throw ParseError(where + "/R", "expected " + std::to_string(d) + " integers");
    IndexVector R(d);
    for (int k = 0; k < d; ++k) R(k) = detail::as_int(jR[static_cast<std::size_t>(k)], where + "/R/" + std::to_string(k));
    const int from = detail::orbital_ref(detail::require(h, "from", where), orbs, where + "/from");
    const int to = detail::orbital_ref(detail::require(h, "to", where), orbs, where + "/to");
    const json& jv = detail::require(h, "value", where);
    cplx value;
    if (jv.is_number()) {
      value = detail::as_number(jv, where + "/value");
    } else if (jv.is_array() && jv.size() == 2) {
      value = cplx(detail::as_number(jv[0], where + "/value/0"), detail::as_number(jv[1], where + "/value/1"));
    } else {
      throw ParseError(where + "/value", "expected [re, im] or a number");
    }
    hops.push_back({R, from, to, value});
  }

  LoadedModel out;
  if (doc.contains("constants")) {
    const json& jc = doc["constants"];
    PhysicalConstants c;
    if (jc.contains("hbar")) c.hbar = detail::as_number(jc["hbar"], "/constants/hbar");
    if (jc.contains("e_charge")) c.e_charge = detail::as_number(jc["e_charge"], "/constants/e_charge");
    if (jc.contains("mass")) c.mass = detail::as_number(jc["mass"], "/constants/mass");
    try {
      c.validate();
    } catch (const ValidationError& e) {
      throw ParseError("/constants", e.what());
    }
    out.constants = c;
  }
  if (doc.contains("name") && doc["name"].is_string()) out.model = TightBindingModel(lattice, orbs, hops, doc["name"]);
  else out.model = TightBindingModel(lattice, orbs, hops, name);
  return out;
}

inline LoadedModel load_tight_binding(const std::string& path) { return parse_tight_binding(read_text(path), path); }

inline json model_to_json(const TightBindingModel& m) {
  const int d = m.dim();
  json A = json::array();
  for (int i = 0; i < d; ++i) {
    json row = json::array();
    for (int j = 0; j < d; ++j) row.push_back(m.lattice().direct()(i, j));
    A.push_back(row);
  }
  json orbs = json::array();
  for (const auto& o : m.orbitals()) {
    json tau = json::array();
    for (int i = 0; i < d; ++i) tau.push_back(o.tau(i));
    orbs.push_back(json{{"label", o.label}, {"tau", tau}});
  }
  json hops = json::array();
  for (const auto& h : m.hoppings()) {
    json R = json::array();
    for (int i = 0; i < d; ++i) R.push_back(h.R(i));
    hops.push_back(json{{"R", R}, {"from", h.from}, {"to", h.to}, {"value", json::array({h.value.real(), h.value.imag()})}});
  }
  return json{{"name", m.name()}, {"dim", d}, {"lattice_A", A}, {"orbitals", orbs}, {"hoppings", hops}};
}

}  // namespace kubo
