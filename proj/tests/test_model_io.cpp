#include <random>

#include <gtest/gtest.h>

#include "kubo/graphene.hpp"
#include "kubo/kubo_trace.hpp"
#include "kubo/model_io.hpp"

using namespace kubo;

namespace {

const char* graphene_text = R"({
  "dim": 2,
  "lattice_A": [[0.5, -0.5], [0.8660254037844386, 0.8660254037844386]],
  "orbitals": [{"label": "A", "tau": [0, 0]}, {"label": "B", "tau": [0, 0.5773502691896258]}],
  "hoppings": [
    {"R": [0, 0], "from": "A", "to": "B", "value": [-1, 0]},
    {"R": [0, 0], "from": "B", "to": "A", "value": [-1, 0]},
    {"R": [-1, 0], "from": 0, "to": 1, "value": [-1, 0]},
    {"R": [1, 0], "from": 1, "to": 0, "value": [-1, 0]},
    {"R": [0, -1], "from": 0, "to": 1, "value": -1},
    {"R": [0, 1], "from": 1, "to": 0, "value": -1}
  ]
})";

}  // namespace

TEST(ModelFile, GrapheneMatchesBuiltin) {
  const auto loaded = parse_tight_binding(graphene_text);
  const auto a = loaded.model.bloch();
  const auto b = graphene_bloch();
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int s = 0; s < 5; ++s) {
    Vector k(2);
    k << u(gen), u(gen);
    EXPECT_LT(max_abs(a.h_of_k(k) - b.h_of_k(k)), 1e-12);
    for (int l = 0; l < 2; ++l) EXPECT_LT(max_abs(a.dh_dk(k, l) - b.dh_dk(k, l)), 1e-12);
  }
  EXPECT_FALSE(loaded.constants.has_value());
}

TEST(ModelFile, RoundTripThroughJson) {
  const auto m = graphene_tight_binding();
  const auto again = parse_tight_binding(model_to_json(m).dump()).model;
  EXPECT_EQ(again.name(), "graphene");
  Vector k(2);
  k << 0.3, -1.2;
  EXPECT_LT(max_abs(again.h_of_k(k) - m.h_of_k(k)), 1e-15);
}

TEST(ModelFile, FlatLatticeAndConstants) {
  const auto m = parse_tight_binding(R"({"dim": 2, "lattice_A": [2, 0, 0, 3], "orbitals": [{}],
    "hoppings": [], "constants": {"hbar": 0.5}})");
  EXPECT_NEAR(m.model.lattice().cell_volume(), 6.0, 1e-15);
  ASSERT_TRUE(m.constants.has_value());
  EXPECT_EQ(m.constants->hbar, 0.5);
}

TEST(ModelFile, EmptyHoppingsGiveZeroConductivity) {
  const auto m = parse_tight_binding(R"({"dim": 1, "lattice_A": [[1]], "orbitals": [{"label": "s"}], "hoppings": []})");
  EXPECT_EQ(max_abs(m.model.h_of_k(Vector::Constant(1, 0.4))), 0.0);
  const auto r = conductivity_trace(m.model.torus(6), OccupationSpec::at_mu(1.0, 0.0), {0.5}, FrequencyGrid({0.0, 1.0}));
  for (const auto& s : r.sigma) EXPECT_EQ(max_abs(s), 0.0);
}

TEST(ModelFile, MissingConjugatePartner) {
  EXPECT_THROW(parse_tight_binding(R"({"dim": 1, "lattice_A": [[1]], "orbitals": [{}],
    "hoppings": [{"R": [1], "from": 0, "to": 0, "value": [1, 0]}]})"),
               NonHermitianInput);
}

TEST(ModelFile, ParseErrorsCarryLocation) {
  auto where = [](const std::string& text) {
    try {
      parse_tight_binding(text);
    } catch (const ParseError& e) {
      return e.where();
    }
    return std::string("no error");
  };
  EXPECT_EQ(where("{\"dim\": 1,\n \"lattice_A\": [[1]],\n oops}"), "line 3");
  EXPECT_EQ(where(R"({"lattice_A": [[1]]})"), "/dim");
  EXPECT_EQ(where(R"({"dim": 1, "lattice_A": [[0]], "orbitals": [{}], "hoppings": []})"), "/lattice_A");
  EXPECT_EQ(where(R"({"dim": 1, "lattice_A": [[1]], "orbitals": [{}], "hoppings": [{"R": [0], "from": 3, "to": 0, "value": 1}]})"),
            "/hoppings/0/from");
  EXPECT_EQ(where(R"({"dim": 1, "lattice_A": [[1]], "orbitals": [{}], "hoppings": [{"R": [0.5], "from": 0, "to": 0, "value": 1}]})"),
            "/hoppings/0/R/0");
  EXPECT_EQ(where(R"({"dim": 1, "lattice_A": [[1]], "orbitals": [{}], "hoppings": [{"R": [0], "from": 0, "to": 0}]})"),
            "/hoppings/0/value");
  EXPECT_EQ(where(R"({"dim": 1, "lattice_A": [[1]], "orbitals": [{"tau": [1, 2]}], "hoppings": []})"), "/orbitals/0/tau");
}

TEST(ModelFile, MissingFile) { EXPECT_THROW(load_tight_binding("/nonexistent/model.json"), IoError); }
