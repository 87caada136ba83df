#include <doctest.h>

#include "dsse/feeder.hpp"

using namespace dsse;

namespace {

std::string two_bus_text() { return feeder_template_json("2bus"); }

}  // namespace

TEST_CASE("two-bus feeder loads and has the expected shape") {
  FeederModel model = load_feeder(two_bus_text());
  CHECK(model.n() == 1);
  CHECK(model.slack_count() == 1);
  CHECK(model.ybus().rows() == 2);
  CHECK(model.load_nodes().size() == 1);
  CHECK(model.node_index(1, Phase::a) == 0);
}

TEST_CASE("single line 0.01+0.01i pu gives the known 2x2 admittance") {
  FeederModel model = load_feeder(two_bus_text());
  // 1/(0.01+0.01i) = 50-50i
  const Complex y_expect(50.0, -50.0);
  CHECK(std::abs(model.ybus()(0, 0) - y_expect) < 1e-10);
  CHECK(std::abs(model.ybus()(1, 1) - y_expect) < 1e-10);
  CHECK(std::abs(model.ybus()(0, 1) + y_expect) < 1e-10);
  CHECK(std::abs(model.ybus()(1, 0) + y_expect) < 1e-10);
}

TEST_CASE("diagonal block of a degree-2 bus is the sum of incident admittances") {
  // 0 -- 1 -- 2 chain, single phase, distinct impedances
  std::string text = R"({
    "base_voltage_v": 1000.0, "base_power_va": 10000.0,
    "buses": [
      { "id": 0, "phases": "a", "slack": true },
      { "id": 1, "phases": "a" },
      { "id": 2, "phases": "a" }
    ],
    "lines": [
      { "from": 0, "to": 1, "phases": "a", "r_ohm": [[1.0]], "x_ohm": [[1.0]] },
      { "from": 1, "to": 2, "phases": "a", "r_ohm": [[2.0]], "x_ohm": [[1.0]] }
    ],
    "load_nodes": [ { "bus": 2, "phase": "a" } ]
  })";
  FeederModel model = load_feeder(text);
  int i1 = model.node_index(1, Phase::a);
  Complex y01 = 1.0 / Complex(0.01, 0.01);
  Complex y12 = 1.0 / Complex(0.02, 0.01);
  CHECK(std::abs(model.ybus()(i1, i1) - (y01 + y12)) < 1e-9);
}

TEST_CASE("three-phase line with diagonal impedance gives diagonal blocks") {
  std::string text = R"({
    "base_voltage_v": 1000.0, "base_power_va": 10000.0,
    "buses": [
      { "id": 0, "phases": "abc", "slack": true },
      { "id": 1, "phases": "abc" }
    ],
    "lines": [
      { "from": 0, "to": 1, "phases": "abc",
        "r_ohm": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "x_ohm": [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]] }
    ],
    "load_nodes": [ { "bus": 1, "phase": "a" } ]
  })";
  FeederModel model = load_feeder(text);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (r != c) CHECK(std::abs(model.ybus()(r, c)) == 0.0);
}

TEST_CASE("phase mismatch between line and endpoint bus is rejected") {
  std::string text = R"({
    "base_voltage_v": 1000.0, "base_power_va": 10000.0,
    "buses": [
      { "id": 0, "phases": "abc", "slack": true },
      { "id": 1, "phases": "ab" }
    ],
    "lines": [
      { "from": 0, "to": 1, "phases": "c", "r_ohm": [[1.0]], "x_ohm": [[1.0]] }
    ],
    "load_nodes": []
  })";
  CHECK_THROWS_WITH_AS(load_feeder(text),
                       doctest::Contains("phase c not present"), FeederError);
}

TEST_CASE("missing slack and disconnected graphs are rejected") {
  std::string no_slack = R"({
    "base_voltage_v": 1000.0, "base_power_va": 10000.0,
    "buses": [ { "id": 0, "phases": "a" }, { "id": 1, "phases": "a" } ],
    "lines": [ { "from": 0, "to": 1, "phases": "a", "r_ohm": [[1.0]], "x_ohm": [[1.0]] } ],
    "load_nodes": []
  })";
  CHECK_THROWS_WITH_AS(load_feeder(no_slack), doctest::Contains("missing slack"),
                       FeederError);

  std::string disconnected = R"({
    "base_voltage_v": 1000.0, "base_power_va": 10000.0,
    "buses": [
      { "id": 0, "phases": "a", "slack": true },
      { "id": 1, "phases": "a" },
      { "id": 2, "phases": "a" }
    ],
    "lines": [ { "from": 0, "to": 1, "phases": "a", "r_ohm": [[1.0]], "x_ohm": [[1.0]] } ],
    "load_nodes": []
  })";
  CHECK_THROWS_WITH_AS(load_feeder(disconnected), doctest::Contains("disconnected"),
                       FeederError);
}

TEST_CASE("singular line impedance is rejected") {
  std::string text = R"({
    "base_voltage_v": 1000.0, "base_power_va": 10000.0,
    "buses": [
      { "id": 0, "phases": "ab", "slack": true },
      { "id": 1, "phases": "ab" }
    ],
    "lines": [
      { "from": 0, "to": 1, "phases": "ab",
        "r_ohm": [[1.0, 1.0], [1.0, 1.0]],
        "x_ohm": [[1.0, 1.0], [1.0, 1.0]] }
    ],
    "load_nodes": []
  })";
  CHECK_THROWS_WITH_AS(load_feeder(text), doctest::Contains("singular"), FeederError);
}

TEST_CASE("parse failures carry context") {
  CHECK_THROWS_AS(load_feeder("{ not json"), FeederError);
  CHECK_THROWS_AS(load_feeder(R"({"base_voltage_v": 1.0})"), FeederError);
}

TEST_CASE("13-node template: node count is the per-bus phase total minus slack") {
  FeederModel model = load_feeder_template("13node");
  // per-bus phases: 3+3+3+3+2+1+3+2+1+3+3+1 = 28 non-slack
  CHECK(model.n() == 28);
  CHECK(model.slack_count() == 3);
  CHECK(model.load_nodes().size() == 22);
}

TEST_CASE("node index ordering is ascending bus id then phase") {
  FeederModel model = load_feeder_template("13node");
  CHECK(model.node_index(1, Phase::a) == 0);
  CHECK(model.node_index(1, Phase::b) == 1);
  CHECK(model.node_index(1, Phase::c) == 2);
  CHECK(model.node_index(2, Phase::a) == 3);
  CHECK(model.node_index(12, Phase::b) == model.n() - 1);
  NodeRef last = model.node_at(model.n() - 1);
  CHECK(last.bus_id == 12);
  CHECK(last.phase == Phase::b);

  CHECK_THROWS_AS(model.node_index(99, Phase::a), FeederError);  // unknown bus
  CHECK_THROWS_AS(model.node_index(6, Phase::c), FeederError);   // phase absent
  CHECK_THROWS_AS(model.node_index(0, Phase::a), FeederError);   // slack query
}

TEST_CASE("ybus is exactly symmetric with zero row sums") {
  for (const char* name : {"2bus", "4bus", "13node"}) {
    FeederModel model = load_feeder_template(name);
    const CMat& y = model.ybus();
    CHECK((y - y.transpose()).cwiseAbs().maxCoeff() == 0.0);
    double scale = y.cwiseAbs().maxCoeff();
    for (int r = 0; r < y.rows(); ++r)
      CHECK(std::abs(y.row(r).sum()) <= 1e-12 * scale);
  }
}

TEST_CASE("assembly is idempotent and invariant to bus declaration order") {
  FeederModel a = load_feeder_template("13node");
  CMat y1 = assemble_ybus(a.buses(), a.lines());
  CMat y2 = assemble_ybus(a.buses(), a.lines());
  CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);

  // permute the declared bus order; indexing sorts by id, so the matrix of the
  // permuted document equals the original exactly
  std::vector<Bus> shuffled = a.buses();
  std::rotate(shuffled.begin(), shuffled.begin() + 5, shuffled.end());
  CMat y3 = assemble_ybus(shuffled, a.lines());
  CHECK((y1 - y3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplicate lines are rejected") {
  std::string text = R"({
    "base_voltage_v": 1000.0, "base_power_va": 10000.0,
    "buses": [
      { "id": 0, "phases": "a", "slack": true },
      { "id": 1, "phases": "a" }
    ],
    "lines": [
      { "from": 0, "to": 1, "phases": "a", "r_ohm": [[1.0]], "x_ohm": [[1.0]] },
      { "from": 1, "to": 0, "phases": "a", "r_ohm": [[1.0]], "x_ohm": [[1.0]] }
    ],
    "load_nodes": []
  })";
  CHECK_THROWS_WITH_AS(load_feeder(text), doctest::Contains("duplicate line"), FeederError);
}

TEST_CASE("per-unit conversion uses Z_base = V^2 / S") {
  // 4bus template: Z_base = 2400^2 / 576000 = 10 ohm; r_ohm 0.120 -> 0.012 pu
  FeederModel model = load_feeder_template("4bus");
  const Line& trunk = model.lines().front();
  CHECK(trunk.z(0, 0).real() == doctest::Approx(0.012).epsilon(1e-12));
  CHECK(trunk.z(0, 0).imag() == doctest::Approx(0.030).epsilon(1e-12));
}
