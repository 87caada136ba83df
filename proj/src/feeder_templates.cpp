#include "dsse/feeder.hpp"

namespace dsse {

namespace {

// Minimal single-phase feeder: one line of 0.01 + 0.01i pu (Z_base = 100 ohm).
const std::string kTwoBus = R"({
  "base_voltage_v": 1000.0,
  "base_power_va": 10000.0,
  "buses": [
    { "id": 0, "phases": "a", "slack": true },
    { "id": 1, "phases": "a" }
  ],
  "lines": [
    { "from": 0, "to": 1, "phases": "a", "r_ohm": [[1.0]], "x_ohm": [[1.0]] }
  ],
  "load_nodes": [ { "bus": 1, "phase": "a" } ]
})";

// Three-phase star with mutually coupled lines; bus 1 is an unloaded junction,
// so its phases are zero-injection nodes. Z_base = 10 ohm.
const std::string kFourBus = R"({
  "base_voltage_v": 2400.0,
  "base_power_va": 576000.0,
  "buses": [
    { "id": 0, "phases": "abc", "slack": true },
    { "id": 1, "phases": "abc" },
    { "id": 2, "phases": "abc" },
    { "id": 3, "phases": "abc" }
  ],
  "lines": [
    { "from": 0, "to": 1, "phases": "abc",
      "r_ohm": [[0.120, 0.040, 0.038], [0.040, 0.125, 0.035], [0.038, 0.035, 0.122]],
      "x_ohm": [[0.300, 0.120, 0.100], [0.120, 0.310, 0.095], [0.100, 0.095, 0.305]] },
    { "from": 1, "to": 2, "phases": "abc",
      "r_ohm": [[0.200, 0.060, 0.055], [0.060, 0.205, 0.052], [0.055, 0.052, 0.210]],
      "x_ohm": [[0.240, 0.080, 0.075], [0.080, 0.245, 0.070], [0.075, 0.070, 0.250]] },
    { "from": 1, "to": 3, "phases": "abc",
      "r_ohm": [[0.240, 0.072, 0.066], [0.072, 0.246, 0.0624], [0.066, 0.0624, 0.252]],
      "x_ohm": [[0.288, 0.096, 0.090], [0.096, 0.294, 0.084], [0.090, 0.084, 0.300]] }
  ],
  "load_nodes": [
    { "bus": 2, "phase": "a" }, { "bus": 2, "phase": "b" }, { "bus": 2, "phase": "c" },
    { "bus": 3, "phase": "a" }, { "bus": 3, "phase": "b" }, { "bus": 3, "phase": "c" }
  ]
})";

// 13-bus unbalanced multiphase feeder: mixed 3/2/1-phase laterals, two
// unloaded junction buses (3 and 10). 28 non-slack nodes, 22 load nodes.
// Z_base = 10 ohm.
const std::string kThirteenNode = R"({
  "base_voltage_v": 2400.0,
  "base_power_va": 576000.0,
  "buses": [
    { "id": 0,  "phases": "abc", "slack": true },
    { "id": 1,  "phases": "abc" },
    { "id": 2,  "phases": "abc" },
    { "id": 3,  "phases": "abc" },
    { "id": 4,  "phases": "abc" },
    { "id": 5,  "phases": "ab" },
    { "id": 6,  "phases": "a" },
    { "id": 7,  "phases": "abc" },
    { "id": 8,  "phases": "bc" },
    { "id": 9,  "phases": "c" },
    { "id": 10, "phases": "abc" },
    { "id": 11, "phases": "abc" },
    { "id": 12, "phases": "b" }
  ],
  "lines": [
    { "from": 0, "to": 1, "phases": "abc",
      "r_ohm": [[0.120, 0.040, 0.038], [0.040, 0.125, 0.035], [0.038, 0.035, 0.122]],
      "x_ohm": [[0.300, 0.120, 0.100], [0.120, 0.310, 0.095], [0.100, 0.095, 0.305]] },
    { "from": 1, "to": 2, "phases": "abc",
      "r_ohm": [[0.160, 0.048, 0.044], [0.048, 0.164, 0.0416], [0.044, 0.0416, 0.168]],
      "x_ohm": [[0.192, 0.064, 0.060], [0.064, 0.196, 0.056], [0.060, 0.056, 0.200]] },
    { "from": 1, "to": 3, "phases": "abc",
      "r_ohm": [[0.144, 0.048, 0.0456], [0.048, 0.150, 0.042], [0.0456, 0.042, 0.1464]],
      "x_ohm": [[0.360, 0.144, 0.120], [0.144, 0.372, 0.114], [0.120, 0.114, 0.366]] },
    { "from": 3, "to": 4, "phases": "abc",
      "r_ohm": [[0.200, 0.060, 0.055], [0.060, 0.205, 0.052], [0.055, 0.052, 0.210]],
      "x_ohm": [[0.240, 0.080, 0.075], [0.080, 0.245, 0.070], [0.075, 0.070, 0.250]] },
    { "from": 4, "to": 5, "phases": "ab",
      "r_ohm": [[0.250, 0.070], [0.070, 0.260]],
      "x_ohm": [[0.280, 0.090], [0.090, 0.290]] },
    { "from": 5, "to": 6, "phases": "a",
      "r_ohm": [[0.270]], "x_ohm": [[0.288]] },
    { "from": 3, "to": 7, "phases": "abc",
      "r_ohm": [[0.120, 0.040, 0.038], [0.040, 0.125, 0.035], [0.038, 0.035, 0.122]],
      "x_ohm": [[0.300, 0.120, 0.100], [0.120, 0.310, 0.095], [0.100, 0.095, 0.305]] },
    { "from": 7, "to": 8, "phases": "bc",
      "r_ohm": [[0.240, 0.065], [0.065, 0.255]],
      "x_ohm": [[0.270, 0.085], [0.085, 0.285]] },
    { "from": 8, "to": 9, "phases": "c",
      "r_ohm": [[0.330]], "x_ohm": [[0.352]] },
    { "from": 7, "to": 10, "phases": "abc",
      "r_ohm": [[0.108, 0.036, 0.0342], [0.036, 0.1125, 0.0315], [0.0342, 0.0315, 0.1098]],
      "x_ohm": [[0.270, 0.108, 0.090], [0.108, 0.279, 0.0855], [0.090, 0.0855, 0.2745]] },
    { "from": 10, "to": 11, "phases": "abc",
      "r_ohm": [[0.220, 0.066, 0.0605], [0.066, 0.2255, 0.0572], [0.0605, 0.0572, 0.231]],
      "x_ohm": [[0.264, 0.088, 0.0825], [0.088, 0.2695, 0.077], [0.0825, 0.077, 0.275]] },
    { "from": 10, "to": 12, "phases": "b",
      "r_ohm": [[0.300]], "x_ohm": [[0.320]] }
  ],
  "load_nodes": [
    { "bus": 1, "phase": "a" }, { "bus": 1, "phase": "b" }, { "bus": 1, "phase": "c" },
    { "bus": 2, "phase": "a" }, { "bus": 2, "phase": "b" }, { "bus": 2, "phase": "c" },
    { "bus": 4, "phase": "a" }, { "bus": 4, "phase": "b" }, { "bus": 4, "phase": "c" },
    { "bus": 5, "phase": "a" }, { "bus": 5, "phase": "b" },
    { "bus": 6, "phase": "a" },
    { "bus": 7, "phase": "a" }, { "bus": 7, "phase": "b" }, { "bus": 7, "phase": "c" },
    { "bus": 8, "phase": "b" }, { "bus": 8, "phase": "c" },
    { "bus": 9, "phase": "c" },
    { "bus": 11, "phase": "a" }, { "bus": 11, "phase": "b" }, { "bus": 11, "phase": "c" },
    { "bus": 12, "phase": "b" }
  ]
})";

}  // namespace

const std::string& feeder_template_json(const std::string& name) {
  if (name == "2bus") return kTwoBus;
  if (name == "4bus") return kFourBus;
  if (name == "13node") return kThirteenNode;
  throw FeederError("unknown feeder template '" + name + "' (expected 2bus, 4bus or 13node)");
}

FeederModel load_feeder_template(const std::string& name) {
  return load_feeder(feeder_template_json(name));
}

}  // namespace dsse
