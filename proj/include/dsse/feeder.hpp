#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsse/common.hpp"

namespace dsse {

enum class Phase : int { a = 0, b = 1, c = 2 };

char phase_letter(Phase p);
Phase phase_from_letter(char c);

/// Parses an "abc"-subset string ("a", "bc", "abc", ...) into sorted phases.
std::vector<Phase> parse_phases(const std::string& s);

struct Bus {
  int id = 0;
  std::vector<Phase> phases;  // sorted, nonempty, unique
  bool is_slack = false;
  // Per-phase slack voltage, aligned with `phases`. Empty means the default
  // 1 pu at 0 / -120 / +120 degrees for phases a / b / c.
  std::vector<Complex> slack_voltage;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  std::vector<Phase> phases;  // sorted subset of both endpoint buses
  CMat z;                     // series impedance, per-unit, |phases| x |phases|
};

struct NodeRef {
  int bus_id;
  Phase phase;
};

/// Immutable multiphase network: buses, lines (per-unit series impedance),
/// node indexing and the assembled bus admittance matrix.
///
/// Node order: non-slack bus phases first, ascending bus id then phase a,b,c,
/// indices 0..n-1; slack phases follow at n..n+s-1.
class FeederModel {
 public:
  FeederModel(std::vector<Bus> buses, std::vector<Line> lines_pu,
              double base_voltage_v, double base_power_va,
              std::vector<NodeRef> load_nodes);

  int n() const { return n_; }
  int slack_count() const { return s_; }
  double base_voltage() const { return base_voltage_; }
  double base_power() const { return base_power_; }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }

  const CMat& ybus() const { return ybus_; }
  /// Non-slack block of ybus (n x n).
  Eigen::Block<const CMat> y_ll() const { return ybus_.topLeftCorner(n_, n_); }
  /// Coupling of non-slack nodes to slack phases (n x s).
  Eigen::Block<const CMat> y_l0() const { return ybus_.block(0, n_, n_, s_); }
  /// Fixed slack phase voltages (length s), per-unit.
  const CVec& slack_voltage() const { return v_slack_; }
  /// Factorization of Y_LL, shared by power-flow solves.
  const Eigen::PartialPivLU<CMat>& y_ll_factor() const { return lu_yll_; }
  /// Slack voltage propagated through the dead network: -Y_LL^-1 Y_L0 V_0.
  const CVec& no_load_voltage() const { return v_noload_; }

  /// Contiguous index of a non-slack (bus, phase); throws on slack or unknown.
  int node_index(int bus_id, Phase phase) const;
  /// Inverse lookup for indices in 0..n-1.
  NodeRef node_at(int index) const { return nodes_.at(index); }

  const std::vector<int>& load_nodes() const { return load_nodes_; }
  bool is_load(int node) const { return is_load_.at(node); }

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  double base_voltage_;
  double base_power_;
  int n_ = 0;
  int s_ = 0;
  std::vector<NodeRef> nodes_;        // 0..n-1
  std::vector<NodeRef> slack_nodes_;  // n..n+s-1
  std::map<std::pair<int, int>, int> index_;  // (bus, phase) -> 0..n+s-1
  std::vector<int> load_nodes_;
  std::vector<bool> is_load_;
  CVec v_slack_;
  CMat ybus_;
  Eigen::PartialPivLU<CMat> lu_yll_;
  CVec v_noload_;
};

/// Assembles the bus admittance matrix for validated buses/lines (per-unit).
/// Node order matches FeederModel. Throws FeederError on singular impedance.
CMat assemble_ybus(const std::vector<Bus>& buses, const std::vector<Line>& lines);

/// Parses and validates a feeder description document (JSON text).
/// Line impedances are given in ohms and converted to per-unit with
/// Z_base = base_voltage^2 / base_power.
FeederModel load_feeder(const std::string& text);

FeederModel load_feeder_file(const std::string& path);

/// Embedded feeder documents: "2bus", "4bus", "13node".
const std::string& feeder_template_json(const std::string& name);
FeederModel load_feeder_template(const std::string& name);

}  // namespace dsse
