#include "dsse/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dsse {

using nlohmann::json;

char phase_letter(Phase p) { return "abc"[static_cast<int>(p)]; }

Phase phase_from_letter(char c) {
  switch (c) {
    case 'a': return Phase::a;
    case 'b': return Phase::b;
    case 'c': return Phase::c;
    default: throw FeederError(std::string("invalid phase letter '") + c + "'");
  }
}

std::vector<Phase> parse_phases(const std::string& s) {
  std::vector<Phase> out;
  for (char c : s) out.push_back(phase_from_letter(c));
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
    throw FeederError("duplicate phase in '" + s + "'");
  if (out.empty()) throw FeederError("empty phase set");
  return out;
}

namespace {

std::string phases_str(const std::vector<Phase>& ps) {
  std::string s;
  for (Phase p : ps) s += phase_letter(p);
  return s;
}

bool has_phase(const Bus& bus, Phase p) {
  return std::find(bus.phases.begin(), bus.phases.end(), p) != bus.phases.end();
}

Complex default_slack_voltage(Phase p) {
  switch (p) {
    case Phase::a: return Complex(1.0, 0.0);
    case Phase::b: return std::polar(1.0, -2.0 * M_PI / 3.0);
    default: return std::polar(1.0, 2.0 * M_PI / 3.0);
  }
}

struct NodeOrdering {
  std::vector<NodeRef> nodes;        // non-slack
  std::vector<NodeRef> slack_nodes;
  std::map<std::pair<int, int>, int> index;  // (bus, phase) -> combined index
};

// Ascending bus id, then phase a,b,c; slack phases appended after non-slack.
NodeOrdering order_nodes(const std::vector<Bus>& buses) {
  NodeOrdering ord;
  std::vector<const Bus*> sorted;
  for (const Bus& b : buses) sorted.push_back(&b);
  std::sort(sorted.begin(), sorted.end(),
            [](const Bus* a, const Bus* b) { return a->id < b->id; });
  for (const Bus* b : sorted)
    for (Phase p : b->phases)
      if (!b->is_slack) ord.nodes.push_back({b->id, p});
  for (const Bus* b : sorted)
    for (Phase p : b->phases)
      if (b->is_slack) ord.slack_nodes.push_back({b->id, p});
  int k = 0;
  for (const NodeRef& nr : ord.nodes)
    ord.index[{nr.bus_id, static_cast<int>(nr.phase)}] = k++;
  for (const NodeRef& nr : ord.slack_nodes)
    ord.index[{nr.bus_id, static_cast<int>(nr.phase)}] = k++;
  return ord;
}

void validate_topology(const std::vector<Bus>& buses, const std::vector<Line>& lines) {
  std::map<int, const Bus*> by_id;
  int slack_count = 0;
  for (const Bus& b : buses) {
    if (by_id.count(b.id)) throw FeederError("duplicate bus id " + std::to_string(b.id));
    by_id[b.id] = &b;
    if (b.phases.empty() || b.phases.size() > 3)
      throw FeederError("bus " + std::to_string(b.id) + ": phase set must have 1..3 phases");
    if (b.is_slack) ++slack_count;
  }
  if (slack_count == 0) throw FeederError("missing slack bus");
  if (slack_count > 1) throw FeederError("more than one slack bus");
  for (const Bus& b : buses)
    if (b.is_slack && b.id != 0)
      throw FeederError("slack must be bus 0, got bus " + std::to_string(b.id));
  if (!by_id.count(0)) throw FeederError("missing slack bus 0");

  std::set<std::pair<int, int>> seen;
  for (const Line& l : lines) {
    std::string loc = "line " + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus);
    if (!by_id.count(l.from_bus) || !by_id.count(l.to_bus))
      throw FeederError(loc + ": unknown endpoint bus");
    if (l.from_bus == l.to_bus) throw FeederError(loc + ": self loop");
    auto key = std::minmax(l.from_bus, l.to_bus);
    if (!seen.insert({key.first, key.second}).second)
      throw FeederError(loc + ": duplicate line");
    if (l.phases.empty()) throw FeederError(loc + ": empty phase set");
    for (Phase p : l.phases) {
      if (!has_phase(*by_id[l.from_bus], p) || !has_phase(*by_id[l.to_bus], p))
        throw FeederError(loc + ": phase " + std::string(1, phase_letter(p)) +
                          " not present on both endpoint buses");
    }
    const int lsz = static_cast<int>(l.phases.size());
    if (l.z.rows() != lsz || l.z.cols() != lsz)
      throw FeederError(loc + ": impedance matrix must be " + std::to_string(lsz) + "x" +
                        std::to_string(lsz));
    double zmax = l.z.cwiseAbs().maxCoeff();
    if (!(zmax > 0)) throw FeederError(loc + ": zero impedance matrix");
    if ((l.z - l.z.transpose()).cwiseAbs().maxCoeff() > 1e-9 * zmax)
      throw FeederError(loc + ": impedance matrix not symmetric");
    Eigen::FullPivLU<CMat> lu(l.z);
    if (!lu.isInvertible()) throw FeederError(loc + ": singular impedance matrix");
  }

  // connectivity over buses
  std::map<int, std::vector<int>> adj;
  for (const Line& l : lines) {
    adj[l.from_bus].push_back(l.to_bus);
    adj[l.to_bus].push_back(l.from_bus);
  }
  std::set<int> visited;
  std::queue<int> frontier;
  frontier.push(0);
  visited.insert(0);
  while (!frontier.empty()) {
    int b = frontier.front();
    frontier.pop();
    for (int nb : adj[b])
      if (visited.insert(nb).second) frontier.push(nb);
  }
  for (const Bus& b : buses)
    if (!visited.count(b.id))
      throw FeederError("disconnected graph: bus " + std::to_string(b.id) +
                        " unreachable from the slack");
}

}  // namespace

CMat assemble_ybus(const std::vector<Bus>& buses, const std::vector<Line>& lines) {
  NodeOrdering ord = order_nodes(buses);
  const int total = static_cast<int>(ord.nodes.size() + ord.slack_nodes.size());
  CMat y = CMat::Zero(total, total);
  for (const Line& l : lines) {
    const int lsz = static_cast<int>(l.phases.size());
    Eigen::FullPivLU<CMat> lu(l.z);
    if (!lu.isInvertible())
      throw FeederError("line " + std::to_string(l.from_bus) + "-" +
                        std::to_string(l.to_bus) + ": singular impedance matrix");
    CMat yl = lu.inverse();
    yl = ((yl + yl.transpose()) / 2.0).eval();  // keep assembly exactly symmetric
    std::vector<int> fi(lsz), ti(lsz);
    for (int k = 0; k < lsz; ++k) {
      fi[k] = ord.index.at({l.from_bus, static_cast<int>(l.phases[k])});
      ti[k] = ord.index.at({l.to_bus, static_cast<int>(l.phases[k])});
    }
    for (int r = 0; r < lsz; ++r) {
      for (int c = 0; c < lsz; ++c) {
        y(fi[r], fi[c]) += yl(r, c);
        y(ti[r], ti[c]) += yl(r, c);
        y(fi[r], ti[c]) -= yl(r, c);
        y(ti[r], fi[c]) -= yl(r, c);
      }
    }
  }
  return y;
}

FeederModel::FeederModel(std::vector<Bus> buses, std::vector<Line> lines_pu,
                         double base_voltage_v, double base_power_va,
                         std::vector<NodeRef> load_nodes)
    : buses_(std::move(buses)),
      lines_(std::move(lines_pu)),
      base_voltage_(base_voltage_v),
      base_power_(base_power_va) {
  if (!(base_voltage_ > 0) || !(base_power_ > 0))
    throw FeederError("base voltage and base power must be positive");
  validate_topology(buses_, lines_);

  NodeOrdering ord = order_nodes(buses_);
  nodes_ = std::move(ord.nodes);
  slack_nodes_ = std::move(ord.slack_nodes);
  index_ = std::move(ord.index);
  n_ = static_cast<int>(nodes_.size());
  s_ = static_cast<int>(slack_nodes_.size());
  if (n_ == 0) throw FeederError("feeder has no non-slack nodes");

  v_slack_ = CVec(s_);
  for (int k = 0; k < s_; ++k) {
    const NodeRef& nr = slack_nodes_[k];
    const Bus* bus = nullptr;
    for (const Bus& b : buses_)
      if (b.id == nr.bus_id) bus = &b;
    if (!bus->slack_voltage.empty()) {
      auto it = std::find(bus->phases.begin(), bus->phases.end(), nr.phase);
      v_slack_(k) = bus->slack_voltage.at(it - bus->phases.begin());
    } else {
      v_slack_(k) = default_slack_voltage(nr.phase);
    }
  }

  is_load_.assign(n_, false);
  for (const NodeRef& nr : load_nodes) {
    auto it = index_.find({nr.bus_id, static_cast<int>(nr.phase)});
    if (it == index_.end())
      throw FeederError("load node bus " + std::to_string(nr.bus_id) + " phase " +
                        std::string(1, phase_letter(nr.phase)) + " does not exist");
    if (it->second >= n_)
      throw FeederError("load node on slack bus " + std::to_string(nr.bus_id));
    is_load_[it->second] = true;
  }
  for (int i = 0; i < n_; ++i)
    if (is_load_[i]) load_nodes_.push_back(i);

  ybus_ = assemble_ybus(buses_, lines_);

  Eigen::FullPivLU<CMat> lu(ybus_.topLeftCorner(n_, n_));
  if (!lu.isInvertible()) throw FeederError("Y_LL block is singular");

  lu_yll_ = Eigen::PartialPivLU<CMat>(ybus_.topLeftCorner(n_, n_));
  v_noload_ = lu_yll_.solve((-ybus_.block(0, n_, n_, s_) * v_slack_).eval());
}

int FeederModel::node_index(int bus_id, Phase phase) const {
  auto it = index_.find({bus_id, static_cast<int>(phase)});
  if (it == index_.end())
    throw FeederError("unknown node: bus " + std::to_string(bus_id) + " phase " +
                      std::string(1, phase_letter(phase)));
  if (it->second >= n_)
    throw FeederError("bus " + std::to_string(bus_id) + " phase " +
                      std::string(1, phase_letter(phase)) + " is a slack phase");
  return it->second;
}

namespace {

CMat parse_complex_matrix(const json& jr, const json& jx, int lsz, const std::string& loc) {
  if (!jr.is_array() || !jx.is_array() || static_cast<int>(jr.size()) != lsz ||
      static_cast<int>(jx.size()) != lsz)
    throw FeederError(loc + ": r_ohm/x_ohm must be " + std::to_string(lsz) + "x" +
                      std::to_string(lsz) + " arrays");
  CMat z(lsz, lsz);
  for (int r = 0; r < lsz; ++r) {
    const json& rr = jr.at(r);
    const json& rx = jx.at(r);
    if (static_cast<int>(rr.size()) != lsz || static_cast<int>(rx.size()) != lsz)
      throw FeederError(loc + ": matrix row " + std::to_string(r) + " has wrong length");
    for (int c = 0; c < lsz; ++c)
      z(r, c) = Complex(rr.at(c).get<double>(), rx.at(c).get<double>());
  }
  return z;
}

}  // namespace

FeederModel load_feeder(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FeederError(std::string("feeder parse failure: ") + e.what());
  }
  try {
    const double base_v = doc.at("base_voltage_v").get<double>();
    const double base_va = doc.at("base_power_va").get<double>();
    if (!(base_v > 0) || !(base_va > 0))
      throw FeederError("base_voltage_v and base_power_va must be positive");
    const double z_base = base_v * base_v / base_va;

    std::vector<Bus> buses;
    for (const json& jb : doc.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      b.phases = parse_phases(jb.at("phases").get<std::string>());
      b.is_slack = jb.value("slack", false);
      if (jb.contains("slack_voltage")) {
        for (const json& jv : jb.at("slack_voltage")) {
          double mag = jv.at(0).get<double>();
          double ang = jv.at(1).get<double>() * M_PI / 180.0;
          b.slack_voltage.push_back(std::polar(mag, ang));
        }
        if (b.slack_voltage.size() != b.phases.size())
          throw FeederError("bus " + std::to_string(b.id) +
                            ": slack_voltage length must match phase count");
      }
      buses.push_back(std::move(b));
    }

    std::vector<Line> lines;
    for (const json& jl : doc.at("lines")) {
      Line l;
      l.from_bus = jl.at("from").get<int>();
      l.to_bus = jl.at("to").get<int>();
      l.phases = parse_phases(jl.at("phases").get<std::string>());
      std::string loc = "line " + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus);
      const int lsz = static_cast<int>(l.phases.size());
      l.z = parse_complex_matrix(jl.at("r_ohm"), jl.at("x_ohm"), lsz, loc) / z_base;
      lines.push_back(std::move(l));
    }

    std::vector<NodeRef> load_nodes;
    for (const json& jn : doc.value("load_nodes", json::array())) {
      std::string ph = jn.at("phase").get<std::string>();
      if (ph.size() != 1) throw FeederError("load node phase must be a single letter");
      load_nodes.push_back({jn.at("bus").get<int>(), phase_from_letter(ph[0])});
    }

    return FeederModel(std::move(buses), std::move(lines), base_v, base_va,
                       std::move(load_nodes));
  } catch (const json::exception& e) {
    throw FeederError(std::string("feeder document invalid: ") + e.what());
  }
}

FeederModel load_feeder_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FeederError("cannot open feeder file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_feeder(ss.str());
}

}  // namespace dsse
