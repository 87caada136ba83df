#include "dsse/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dsse {

const char* meter_kind_name(MeterKind k) {
  switch (k) {
    case MeterKind::voltage_mag: return "voltage_mag";
    case MeterKind::pseudo_p: return "pseudo_p";
    case MeterKind::pseudo_q: return "pseudo_q";
    case MeterKind::virtual_p: return "virtual_p";
    case MeterKind::virtual_q: return "virtual_q";
  }
  return "?";
}

MeterKind meter_kind_from_name(const std::string& s) {
  if (s == "voltage_mag") return MeterKind::voltage_mag;
  if (s == "pseudo_p") return MeterKind::pseudo_p;
  if (s == "pseudo_q") return MeterKind::pseudo_q;
  if (s == "virtual_p") return MeterKind::virtual_p;
  if (s == "virtual_q") return MeterKind::virtual_q;
  throw std::invalid_argument("unknown meter kind '" + s + "'");
}

bool is_virtual(MeterKind k) {
  return k == MeterKind::virtual_p || k == MeterKind::virtual_q;
}

bool is_pseudo(MeterKind k) {
  return k == MeterKind::pseudo_p || k == MeterKind::pseudo_q;
}

Vec MeterSet::weights() const {
  Vec w(m());
  for (int i = 0; i < m(); ++i) w(i) = 1.0 / (meters[i].sigma * meters[i].sigma);
  return w;
}

std::vector<int> MeterSet::all_ids() const {
  std::vector<int> ids(m());
  for (int i = 0; i < m(); ++i) ids[i] = i;
  return ids;
}

std::vector<int> MeterSet::virtual_ids() const {
  std::vector<int> ids;
  for (const Meter& mt : meters)
    if (is_virtual(mt.kind)) ids.push_back(mt.id);
  return ids;
}

std::vector<int> MeterSet::pseudo_pair_nodes() const {
  std::vector<int> nodes;
  for (const Meter& mt : meters)
    if (mt.kind == MeterKind::pseudo_p) nodes.push_back(mt.node);
  return nodes;
}

MeterSet build_meter_set(const FeederModel& model, const PlacementConfig& placement,
                         const InjectionVector& nominal, Rng& rng) {
  if (!(placement.voltage_fraction > 0.0) || placement.voltage_fraction > 1.0)
    throw std::invalid_argument("voltage_fraction must be in (0, 1]");
  const int n = model.n();
  const int k = static_cast<int>(std::ceil(placement.voltage_fraction * n));

  MeterSet set;
  set.voltage_nodes = rng.sample_without_replacement(n, k);

  auto pseudo_sigma = [&](double nominal_value) {
    return std::max(placement.pseudo_rel_sigma * std::abs(nominal_value),
                    placement.pseudo_sigma_floor);
  };

  int id = 0;
  for (int node : set.voltage_nodes)
    set.meters.push_back({id++, MeterKind::voltage_mag, node, placement.voltage_sigma_pu});
  if (placement.include_pseudo) {
    for (int node : model.load_nodes()) {
      set.meters.push_back({id++, MeterKind::pseudo_p, node, pseudo_sigma(nominal.p(node))});
      set.meters.push_back({id++, MeterKind::pseudo_q, node, pseudo_sigma(nominal.q(node))});
    }
  }
  for (int node = 0; node < n; ++node) {
    if (model.is_load(node)) continue;
    set.meters.push_back({id++, MeterKind::virtual_p, node, placement.virtual_sigma});
    set.meters.push_back({id++, MeterKind::virtual_q, node, placement.virtual_sigma});
  }

  int rank = observability_rank(model, set);
  if (rank < 2 * n)
    throw ObservabilityError("meter set not observable: stacked Jacobian rank " +
                                 std::to_string(rank) + " < " + std::to_string(2 * n),
                             rank, 2 * n);
  return set;
}

int observability_rank(const FeederModel& model, const MeterSet& meters) {
  const int n = model.n();
  SensitivityMatrix sens =
      jacobian_vm(model, InjectionVector::zeros(n),
                  {JacobianMethod::fixed_point_linearization, 1e-5, {}});
  Mat h(meters.m(), 2 * n);
  for (int i = 0; i < meters.m(); ++i) {
    const Meter& mt = meters.meters[i];
    switch (mt.kind) {
      case MeterKind::voltage_mag: h.row(i) = sens.h.row(mt.node); break;
      case MeterKind::pseudo_p:
      case MeterKind::virtual_p:
        h.row(i).setZero();
        h(i, mt.node) = 1.0;
        break;
      case MeterKind::pseudo_q:
      case MeterKind::virtual_q:
        h.row(i).setZero();
        h(i, n + mt.node) = 1.0;
        break;
    }
  }
  Eigen::ColPivHouseholderQR<Mat> qr(h);
  return static_cast<int>(qr.rank());
}

Vec measurement_function(const InjectionVector& s, const VoltageSolution& sol,
                         const MeterSet& meters) {
  Vec y(meters.m());
  for (int i = 0; i < meters.m(); ++i) {
    const Meter& mt = meters.meters[i];
    switch (mt.kind) {
      case MeterKind::voltage_mag: y(i) = sol.v_mag(mt.node); break;
      case MeterKind::pseudo_p:
      case MeterKind::virtual_p: y(i) = s.p(mt.node); break;
      case MeterKind::pseudo_q:
      case MeterKind::virtual_q: y(i) = s.q(mt.node); break;
    }
  }
  return y;
}

Vec measurement_function(const FeederModel& model, const InjectionVector& s,
                         const MeterSet& meters, const PowerFlowOptions& pf) {
  VoltageSolution sol = solve_power_flow(model, s, pf);
  return measurement_function(s, sol, meters);
}

MeasurementBatch synthesize_batch(const InjectionVector& truth,
                                  const VoltageSolution& truth_voltage,
                                  const MeterSet& meters, Rng& rng, long t) {
  MeasurementBatch batch;
  batch.t = t;
  batch.meter_ids = meters.all_ids();
  batch.values = measurement_function(truth, truth_voltage, meters);
  for (int i = 0; i < meters.m(); ++i) {
    const Meter& mt = meters.meters[i];
    if (is_virtual(mt.kind)) {
      batch.values(i) = 0.0;
    } else {
      batch.values(i) += mt.sigma * rng.gaussian();
    }
  }
  return batch;
}

MeasurementBatch restrict_batch(const MeasurementBatch& batch,
                                const std::vector<int>& subset_ids) {
  std::map<int, int> pos;
  for (int i = 0; i < batch.m_t(); ++i) pos[batch.meter_ids[i]] = i;
  MeasurementBatch out;
  out.t = batch.t;
  out.meter_ids = subset_ids;
  out.values = Vec(subset_ids.size());
  for (size_t i = 0; i < subset_ids.size(); ++i) {
    auto it = pos.find(subset_ids[i]);
    if (it == pos.end())
      throw std::invalid_argument("meter id " + std::to_string(subset_ids[i]) +
                                  " not present in batch");
    out.values(static_cast<int>(i)) = batch.values(it->second);
  }
  return out;
}

ArrivalPolicy ArrivalPolicy::paper(int k_v, int k_pq) {
  ArrivalPolicy p;
  p.kind = Kind::paper;
  p.k_v = k_v;
  p.k_pq = k_pq;
  return p;
}

ArrivalPolicy ArrivalPolicy::uniform(int m_t) {
  ArrivalPolicy p;
  p.kind = Kind::uniform;
  p.m_t = m_t;
  return p;
}

ArrivalPolicy ArrivalPolicy::round_robin(int m_t) {
  ArrivalPolicy p;
  p.kind = Kind::round_robin;
  p.m_t = m_t;
  return p;
}

std::vector<int> arrival_subset(const MeterSet& meters, const ArrivalPolicy& policy,
                                long t, Rng& rng) {
  const int m = meters.m();
  std::set<int> ids;
  switch (policy.kind) {
    case ArrivalPolicy::Kind::full:
      return meters.all_ids();
    case ArrivalPolicy::Kind::paper: {
      std::vector<int> vids;
      for (const Meter& mt : meters.meters)
        if (mt.kind == MeterKind::voltage_mag) vids.push_back(mt.id);
      std::vector<int> pair_p_ids;
      for (const Meter& mt : meters.meters)
        if (mt.kind == MeterKind::pseudo_p) pair_p_ids.push_back(mt.id);
      if (policy.k_v > static_cast<int>(vids.size()))
        throw std::invalid_argument("k_v exceeds voltage meter count");
      if (policy.k_pq > static_cast<int>(pair_p_ids.size()))
        throw std::invalid_argument("k_pq exceeds pseudo pair count");
      for (int k : rng.sample_without_replacement(static_cast<int>(vids.size()), policy.k_v))
        ids.insert(vids[k]);
      for (int k :
           rng.sample_without_replacement(static_cast<int>(pair_p_ids.size()), policy.k_pq)) {
        ids.insert(pair_p_ids[k]);
        ids.insert(pair_p_ids[k] + 1);  // the paired pseudo_q follows its pseudo_p
      }
      break;
    }
    case ArrivalPolicy::Kind::uniform: {
      if (policy.m_t > m) throw std::invalid_argument("m_t exceeds meter count");
      for (int k : rng.sample_without_replacement(m, policy.m_t)) ids.insert(k);
      break;
    }
    case ArrivalPolicy::Kind::round_robin: {
      if (policy.m_t > m) throw std::invalid_argument("m_t exceeds meter count");
      for (int j = 0; j < policy.m_t; ++j)
        ids.insert(static_cast<int>(((t - 1) * policy.m_t + j) % m));
      break;
    }
  }
  for (int v : meters.virtual_ids()) ids.insert(v);
  return {ids.begin(), ids.end()};
}

void write_batches_csv(const std::string& path, const MeterSet& meters,
                       const std::vector<MeasurementBatch>& batches) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,meter_id,kind,node,value,sigma\n";
  char buf[64];
  for (const MeasurementBatch& b : batches) {
    for (int i = 0; i < b.m_t(); ++i) {
      const Meter& mt = meters.meters.at(b.meter_ids[i]);
      std::snprintf(buf, sizeof(buf), "%.5e", b.values(i));
      out << b.t << ',' << mt.id << ',' << meter_kind_name(mt.kind) << ',' << mt.node << ','
          << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.5e", mt.sigma);
      out << buf << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

void read_measurements_csv(const std::string& path, MeterSet& meters,
                           std::vector<MeasurementBatch>& batches) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measurements file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,meter_id,kind,node,value,sigma", 0) != 0)
    throw std::runtime_error(path + ": expected header t,meter_id,kind,node,value,sigma");

  std::map<int, Meter> defs;
  std::map<long, std::vector<std::pair<int, double>>> rows;  // t -> (id, value)
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (int i = 0; i < 6; ++i)
      if (!std::getline(ss, f[i], ','))
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    long t = std::stol(f[0]);
    int id = std::stoi(f[1]);
    Meter mt{id, meter_kind_from_name(f[2]), std::stoi(f[3]), std::stod(f[5])};
    auto it = defs.find(id);
    if (it == defs.end()) {
      defs[id] = mt;
    } else if (it->second.kind != mt.kind || it->second.node != mt.node) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": inconsistent meter definition for id " + f[1]);
    }
    rows[t].push_back({id, std::stod(f[4])});
  }
  if (defs.empty()) throw std::runtime_error(path + ": no measurement rows");

  meters = MeterSet{};
  int expect = 0;
  for (auto& [id, mt] : defs) {
    if (id != expect++)
      throw std::runtime_error(path + ": meter ids must be contiguous from 0");
    meters.meters.push_back(mt);
    if (mt.kind == MeterKind::voltage_mag) meters.voltage_nodes.push_back(mt.node);
  }

  batches.clear();
  for (auto& [t, entries] : rows) {
    std::sort(entries.begin(), entries.end());
    MeasurementBatch b;
    b.t = t;
    b.values = Vec(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
      b.meter_ids.push_back(entries[i].first);
      b.values(static_cast<int>(i)) = entries[i].second;
    }
    batches.push_back(std::move(b));
  }
}

}  // namespace dsse
