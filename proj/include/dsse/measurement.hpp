#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsse/powerflow.hpp"
#include "dsse/rng.hpp"

namespace dsse {

enum class MeterKind { voltage_mag, pseudo_p, pseudo_q, virtual_p, virtual_q };

const char* meter_kind_name(MeterKind k);
MeterKind meter_kind_from_name(const std::string& s);
bool is_virtual(MeterKind k);
bool is_pseudo(MeterKind k);

struct Meter {
  int id = 0;        // equals position in MeterSet::meters
  MeterKind kind = MeterKind::voltage_mag;
  int node = 0;      // node index in 0..n-1
  double sigma = 0;  // standard deviation, per-unit, > 0
};

/// Ordered meter list: voltage meters (ascending node), then pseudo p,q pairs
/// per load node, then virtual p,q pairs per non-load node.
struct MeterSet {
  std::vector<Meter> meters;
  std::vector<int> voltage_nodes;  // ascending

  int m() const { return static_cast<int>(meters.size()); }
  /// Diagonal of W: 1/sigma^2 per meter.
  Vec weights() const;
  std::vector<int> all_ids() const;
  std::vector<int> virtual_ids() const;
  /// Load nodes that carry a pseudo p,q pair, ascending.
  std::vector<int> pseudo_pair_nodes() const;
};

struct PlacementConfig {
  double voltage_fraction = 0.12;   // in (0, 1]
  double voltage_sigma_pu = 0.01;
  double pseudo_rel_sigma = 0.5;    // sigma = rel * |nominal injection|
  double pseudo_sigma_floor = 1e-3;
  double virtual_sigma = 1e-3;
  bool include_pseudo = true;       // disabling breaks observability; error path
};

/// Places voltage meters on a seeded-random ceil(fraction*n) node subset,
/// pseudo p,q meters on every load node (sigma from the nominal injection) and
/// virtual p,q meters on every non-load node, then verifies that the stacked
/// Jacobian over all meters has full column rank 2n.
/// Throws ObservabilityError (with the achieved rank) on failure.
MeterSet build_meter_set(const FeederModel& model, const PlacementConfig& placement,
                         const InjectionVector& nominal, Rng& rng);

/// Column rank of the measurement Jacobian stacked over all meters, evaluated
/// at the no-load operating point.
int observability_rank(const FeederModel& model, const MeterSet& meters);

struct MeasurementBatch {
  long t = 0;
  std::vector<int> meter_ids;  // ascending; the arrival subset M_t
  Vec values;                  // aligned with meter_ids

  int m_t() const { return static_cast<int>(meter_ids.size()); }
};

/// Evaluates h(z) over the meter set: voltage magnitudes from the power flow
/// solution, identity entries for pseudo/virtual injections. Length m.
Vec measurement_function(const FeederModel& model, const InjectionVector& s,
                         const MeterSet& meters, const PowerFlowOptions& pf = {});
/// Same, reusing an already-computed voltage solution for s.
Vec measurement_function(const InjectionVector& s, const VoltageSolution& sol,
                         const MeterSet& meters);

/// Full batch (m_t = m): value_i = h_i(truth) + N(0, sigma_i^2); virtual
/// meters read exactly 0.
MeasurementBatch synthesize_batch(const InjectionVector& truth,
                                  const VoltageSolution& truth_voltage,
                                  const MeterSet& meters, Rng& rng, long t = 0);

/// Restriction of a batch to a subset of its meter ids (order preserved).
MeasurementBatch restrict_batch(const MeasurementBatch& batch,
                                const std::vector<int>& subset_ids);

struct ArrivalPolicy {
  enum class Kind { full, paper, uniform, round_robin };
  Kind kind = Kind::full;
  int k_v = 1;   // voltage meters per step (paper policy)
  int k_pq = 3;  // pseudo p,q pairs per step (paper policy)
  int m_t = 0;   // subset size (uniform / round_robin)

  static ArrivalPolicy full() { return {}; }
  static ArrivalPolicy paper(int k_v = 1, int k_pq = 3);
  static ArrivalPolicy uniform(int m_t);
  static ArrivalPolicy round_robin(int m_t);
};

/// Meter ids arriving at step t, ascending. Virtual meters are included in
/// every subset; their zero-injection constraint holds at all times.
/// paper: k_v voltage meters plus k_pq pseudo pairs, uniformly without
/// replacement. uniform: m_t of all meters. round_robin: deterministic cycle.
std::vector<int> arrival_subset(const MeterSet& meters, const ArrivalPolicy& policy,
                                long t, Rng& rng);

/// Batch dump, columns: t, meter_id, kind, node, value, sigma.
void write_batches_csv(const std::string& path, const MeterSet& meters,
                       const std::vector<MeasurementBatch>& batches);

/// Reads a batch dump: reconstructs the meter definitions and the batches
/// grouped by t (ascending).
void read_measurements_csv(const std::string& path, MeterSet& meters,
                           std::vector<MeasurementBatch>& batches);

}  // namespace dsse
