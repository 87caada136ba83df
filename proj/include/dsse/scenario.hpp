#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dsse/estimators.hpp"

namespace dsse {

/// Synthetic load/PV profile: per-load-node base level, diurnal shape, AR(1)
/// volatility and an optional PV term with cloud noise.
///   p_i(t) = base_i * diurnal(t) * (1 + ar1_i(t)) - pv_i * irr(t) * (1 + cloud_i(t))
///   q_i(t) = base_i * diurnal(t) * (1 + ar1_i(t)) * tan(phi)
struct ProfileSpec {
  Vec base_p;                // per load node, per-unit, >= 0
  double power_factor = 0.95;
  bool diurnal_flat = false;
  double diurnal_min_frac = 0.6;
  double volatility = 0.02;  // stationary sd of the AR(1) multiplier
  double ar1_rho = 0.99;
  double pv_fraction = 0.0;  // fraction of load nodes carrying PV
  double pv_capacity_frac = 0.8;  // PV capacity relative to base_p
  double cloud_sigma = 0.1;
  double start_hour = 6.0;   // hour of day at t = 1
  double sunrise_hour = 6.5;
  double sunset_hour = 19.5;
};

/// Stateful profile generator; step() advances one second. Deterministic for
/// a given seed.
class ProfileGenerator {
 public:
  ProfileGenerator(const FeederModel& model, const ProfileSpec& spec, Rng rng);

  /// Injection at the next timestep (call sequence defines t = 1, 2, ...).
  InjectionVector step();
  /// Noise-free injections at t (the historical expectation).
  InjectionVector nominal(long t = 1) const;

  const std::vector<int>& pv_nodes() const { return pv_nodes_; }

 private:
  double diurnal(double hour) const;
  double irradiance(double hour) const;

  const FeederModel& model_;
  ProfileSpec spec_;
  Rng rng_;
  std::vector<int> pv_nodes_;      // subset of load node positions
  Vec pv_capacity_;                // per load node
  Vec ar1_state_;                  // per load node
  Vec cloud_state_;                // per load node
  double tan_phi_ = 0.0;
  long t_ = 0;
};

struct ArrivalConfig {
  ArrivalPolicy policy = ArrivalPolicy::paper();
};

struct ScenarioConfig {
  std::string feeder;        // path or embedded template name
  long horizon_T = 3600;
  std::uint64_t seed = 1;
  ProfileSpec profile;
  bool profile_base_scalar = true;  // base_p given as one scalar in the file
  double profile_base_value = 0.06;
  PlacementConfig placement;
  ArrivalPolicy arrival = ArrivalPolicy::paper();
  long pseudo_refresh = 0;   // redraw pseudo values every k steps; 0 = never
  std::vector<EstimatorConfig> estimators;
  JacobianOptions jacobian;
  PowerFlowOptions powerflow;
};

/// Parses the scenario document (JSON text). The "feeder" field may name an
/// embedded template (2bus, 4bus, 13node) or a file path.
ScenarioConfig load_scenario(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);

/// Per-run record: true voltages, per-estimator estimates, step wall times.
struct RunTrace {
  std::vector<std::string> estimator_names;
  std::vector<long> t;                     // 1..T
  std::vector<Vec> v_true;                 // per t, length n
  std::vector<std::vector<Vec>> v_est;     // [estimator][t], length n
  std::vector<std::vector<double>> step_seconds;  // [estimator][t]
  std::vector<std::vector<Vec>> z_est;     // [estimator][t], 2n; empty unless logged
  std::vector<int> m_t;                    // arrival subset size per t
  int n = 0;

  long T() const { return static_cast<long>(t.size()); }
};

/// Drives truth generation, measurement synthesis and the estimator updates
/// one timestep at a time. All estimators in a run observe identical noise;
/// only the arrival masking differs.
class ScenarioEngine {
 public:
  ScenarioEngine(ScenarioConfig config, bool log_states = false);

  /// Advances one timestep and appends to the trace. Throws PowerFlowError
  /// (with the offending t in the message) if the truth flow fails.
  void step();

  const RunTrace& trace() const { return trace_; }
  const FeederModel& model() const { return *model_; }
  const MeterSet& meters() const { return meters_; }
  const ScenarioConfig& config() const { return config_; }
  /// Last synthesized full batch and arrival subset (for inspection/tests).
  const MeasurementBatch& last_batch() const { return last_batch_; }
  const std::vector<int>& last_subset() const { return last_subset_; }

 private:
  void init_estimators();
  MeasurementBatch make_batch(const InjectionVector& truth,
                              const VoltageSolution& sol, long t);

  ScenarioConfig config_;
  bool log_states_;
  std::unique_ptr<FeederModel> model_;
  std::unique_ptr<ProfileGenerator> profile_;
  MeterSet meters_;
  Rng rng_noise_;
  Rng rng_arrival_;
  Vec pseudo_values_;  // per meter id; frozen historical draws
  std::vector<EstimatorConfig> est_configs_;
  std::vector<EstimatorState> est_states_;
  std::vector<bool> est_failed_;  // last step failed; estimate carried over
  RunTrace trace_;
  MeasurementBatch last_batch_;
  std::vector<int> last_subset_;
  CVec truth_warm_start_;
  long t_ = 0;
};

/// Runs the whole horizon and returns the trace.
RunTrace run_online(const ScenarioConfig& config, bool log_states = false);

}  // namespace dsse
