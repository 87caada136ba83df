#pragma once

#include <string>
#include <vector>

#include "dsse/measurement.hpp"

namespace dsse {

enum class Algorithm { gn, go, gd, sgd };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& s);

enum class VoltageRefresh { always, every_k };

struct EstimatorConfig {
  Algorithm algorithm = Algorithm::sgd;
  std::string name;              // defaults to the algorithm name
  double stepsize = 0.0;         // <= 0 means auto: 0.5 / lambda_max(G_free)
  int jacobian_refresh = 300;    // recompute H every K steps
  VoltageRefresh voltage_refresh = VoltageRefresh::every_k;
  int voltage_refresh_k = 50;    // exact power-flow refresh cadence (sgd)
  double tol = 1e-6;             // step-norm stopping tolerance (gn / go)
  int max_iter = 200;            // inner iteration cap (gn / go)
};

/// Online estimator state: the current [p; q] estimate, its voltage estimate
/// and the cached sensitivity used as the constant measurement Jacobian.
/// Non-load entries of z are exactly zero after every step.
struct EstimatorState {
  InjectionVector z;
  CVec v_complex;       // voltage estimate at z (last refresh)
  Vec v_mag;
  SensitivityMatrix h_cache;
  InjectionVector z_anchor;  // linearization point of h_cache
  Vec v_mag_anchor;
  double stepsize = 0.0;
  double last_objective = 0.0;
  long step_count = 0;
  long rejected_steps = 0;   // power-flow failures handled by stepsize halving
  bool converged = false;    // meaningful for gn / go solves
};

/// Convex counterpart of the WLS problem: rows of h, diagonal weights 1/sigma^2
/// and the measurement vector.
struct LinearWlsProblem {
  Mat h;   // m x d
  Vec w;   // length m
  Vec y;   // length m
};

/// Constants of the steady-state tracking bound.
struct BoundParameters {
  double tau1 = 0.0;     // lower bound of the smallest gain-matrix eigenvalue
  double sigma_f2 = 0.0; // bound of E[||f(z;xi)||^2]
  double delta1 = 0.0;   // bound of ||f~ - f||^2 (nonlinear/linear gradient gap)
  double delta_z = 0.0;  // bound of ||z*_{t+1} - z*_t||
  double eta = 0.0;      // constant stepsize, must satisfy 0 < eta <= 1/(2 tau1)
};

/// One linearized problem plus the realized arrival subset and iterate,
/// the per-step record from which bound constants are measured.
struct TrajectorySample {
  std::vector<LinearWlsProblem> problems;   // per step t
  std::vector<std::vector<int>> subsets;    // arrived row indices at t
  std::vector<Vec> iterates;                // z_t the gradients were taken at
  /// Optional: true nonlinear h^s(z_t) per step, aligned with subsets. When
  /// present, delta1 is measured from the gap between the nonlinear and
  /// linearized stochastic gradients; otherwise delta1 = 0.
  std::vector<Vec> nonlinear_h;
};

// -- WLS pieces ---------------------------------------------------------------

/// 1/2 (y - h(z))' W (y - h(z)) over the batch's meters; h evaluated exactly
/// (power flow at z). Throws PowerFlowError if the flow does not converge.
double wls_objective(const InjectionVector& z, const MeasurementBatch& batch,
                     const MeterSet& meters, const FeederModel& model,
                     const PowerFlowOptions& pf = {});

/// H' W (h(z) - y) over the batch's meters, length 2n. Voltage entries of
/// h(z) come from v_mag (the current voltage estimate); H rows come from the
/// cached sensitivity. This is the stochastic gradient for partial batches.
Vec wls_gradient(const InjectionVector& z, const Vec& v_mag,
                 const MeasurementBatch& batch, const MeterSet& meters,
                 const SensitivityMatrix& h_cache);

/// Measurement Jacobian rows for the given meter ids (m_t x 2n): sensitivity
/// rows for voltage meters, identity rows for pseudo/virtual injections.
Mat measurement_jacobian_rows(const MeterSet& meters, const std::vector<int>& ids,
                              const SensitivityMatrix& h_cache, int n);

/// Projection onto the constraint set: zeroes non-load entries of z.
void project_virtual(const FeederModel& model, InjectionVector& z);

/// Stacked indices (load p, then load q) of the free coordinates.
std::vector<int> free_coordinates(const FeederModel& model);

// -- Estimators ---------------------------------------------------------------

/// Fresh state at z0: projects, solves the power flow, caches the Jacobian and
/// resolves the stepsize (auto = 0.5 / lambda_max of the free-coordinate gain).
EstimatorState make_estimator_state(const FeederModel& model, const MeterSet& meters,
                                    const InjectionVector& z0,
                                    const EstimatorConfig& config,
                                    const JacobianOptions& jac = {},
                                    const PowerFlowOptions& pf = {});

/// Iterative Gauss-Newton on a full batch: z += G^-1 H' W (y - h(z)) with H
/// refreshed each iteration and the virtual projection applied per iterate,
/// until the step norm is within tol. state.converged reports success; the
/// state is returned either way. Throws on a singular gain matrix.
EstimatorState gauss_newton_solve(const FeederModel& model, const MeterSet& meters,
                                  const MeasurementBatch& batch,
                                  const InjectionVector& z0, double tol, int max_iter,
                                  const JacobianOptions& jac = {},
                                  const PowerFlowOptions& pf = {});

/// One stochastic gradient step from the state's estimate using the arrived
/// subset of the batch; virtual projection, then voltage refresh (exact power
/// flow or the cached linearization, per config). On power-flow failure at the
/// new iterate the step is retried with a halved stepsize for that step.
void online_sgd_step(EstimatorState& state, const MeasurementBatch& batch,
                     const MeterSet& meters, const FeederModel& model,
                     const EstimatorConfig& config, const JacobianOptions& jac = {},
                     const PowerFlowOptions& pf = {});

/// One full-gradient step; requires the full batch (m_t = m).
void online_gd_step(EstimatorState& state, const MeasurementBatch& batch,
                    const MeterSet& meters, const FeederModel& model,
                    const EstimatorConfig& config, const JacobianOptions& jac = {},
                    const PowerFlowOptions& pf = {});

/// Gradient iterations on one batch until the step norm is within tol
/// (the converged-gradient baseline). max_iter = 0 returns z0.
EstimatorState converged_gd_solve(const FeederModel& model, const MeterSet& meters,
                                  const MeasurementBatch& batch,
                                  const InjectionVector& z0, double tol, int max_iter,
                                  const EstimatorConfig& config = {},
                                  const JacobianOptions& jac = {},
                                  const PowerFlowOptions& pf = {});

// -- Convex counterpart / bound harness ---------------------------------------

/// Unique minimizer of 1/2 (y - Hz)' W (y - Hz) via a positive-definite
/// factorization of H'WH. Throws on rank deficiency.
Vec linear_wls_closed_form(const LinearWlsProblem& problem);

/// z - eta * H_s' W_s (H_s z - y_s) over the subset rows.
Vec linear_sgd_dynamics_step(const Vec& z, const LinearWlsProblem& problem,
                             const std::vector<int>& subset, double eta);

/// Steady-state tracking bound (eta^2 sigma_f^2 + eta^2 delta1 + delta_z) /
/// (2 eta tau1). Throws std::invalid_argument unless 0 < eta <= 1/(2 tau1).
double theorem1_bound(const BoundParameters& params);

/// Measures tau1 (min over t of the smallest gain eigenvalue), sigma_f2 (max
/// observed squared stochastic-gradient norm), delta1 (max observed squared
/// nonlinear/linear gradient gap) and delta_z (max optimizer drift) over a
/// sampled trajectory. Throws std::invalid_argument on an empty sample.
BoundParameters estimate_bound_constants(const TrajectorySample& sample, double eta);

}  // namespace dsse
