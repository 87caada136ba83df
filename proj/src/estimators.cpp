#include "dsse/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace dsse {

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::gn: return "gn";
    case Algorithm::go: return "go";
    case Algorithm::gd: return "gd";
    case Algorithm::sgd: return "sgd";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& s) {
  if (s == "gn") return Algorithm::gn;
  if (s == "go") return Algorithm::go;
  if (s == "gd") return Algorithm::gd;
  if (s == "sgd") return Algorithm::sgd;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

void project_virtual(const FeederModel& model, InjectionVector& z) {
  for (int i = 0; i < model.n(); ++i) {
    if (!model.is_load(i)) {
      z.p(i) = 0.0;
      z.q(i) = 0.0;
    }
  }
}

std::vector<int> free_coordinates(const FeederModel& model) {
  std::vector<int> idx;
  for (int i : model.load_nodes()) idx.push_back(i);
  for (int i : model.load_nodes()) idx.push_back(model.n() + i);
  return idx;
}

Mat measurement_jacobian_rows(const MeterSet& meters, const std::vector<int>& ids,
                              const SensitivityMatrix& h_cache, int n) {
  Mat rows = Mat::Zero(ids.size(), 2 * n);
  for (size_t k = 0; k < ids.size(); ++k) {
    const Meter& mt = meters.meters.at(ids[k]);
    switch (mt.kind) {
      case MeterKind::voltage_mag: rows.row(k) = h_cache.h.row(mt.node); break;
      case MeterKind::pseudo_p:
      case MeterKind::virtual_p: rows(k, mt.node) = 1.0; break;
      case MeterKind::pseudo_q:
      case MeterKind::virtual_q: rows(k, n + mt.node) = 1.0; break;
    }
  }
  return rows;
}

namespace {

bool has_voltage_meters(const MeterSet& meters) {
  for (const Meter& mt : meters.meters)
    if (mt.kind == MeterKind::voltage_mag) return true;
  return false;
}

// h(z) over the given meters with voltage entries taken from v_mag.
Vec eval_h(const InjectionVector& z, const Vec& v_mag, const MeterSet& meters,
           const std::vector<int>& ids) {
  Vec h(ids.size());
  for (size_t k = 0; k < ids.size(); ++k) {
    const Meter& mt = meters.meters.at(ids[k]);
    switch (mt.kind) {
      case MeterKind::voltage_mag: h(k) = v_mag(mt.node); break;
      case MeterKind::pseudo_p:
      case MeterKind::virtual_p: h(k) = z.p(mt.node); break;
      case MeterKind::pseudo_q:
      case MeterKind::virtual_q: h(k) = z.q(mt.node); break;
    }
  }
  return h;
}

Vec subset_weights(const MeterSet& meters, const std::vector<int>& ids) {
  Vec w(ids.size());
  for (size_t k = 0; k < ids.size(); ++k) {
    double sigma = meters.meters.at(ids[k]).sigma;
    w(k) = 1.0 / (sigma * sigma);
  }
  return w;
}

// Positive-definite solve of G_free d = g_free on the free coordinates.
Vec gain_solve(const Mat& g_full, const Vec& rhs_full, const std::vector<int>& free_idx) {
  const int f = static_cast<int>(free_idx.size());
  Mat g(f, f);
  Vec rhs(f);
  for (int r = 0; r < f; ++r) {
    rhs(r) = rhs_full(free_idx[r]);
    for (int c = 0; c < f; ++c) g(r, c) = g_full(free_idx[r], free_idx[c]);
  }
  Eigen::LDLT<Mat> ldlt(g);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("gain matrix factorization failed");
  Vec d = ldlt.vectorD();
  if (d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff()))
    throw std::runtime_error("singular gain matrix (rank-deficient measurement set)");
  return ldlt.solve(rhs);
}

double max_gain_eigenvalue(const Mat& rows, const Vec& w, const std::vector<int>& free_idx) {
  Mat g_full = rows.transpose() * w.asDiagonal() * rows;
  const int f = static_cast<int>(free_idx.size());
  Mat g(f, f);
  for (int r = 0; r < f; ++r)
    for (int c = 0; c < f; ++c) g(r, c) = g_full(free_idx[r], free_idx[c]);
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

double wls_objective(const InjectionVector& z, const MeasurementBatch& batch,
                     const MeterSet& meters, const FeederModel& model,
                     const PowerFlowOptions& pf) {
  Vec h;
  if (has_voltage_meters(meters)) {
    VoltageSolution sol = solve_power_flow(model, z, pf);
    h = eval_h(z, sol.v_mag, meters, batch.meter_ids);
  } else {
    h = eval_h(z, Vec(), meters, batch.meter_ids);
  }
  Vec r = batch.values - h;
  Vec w = subset_weights(meters, batch.meter_ids);
  return 0.5 * r.dot(w.cwiseProduct(r));
}

Vec wls_gradient(const InjectionVector& z, const Vec& v_mag,
                 const MeasurementBatch& batch, const MeterSet& meters,
                 const SensitivityMatrix& h_cache) {
  const int n = static_cast<int>(z.p.size());
  if (h_cache.h.rows() != n && has_voltage_meters(meters))
    throw std::invalid_argument("sensitivity cache dimension mismatch");
  Mat rows = measurement_jacobian_rows(meters, batch.meter_ids, h_cache, n);
  Vec h = eval_h(z, v_mag, meters, batch.meter_ids);
  Vec w = subset_weights(meters, batch.meter_ids);
  return rows.transpose() * w.cwiseProduct(h - batch.values);
}

EstimatorState make_estimator_state(const FeederModel& model, const MeterSet& meters,
                                    const InjectionVector& z0,
                                    const EstimatorConfig& config,
                                    const JacobianOptions& jac,
                                    const PowerFlowOptions& pf) {
  const int n = model.n();
  EstimatorState st;
  st.z = z0;
  project_virtual(model, st.z);

  if (has_voltage_meters(meters)) {
    auto sol = try_solve_power_flow(model, st.z, pf);
    if (!sol) {
      // prior is infeasible; fall back to the always-solvable no-load state
      st.z = InjectionVector::zeros(n);
      sol = try_solve_power_flow(model, st.z, pf);
      if (!sol) throw PowerFlowError("power flow failed at the no-load state");
    }
    st.v_complex = sol->v_complex;
    st.v_mag = sol->v_mag;
    st.h_cache = jacobian_vm(model, st.z, jac);
  } else {
    st.v_complex = model.no_load_voltage();
    st.v_mag = st.v_complex.cwiseAbs();
    st.h_cache.h = Mat::Zero(n, 2 * n);
    st.h_cache.operating_point = st.z;
  }
  st.z_anchor = st.z;
  st.v_mag_anchor = st.v_mag;

  if (config.stepsize > 0) {
    st.stepsize = config.stepsize;
  } else {
    Mat rows = measurement_jacobian_rows(meters, meters.all_ids(), st.h_cache, n);
    double lmax = max_gain_eigenvalue(rows, meters.weights(), free_coordinates(model));
    st.stepsize = 0.5 / lmax;
  }
  return st;
}

EstimatorState gauss_newton_solve(const FeederModel& model, const MeterSet& meters,
                                  const MeasurementBatch& batch,
                                  const InjectionVector& z0, double tol, int max_iter,
                                  const JacobianOptions& jac, const PowerFlowOptions& pf) {
  if (batch.m_t() != meters.m())
    throw std::invalid_argument("gauss_newton_solve requires the full batch");
  const int n = model.n();
  const bool voltage = has_voltage_meters(meters);
  const std::vector<int> free_idx = free_coordinates(model);

  EstimatorState st;
  st.z = z0;
  project_virtual(model, st.z);
  st.stepsize = 0.0;
  Vec w = subset_weights(meters, batch.meter_ids);

  VoltageSolution sol;
  if (voltage) sol = solve_power_flow(model, st.z, pf);

  for (int k = 0; k < max_iter; ++k) {
    if (voltage) st.h_cache = jacobian_vm(model, st.z, jac);
    else st.h_cache.h = Mat::Zero(n, 2 * n);

    Vec h = eval_h(st.z, voltage ? sol.v_mag : Vec(), meters, batch.meter_ids);
    Mat rows = measurement_jacobian_rows(meters, batch.meter_ids, st.h_cache, n);
    Vec rhs = rows.transpose() * w.cwiseProduct(batch.values - h);
    Mat g_full = rows.transpose() * w.asDiagonal() * rows;
    Vec step_free = gain_solve(g_full, rhs, free_idx);

    Vec z_st = st.z.stacked();
    for (size_t i = 0; i < free_idx.size(); ++i) z_st(free_idx[i]) += step_free(i);
    st.z = InjectionVector::from_stacked(z_st);
    project_virtual(model, st.z);
    st.step_count = k + 1;

    if (voltage) sol = solve_power_flow(model, st.z, pf, &sol.v_complex);

    if (step_free.cwiseAbs().maxCoeff() <= tol) {
      st.converged = true;
      break;
    }
  }

  if (voltage) {
    st.v_complex = sol.v_complex;
    st.v_mag = sol.v_mag;
  } else {
    st.v_complex = model.no_load_voltage();
    st.v_mag = st.v_complex.cwiseAbs();
    st.h_cache.operating_point = st.z;
  }
  st.z_anchor = st.z;
  st.v_mag_anchor = st.v_mag;
  Vec h = eval_h(st.z, st.v_mag, meters, batch.meter_ids);
  Vec r = batch.values - h;
  st.last_objective = 0.5 * r.dot(w.cwiseProduct(r));
  return st;
}

void online_sgd_step(EstimatorState& state, const MeasurementBatch& batch,
                     const MeterSet& meters, const FeederModel& model,
                     const EstimatorConfig& config, const JacobianOptions& jac,
                     const PowerFlowOptions& pf) {
  const int n = model.n();
  const bool voltage = has_voltage_meters(meters);
  state.step_count += 1;

  if (voltage && config.jacobian_refresh > 0 &&
      state.step_count % config.jacobian_refresh == 0) {
    auto sol = try_solve_power_flow(model, state.z, pf, &state.v_complex);
    if (sol) {
      state.h_cache = jacobian_vm(model, state.z, jac);
      state.v_complex = sol->v_complex;
      state.v_mag = sol->v_mag;
      state.z_anchor = state.z;
      state.v_mag_anchor = state.v_mag;
    }
  }

  Vec h = eval_h(state.z, state.v_mag, meters, batch.meter_ids);
  Vec w = subset_weights(meters, batch.meter_ids);
  Vec r = h - batch.values;
  state.last_objective = 0.5 * r.dot(w.cwiseProduct(r));
  Mat rows = measurement_jacobian_rows(meters, batch.meter_ids, state.h_cache, n);
  Vec grad = rows.transpose() * w.cwiseProduct(r);

  const bool exact_refresh =
      voltage && (config.voltage_refresh == VoltageRefresh::always ||
                  (config.voltage_refresh_k > 0 &&
                   state.step_count % config.voltage_refresh_k == 0));

  double eta = state.stepsize;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vec z_st = state.z.stacked() - eta * grad;
    InjectionVector z_new = InjectionVector::from_stacked(z_st);
    project_virtual(model, z_new);

    if (exact_refresh) {
      auto sol = try_solve_power_flow(model, z_new, pf, &state.v_complex);
      if (!sol) {
        // power flow failed at the new iterate: halve the stepsize for this step
        state.rejected_steps += 1;
        eta *= 0.5;
        continue;
      }
      state.v_complex = sol->v_complex;
      state.v_mag = sol->v_mag;
    } else if (voltage) {
      Vec dz = z_new.stacked() - state.z_anchor.stacked();
      state.v_mag = state.v_mag_anchor + state.h_cache.h * dz;
    }
    state.z = std::move(z_new);
    return;
  }
  // every retry failed; keep the previous estimate for this step
}

void online_gd_step(EstimatorState& state, const MeasurementBatch& batch,
                    const MeterSet& meters, const FeederModel& model,
                    const EstimatorConfig& config, const JacobianOptions& jac,
                    const PowerFlowOptions& pf) {
  if (batch.m_t() != meters.m())
    throw std::invalid_argument("online_gd_step requires the full batch");
  online_sgd_step(state, batch, meters, model, config, jac, pf);
}

EstimatorState converged_gd_solve(const FeederModel& model, const MeterSet& meters,
                                  const MeasurementBatch& batch,
                                  const InjectionVector& z0, double tol, int max_iter,
                                  const EstimatorConfig& config,
                                  const JacobianOptions& jac, const PowerFlowOptions& pf) {
  if (batch.m_t() != meters.m())
    throw std::invalid_argument("converged_gd_solve requires the full batch");
  EstimatorConfig inner = config;
  inner.voltage_refresh = VoltageRefresh::always;  // h(z) re-evaluated each iterate
  inner.jacobian_refresh = 0;                      // constant H within the solve

  EstimatorState st = make_estimator_state(model, meters, z0, config, jac, pf);
  for (int k = 0; k < max_iter; ++k) {
    Vec prev = st.z.stacked();
    online_sgd_step(st, batch, meters, model, inner, jac, pf);
    if ((st.z.stacked() - prev).cwiseAbs().maxCoeff() <= tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

Vec linear_wls_closed_form(const LinearWlsProblem& problem) {
  Mat g = problem.h.transpose() * problem.w.asDiagonal() * problem.h;
  Eigen::LDLT<Mat> ldlt(g);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("gain matrix factorization failed");
  Vec d = ldlt.vectorD();
  if (d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff()))
    throw std::runtime_error("rank-deficient linear WLS problem");
  return ldlt.solve(problem.h.transpose() * problem.w.cwiseProduct(problem.y));
}

Vec linear_sgd_dynamics_step(const Vec& z, const LinearWlsProblem& problem,
                             const std::vector<int>& subset, double eta) {
  Vec out = z;
  for (int row : subset) {
    double r = problem.h.row(row).dot(z) - problem.y(row);
    out -= eta * problem.w(row) * r * problem.h.row(row).transpose();
  }
  return out;
}

double theorem1_bound(const BoundParameters& params) {
  if (!(params.tau1 > 0)) throw std::invalid_argument("tau1 must be positive");
  if (params.sigma_f2 < 0 || params.delta1 < 0 || params.delta_z < 0)
    throw std::invalid_argument("bound constants must be nonnegative");
  if (!(params.eta > 0) || params.eta > 1.0 / (2.0 * params.tau1) * (1.0 + 1e-12))
    throw std::invalid_argument("stepsize must satisfy 0 < eta <= 1/(2 tau1)");
  const double eta = params.eta;
  return (eta * eta * params.sigma_f2 + eta * eta * params.delta1 + params.delta_z) /
         (2.0 * eta * params.tau1);
}

BoundParameters estimate_bound_constants(const TrajectorySample& sample, double eta) {
  const size_t T = sample.problems.size();
  if (T == 0 || sample.subsets.size() != T || sample.iterates.size() != T)
    throw std::invalid_argument("empty or inconsistent trajectory sample");

  BoundParameters params;
  params.eta = eta;
  params.tau1 = std::numeric_limits<double>::infinity();
  params.sigma_f2 = 0.0;
  params.delta1 = 0.0;
  params.delta_z = 0.0;

  Vec prev_opt;
  for (size_t t = 0; t < T; ++t) {
    const LinearWlsProblem& prob = sample.problems[t];
    Mat g = prob.h.transpose() * prob.w.asDiagonal() * prob.h;
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    params.tau1 = std::min(params.tau1, es.eigenvalues().minCoeff());

    const Vec& z = sample.iterates[t];
    const std::vector<int>& sub = sample.subsets[t];
    Vec f = Vec::Zero(z.size());
    for (int row : sub) {
      double r = prob.h.row(row).dot(z) - prob.y(row);
      f += prob.w(row) * r * prob.h.row(row).transpose();
    }
    params.sigma_f2 = std::max(params.sigma_f2, f.squaredNorm());

    if (!sample.nonlinear_h.empty()) {
      const Vec& hs = sample.nonlinear_h.at(t);
      Vec f_tilde = Vec::Zero(z.size());
      for (size_t k = 0; k < sub.size(); ++k) {
        double r = hs(k) - prob.y(sub[k]);
        f_tilde += prob.w(sub[k]) * r * prob.h.row(sub[k]).transpose();
      }
      params.delta1 = std::max(params.delta1, (f_tilde - f).squaredNorm());
    }

    Vec opt = linear_wls_closed_form(prob);
    if (t > 0) params.delta_z = std::max(params.delta_z, (opt - prev_opt).norm());
    prev_opt = std::move(opt);
  }
  return params;
}

}  // namespace dsse
