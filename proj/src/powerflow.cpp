#include "dsse/powerflow.hpp"

#include <cmath>

namespace dsse {

Vec InjectionVector::stacked() const {
  Vec z(p.size() + q.size());
  z << p, q;
  return z;
}

InjectionVector InjectionVector::from_stacked(const Vec& z) {
  const int n = static_cast<int>(z.size()) / 2;
  return {z.head(n), z.tail(n)};
}

CVec no_load_voltage(const FeederModel& model) { return model.no_load_voltage(); }

namespace {

// Infinity norm of the complex power mismatch S(V) - S_inj.
double power_mismatch(const FeederModel& model, const CVec& v, const CVec& s_inj) {
  CVec i_inj = model.y_l0() * model.slack_voltage() + model.y_ll() * v;
  CVec s_calc = v.cwiseProduct(i_inj.conjugate());
  return (s_calc - s_inj).cwiseAbs().maxCoeff();
}

}  // namespace

std::optional<VoltageSolution> try_solve_power_flow(const FeederModel& model,
                                                    const InjectionVector& s,
                                                    const PowerFlowOptions& opts,
                                                    const CVec* start) {
  const int n = model.n();
  if (s.p.size() != n || s.q.size() != n)
    throw PowerFlowError("injection vector length mismatch");
  if (!(opts.tolerance > 0)) throw PowerFlowError("tolerance must be positive");
  if (!s.p.allFinite() || !s.q.allFinite())
    throw PowerFlowError("injections must be finite");

  // Load convention: S_inj = -(p + iq).
  CVec s_inj(n);
  for (int i = 0; i < n; ++i) s_inj(i) = Complex(-s.p(i), -s.q(i));

  CVec v = start ? *start : model.no_load_voltage();
  double mismatch = power_mismatch(model, v, s_inj);
  int iterations = 0;
  while (mismatch > opts.tolerance && iterations < opts.max_iterations) {
    if (v.cwiseAbs().minCoeff() < 1e-6) return std::nullopt;  // collapsed iterate
    CVec i_inj = (s_inj.cwiseQuotient(v)).conjugate();
    v = model.no_load_voltage() + model.y_ll_factor().solve(i_inj);
    if (!v.allFinite()) return std::nullopt;
    mismatch = power_mismatch(model, v, s_inj);
    if (!std::isfinite(mismatch) || mismatch > 1e9) return std::nullopt;
    ++iterations;
  }
  if (mismatch > opts.tolerance) return std::nullopt;

  VoltageSolution sol;
  sol.v_complex = std::move(v);
  sol.v_mag = sol.v_complex.cwiseAbs();
  sol.iterations = iterations;
  sol.residual = mismatch;
  return sol;
}

VoltageSolution solve_power_flow(const FeederModel& model, const InjectionVector& s,
                                 const PowerFlowOptions& opts, const CVec* start) {
  auto sol = try_solve_power_flow(model, s, opts, start);
  if (!sol)
    throw PowerFlowError("power flow did not converge within " +
                         std::to_string(opts.max_iterations) +
                         " iterations (infeasible or extreme loading)");
  return *sol;
}

SensitivityMatrix jacobian_vm(const FeederModel& model, const InjectionVector& s,
                              const JacobianOptions& opts) {
  const int n = model.n();
  SensitivityMatrix out;
  out.operating_point = s;
  out.method = opts.method;
  out.h = Mat(n, 2 * n);

  if (opts.method == JacobianMethod::finite_difference) {
    const double d = opts.step;
    VoltageSolution base = solve_power_flow(model, s, opts.pf);
    for (int block = 0; block < 2; ++block) {
      for (int i = 0; i < n; ++i) {
        InjectionVector up = s, dn = s;
        (block == 0 ? up.p : up.q)(i) += d;
        (block == 0 ? dn.p : dn.q)(i) -= d;
        VoltageSolution sp = solve_power_flow(model, up, opts.pf, &base.v_complex);
        VoltageSolution sm = solve_power_flow(model, dn, opts.pf, &base.v_complex);
        out.h.col(block * n + i) = (sp.v_mag - sm.v_mag) / (2.0 * d);
      }
    }
    return out;
  }

  // Derivative of one fixed-point iteration V = V_noload + Z conj(S_inj / V)
  // holding the V inside the current term at the solved voltage:
  //   dV_j = -Z_ji (dp - i dq) / conj(V_i),   d|v_j| = Re(conj(V_j) dV_j) / |V_j|.
  VoltageSolution sol = solve_power_flow(model, s, opts.pf);
  CMat z_bus = model.y_ll_factor().solve(CMat::Identity(n, n));
  for (int i = 0; i < n; ++i) {
    const Complex vi_conj = std::conj(sol.v_complex(i));
    for (int j = 0; j < n; ++j) {
      const Complex w = std::conj(sol.v_complex(j)) * z_bus(j, i) / vi_conj;
      out.h(j, i) = -w.real() / sol.v_mag(j);
      out.h(j, n + i) = -w.imag() / sol.v_mag(j);
    }
  }
  return out;
}

}  // namespace dsse
