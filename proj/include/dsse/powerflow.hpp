#pragma once

#include <optional>

#include "dsse/feeder.hpp"

namespace dsse {

/// Nodal injections, load convention: positive p/q is consumption, PV
/// generation enters as negative p. Length n each, per-unit.
struct InjectionVector {
  Vec p;
  Vec q;

  static InjectionVector zeros(int n) { return {Vec::Zero(n), Vec::Zero(n)}; }
  /// Stacked [p; q] (length 2n).
  Vec stacked() const;
  static InjectionVector from_stacked(const Vec& z);
};

struct PowerFlowOptions {
  double tolerance = 1e-10;  // power mismatch, infinity norm, per-unit
  int max_iterations = 100;
};

struct VoltageSolution {
  CVec v_complex;  // length n, per-unit
  Vec v_mag;       // |v_complex|
  int iterations = 0;
  double residual = 0.0;  // final power mismatch, infinity norm
};

enum class JacobianMethod { finite_difference, fixed_point_linearization };

struct JacobianOptions {
  JacobianMethod method = JacobianMethod::fixed_point_linearization;
  double step = 1e-5;  // per-unit perturbation for finite differences
  PowerFlowOptions pf;
};

/// Voltage-magnitude sensitivity: h is n x 2n, columns [d|v|/dp, d|v|/dq].
struct SensitivityMatrix {
  Mat h;
  InjectionVector operating_point;
  JacobianMethod method = JacobianMethod::fixed_point_linearization;
};

/// Z-bus fixed point solve of v = g(p, q):
///   V <- V_noload + Y_LL^-1 * I(V),  I(V) = conj(S_inj / V),  S_inj = -(p + iq),
/// iterated until the recomputed power mismatch is within opts.tolerance.
/// `start` warm-starts the iteration (defaults to the no-load voltage).
/// Throws PowerFlowError on non-convergence.
VoltageSolution solve_power_flow(const FeederModel& model, const InjectionVector& s,
                                 const PowerFlowOptions& opts = {},
                                 const CVec* start = nullptr);

/// Non-throwing variant; returns std::nullopt on non-convergence.
std::optional<VoltageSolution> try_solve_power_flow(const FeederModel& model,
                                                    const InjectionVector& s,
                                                    const PowerFlowOptions& opts = {},
                                                    const CVec* start = nullptr);

/// No-load voltage profile (slack propagated through the dead network).
CVec no_load_voltage(const FeederModel& model);

/// Sensitivity of voltage magnitudes to injections at operating point `s`.
/// finite_difference: central differences, 2*2n power flow solves.
/// fixed_point_linearization: derivative of one fixed-point iteration at the
/// solved voltage, d|v_j| terms of Z_ji / conj(V_i) with Z = Y_LL^-1.
SensitivityMatrix jacobian_vm(const FeederModel& model, const InjectionVector& s,
                              const JacobianOptions& opts = {});

}  // namespace dsse
