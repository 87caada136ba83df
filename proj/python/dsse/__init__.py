"""Online distribution system state estimation over multiphase feeders."""

from ._dsse import (
    BoundParameters,
    FeederError,
    FeederModel,
    InjectionVector,
    LinearWlsProblem,
    ObservabilityError,
    PowerFlowError,
    VoltageSolution,
    feeder_template_json,
    jacobian_vm,
    linear_sgd_dynamics_step,
    linear_wls_closed_form,
    load_feeder,
    load_feeder_file,
    load_feeder_template,
    run_scenario,
    solve_power_flow,
    theorem1_bound,
    verify_bound,
)

__all__ = [
    "BoundParameters",
    "FeederError",
    "FeederModel",
    "InjectionVector",
    "LinearWlsProblem",
    "ObservabilityError",
    "PowerFlowError",
    "VoltageSolution",
    "feeder_template_json",
    "jacobian_vm",
    "linear_sgd_dynamics_step",
    "linear_wls_closed_form",
    "load_feeder",
    "load_feeder_file",
    "load_feeder_template",
    "run_scenario",
    "solve_power_flow",
    "theorem1_bound",
    "verify_bound",
]
