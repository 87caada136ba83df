#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dsse/bound_harness.hpp"
#include "dsse/metrics.hpp"

namespace py = pybind11;
using namespace dsse;

PYBIND11_MODULE(_dsse, m) {
  m.doc() = "online distribution system state estimation: multiphase power flow, "
            "WLS estimators and the stochastic-gradient tracking harness";

  py::register_exception<FeederError>(m, "FeederError");
  py::register_exception<PowerFlowError>(m, "PowerFlowError");
  py::register_exception<ObservabilityError>(m, "ObservabilityError");

  py::class_<FeederModel>(m, "FeederModel")
      .def_property_readonly("n", &FeederModel::n)
      .def_property_readonly("slack_count", &FeederModel::slack_count)
      .def_property_readonly("ybus", [](const FeederModel& f) { return CMat(f.ybus()); })
      .def_property_readonly("load_nodes", &FeederModel::load_nodes)
      .def("node_index",
           [](const FeederModel& f, int bus, const std::string& phase) {
             return f.node_index(bus, phase_from_letter(phase.at(0)));
           })
      .def("node_at", [](const FeederModel& f, int idx) {
        NodeRef nr = f.node_at(idx);
        return py::make_tuple(nr.bus_id, std::string(1, phase_letter(nr.phase)));
      });

  m.def("load_feeder", &load_feeder, py::arg("text"));
  m.def("load_feeder_file", &load_feeder_file, py::arg("path"));
  m.def("load_feeder_template", &load_feeder_template, py::arg("name"));
  m.def("feeder_template_json",
        [](const std::string& name) { return feeder_template_json(name); });

  py::class_<InjectionVector>(m, "InjectionVector")
      .def(py::init([](Vec p, Vec q) { return InjectionVector{std::move(p), std::move(q)}; }))
      .def_static("zeros", &InjectionVector::zeros)
      .def_readwrite("p", &InjectionVector::p)
      .def_readwrite("q", &InjectionVector::q)
      .def("stacked", &InjectionVector::stacked);

  py::class_<VoltageSolution>(m, "VoltageSolution")
      .def_readonly("v_complex", &VoltageSolution::v_complex)
      .def_readonly("v_mag", &VoltageSolution::v_mag)
      .def_readonly("iterations", &VoltageSolution::iterations)
      .def_readonly("residual", &VoltageSolution::residual);

  m.def(
      "solve_power_flow",
      [](const FeederModel& model, const InjectionVector& s, double tol, int max_iter) {
        return solve_power_flow(model, s, {tol, max_iter});
      },
      py::arg("model"), py::arg("injections"), py::arg("tolerance") = 1e-10,
      py::arg("max_iterations") = 100);

  m.def(
      "jacobian_vm",
      [](const FeederModel& model, const InjectionVector& s, const std::string& method,
         double step) {
        JacobianOptions opts;
        opts.method = method == "finite_difference" ? JacobianMethod::finite_difference
                                                    : JacobianMethod::fixed_point_linearization;
        opts.step = step;
        return jacobian_vm(model, s, opts).h;
      },
      py::arg("model"), py::arg("injections"),
      py::arg("method") = "fixed_point_linearization", py::arg("step") = 1e-5);

  py::class_<LinearWlsProblem>(m, "LinearWlsProblem")
      .def(py::init([](Mat h, Vec w, Vec y) {
        return LinearWlsProblem{std::move(h), std::move(w), std::move(y)};
      }))
      .def_readwrite("h", &LinearWlsProblem::h)
      .def_readwrite("w", &LinearWlsProblem::w)
      .def_readwrite("y", &LinearWlsProblem::y);

  m.def("linear_wls_closed_form", &linear_wls_closed_form);
  m.def("linear_sgd_dynamics_step", &linear_sgd_dynamics_step, py::arg("z"),
        py::arg("problem"), py::arg("subset"), py::arg("eta"));

  py::class_<BoundParameters>(m, "BoundParameters")
      .def(py::init([](double tau1, double sigma_f2, double delta1, double delta_z,
                       double eta) {
             return BoundParameters{tau1, sigma_f2, delta1, delta_z, eta};
           }),
           py::arg("tau1"), py::arg("sigma_f2"), py::arg("delta1"), py::arg("delta_z"),
           py::arg("eta"))
      .def_readwrite("tau1", &BoundParameters::tau1)
      .def_readwrite("sigma_f2", &BoundParameters::sigma_f2)
      .def_readwrite("delta1", &BoundParameters::delta1)
      .def_readwrite("delta_z", &BoundParameters::delta_z)
      .def_readwrite("eta", &BoundParameters::eta);

  m.def("theorem1_bound", &theorem1_bound);

  m.def(
      "run_scenario",
      [](const std::string& scenario_json) {
        ScenarioConfig cfg = load_scenario(scenario_json);
        RunTrace trace = run_online(cfg);
        MetricsSummary s = summarize(trace);
        py::dict out;
        for (size_t e = 0; e < s.estimator_names.size(); ++e) {
          py::dict row;
          row["avg_step_time_s"] = s.avg_step_time_s[e];
          row["avg_error_per_node_pu"] = s.avg_error_per_node_pu[e];
          row["avg_max_error_per_sample_pu"] = s.avg_max_error_per_sample_pu[e];
          out[py::str(s.estimator_names[e])] = row;
        }
        return out;
      },
      py::arg("scenario_json"), "run a scenario document and return summary metrics");

  m.def(
      "verify_bound",
      [](const std::string& scenario_json, int seeds, int steps, int trailing,
         double mt_frac) {
        BoundHarnessOptions opts;
        opts.seeds = seeds;
        opts.steps = steps;
        opts.trailing = trailing;
        opts.mt_frac = mt_frac;
        BoundHarnessResult r = run_bound_harness(load_scenario(scenario_json), opts);
        py::dict out;
        out["tau1"] = r.params.tau1;
        out["sigma_f2"] = r.params.sigma_f2;
        out["eta"] = r.params.eta;
        out["bound"] = r.bound;
        out["mse"] = r.mse;
        out["mse_half_eta"] = r.mse_half_eta;
        out["bound_holds"] = r.bound_holds;
        out["monotone"] = r.monotone;
        return out;
      },
      py::arg("scenario_json"), py::arg("seeds") = 20, py::arg("steps") = 2000,
      py::arg("trailing") = 500, py::arg("mt_frac") = 0.2);
}
