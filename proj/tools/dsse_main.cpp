#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsse/bound_harness.hpp"
#include "dsse/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            long seed_override, bool has_seed, bool log_states, bool dump_batches) {
  dsse::ScenarioConfig cfg = dsse::load_scenario_file(scenario_path);
  if (has_seed) cfg.seed = static_cast<std::uint64_t>(seed_override);

  fs::create_directories(out_dir);
  dsse::ScenarioEngine engine(cfg, log_states);
  std::vector<dsse::MeasurementBatch> batches;
  for (long t = 0; t < cfg.horizon_T; ++t) {
    engine.step();
    if (dump_batches) batches.push_back(engine.last_batch());
  }

  const dsse::RunTrace& trace = engine.trace();
  dsse::MetricsSummary summary = dsse::summarize(trace);
  dsse::write_trace_csv(trace, out_dir + "/trace.csv");
  dsse::write_summary_csv(summary, out_dir + "/summary.csv");
  dsse::write_running_error_csv(summary, trace.t, out_dir + "/running_error.csv");
  if (log_states) dsse::write_states_csv(trace, out_dir + "/states.csv");
  if (dump_batches) dsse::write_batches_csv(out_dir + "/batches.csv", engine.meters(), batches);

  std::printf("%-10s %14s %18s %22s\n", "estimator", "avg_time_s", "avg_error_pu",
              "avg_max_error_pu");
  for (size_t e = 0; e < summary.estimator_names.size(); ++e) {
    std::printf("%-10s %14s %18s %22s\n", summary.estimator_names[e].c_str(),
                dsse::format_sci(summary.avg_step_time_s[e]).c_str(),
                dsse::format_sci(summary.avg_error_per_node_pu[e]).c_str(),
                dsse::format_sci(summary.avg_max_error_per_sample_pu[e]).c_str());
  }
  std::printf("wrote %s/{trace,summary,running_error}.csv\n", out_dir.c_str());
  return 0;
}

int cmd_powerflow(const std::string& feeder_path, const std::string& injections_path,
                  double tol, int max_iter) {
  dsse::FeederModel model = dsse::load_feeder_file(feeder_path);
  dsse::InjectionVector s = dsse::InjectionVector::zeros(model.n());
  if (!injections_path.empty()) {
    std::ifstream in(injections_path);
    if (!in) throw std::runtime_error("cannot open injections file: " + injections_path);
    json doc = json::parse(in);
    for (const json& ji : doc.value("injections", json::array())) {
      std::string ph = ji.at("phase").get<std::string>();
      int node = model.node_index(ji.at("bus").get<int>(), dsse::phase_from_letter(ph.at(0)));
      s.p(node) = ji.value("p_pu", 0.0);
      s.q(node) = ji.value("q_pu", 0.0);
    }
  }
  dsse::PowerFlowOptions opts;
  opts.tolerance = tol;
  opts.max_iterations = max_iter;
  dsse::VoltageSolution sol = dsse::solve_power_flow(model, s, opts);

  std::printf("%-5s %-6s %14s %14s\n", "bus", "phase", "v_mag_pu", "v_angle_deg");
  for (int i = 0; i < model.n(); ++i) {
    dsse::NodeRef nr = model.node_at(i);
    std::printf("%-5d %-6c %14s %14.6f\n", nr.bus_id, dsse::phase_letter(nr.phase),
                dsse::format_sci(sol.v_mag(i)).c_str(),
                std::arg(sol.v_complex(i)) * 180.0 / M_PI);
  }
  std::printf("iterations=%d residual=%s\n", sol.iterations,
              dsse::format_sci(sol.residual).c_str());
  return 0;
}

int cmd_estimate_batch(const std::string& feeder_path, const std::string& meas_path,
                       const std::string& algorithm, long t_select, bool has_t,
                       double tol, int max_iter) {
  dsse::FeederModel model = dsse::load_feeder_file(feeder_path);
  dsse::MeterSet meters;
  std::vector<dsse::MeasurementBatch> batches;
  dsse::read_measurements_csv(meas_path, meters, batches);

  const dsse::MeasurementBatch* batch = nullptr;
  if (has_t) {
    for (const auto& b : batches)
      if (b.t == t_select) batch = &b;
    if (!batch) throw std::runtime_error("no batch with t = " + std::to_string(t_select));
  } else if (batches.size() == 1) {
    batch = &batches.front();
  } else {
    throw std::runtime_error("measurements file holds " + std::to_string(batches.size()) +
                             " batches; select one with --t");
  }

  dsse::InjectionVector z0 = dsse::InjectionVector::zeros(model.n());
  for (int i = 0; i < batch->m_t(); ++i) {
    const dsse::Meter& mt = meters.meters.at(batch->meter_ids[i]);
    if (mt.kind == dsse::MeterKind::pseudo_p) z0.p(mt.node) = batch->values(i);
    if (mt.kind == dsse::MeterKind::pseudo_q) z0.q(mt.node) = batch->values(i);
  }

  dsse::EstimatorState st;
  if (algorithm == "gn") {
    st = dsse::gauss_newton_solve(model, meters, *batch, z0, tol, max_iter);
  } else if (algorithm == "go") {
    st = dsse::converged_gd_solve(model, meters, *batch, z0, tol, max_iter);
  } else {
    throw CLI::ValidationError("--algorithm must be gn or go");
  }

  std::printf("converged=%s iterations=%ld objective=%s\n", st.converged ? "yes" : "no",
              st.step_count, dsse::format_sci(st.last_objective).c_str());
  std::printf("%-5s %-6s %14s %14s %14s\n", "bus", "phase", "p_pu", "q_pu", "v_mag_pu");
  for (int i = 0; i < model.n(); ++i) {
    dsse::NodeRef nr = model.node_at(i);
    std::printf("%-5d %-6c %14s %14s %14s\n", nr.bus_id, dsse::phase_letter(nr.phase),
                dsse::format_sci(st.z.p(i)).c_str(), dsse::format_sci(st.z.q(i)).c_str(),
                dsse::format_sci(st.v_mag(i)).c_str());
  }
  return 0;
}

int cmd_gen_feeder(const std::string& tmpl, const std::string& out_path) {
  const std::string& text = dsse::feeder_template_json(tmpl);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << text << '\n';
  if (!out) throw std::runtime_error("write failure: " + out_path);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_verify_bound(const std::string& scenario_path, int seeds, int steps, int trailing,
                     double mt_frac, double eta_scale) {
  dsse::ScenarioConfig cfg = dsse::load_scenario_file(scenario_path);
  dsse::BoundHarnessOptions opts;
  opts.seeds = seeds;
  opts.steps = steps;
  opts.trailing = trailing;
  opts.mt_frac = mt_frac;
  opts.eta_scale = eta_scale;
  dsse::BoundHarnessResult res = dsse::run_bound_harness(cfg, opts);

  std::printf("rows=%d m_t=%d (m_t/m = %.3f)\n", res.rows, res.m_t,
              static_cast<double>(res.m_t) / res.rows);
  std::printf("measured constants: tau1=%s sigma_f2=%s delta1=%s delta_z=%s eta=%s\n",
              dsse::format_sci(res.params.tau1).c_str(),
              dsse::format_sci(res.params.sigma_f2).c_str(),
              dsse::format_sci(res.params.delta1).c_str(),
              dsse::format_sci(res.params.delta_z).c_str(),
              dsse::format_sci(res.params.eta).c_str());
  std::printf("bound=%s empirical_mse=%s mse_at_half_eta=%s\n",
              dsse::format_sci(res.bound).c_str(), dsse::format_sci(res.mse).c_str(),
              dsse::format_sci(res.mse_half_eta).c_str());
  std::printf("bound %s, monotonicity %s\n", res.bound_holds ? "holds" : "VIOLATED",
              res.monotone ? "holds" : "VIOLATED");
  return res.bound_holds ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online distribution system state estimation simulator"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an online estimation scenario");
  std::string scenario_path, out_dir = "out";
  long seed_override = 0;
  bool log_states = false, dump_batches = false;
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out-dir", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_flag("--log-states", log_states, "also write per-step state estimates");
  run->add_flag("--dump-batches", dump_batches, "also write the synthesized measurement batches");

  // powerflow
  auto* pf = app.add_subcommand("powerflow", "solve a multiphase power flow");
  std::string feeder_path, injections_path;
  double pf_tol = 1e-10;
  int pf_max_iter = 100;
  pf->add_option("--feeder", feeder_path, "feeder JSON file")->required();
  pf->add_option("--injections", injections_path, "injections JSON file (default: no load)");
  pf->add_option("--tol", pf_tol, "power mismatch tolerance (pu)");
  pf->add_option("--max-iter", pf_max_iter, "iteration cap");

  // estimate-batch
  auto* eb = app.add_subcommand("estimate-batch", "one-shot batch estimation");
  std::string eb_feeder, eb_meas, eb_algorithm = "gn";
  long eb_t = 0;
  double eb_tol = 1e-8;
  int eb_max_iter = 100;
  eb->add_option("--feeder", eb_feeder, "feeder JSON file")->required();
  eb->add_option("--measurements", eb_meas, "measurements CSV (t,meter_id,kind,node,value,sigma)")
      ->required();
  eb->add_option("--algorithm", eb_algorithm, "gn or go");
  auto* eb_t_opt = eb->add_option("--t", eb_t, "batch timestamp to estimate");
  eb->add_option("--tol", eb_tol, "convergence tolerance");
  eb->add_option("--max-iter", eb_max_iter, "iteration cap");

  // gen-feeder
  auto* gf = app.add_subcommand("gen-feeder", "emit an embedded feeder document");
  std::string gf_template, gf_out;
  gf->add_option("--template", gf_template, "2bus, 4bus or 13node")->required();
  gf->add_option("--out", gf_out, "output path")->required();

  // verify-bound
  auto* vb = app.add_subcommand("verify-bound", "empirical steady-state bound check");
  std::string vb_scenario;
  int vb_seeds = 100, vb_steps = 10000, vb_trailing = 2000;
  double vb_mt_frac = 0.2, vb_eta_scale = 1.0;
  vb->add_option("--scenario", vb_scenario, "scenario JSON file")->required();
  vb->add_option("--seeds", vb_seeds, "number of seeds");
  vb->add_option("--steps", vb_steps, "steps per seed");
  vb->add_option("--trailing", vb_trailing, "trailing steps entering the MSE");
  vb->add_option("--mt-frac", vb_mt_frac, "arrival subset fraction");
  vb->add_option("--eta-scale", vb_eta_scale, "stepsize scale factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (*run)
      return cmd_run(scenario_path, out_dir, seed_override, seed_opt->count() > 0,
                     log_states, dump_batches);
    if (*pf) return cmd_powerflow(feeder_path, injections_path, pf_tol, pf_max_iter);
    if (*eb)
      return cmd_estimate_batch(eb_feeder, eb_meas, eb_algorithm, eb_t,
                                eb_t_opt->count() > 0, eb_tol, eb_max_iter);
    if (*gf) return cmd_gen_feeder(gf_template, gf_out);
    if (*vb)
      return cmd_verify_bound(vb_scenario, vb_seeds, vb_steps, vb_trailing, vb_mt_frac,
                              vb_eta_scale);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
