#include "dsse/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dsse {

using nlohmann::json;

ProfileGenerator::ProfileGenerator(const FeederModel& model, const ProfileSpec& spec,
                                   Rng rng)
    : model_(model), spec_(spec), rng_(rng) {
  const int L = static_cast<int>(model.load_nodes().size());
  if (spec_.base_p.size() != L)
    throw std::invalid_argument("profile base_p length must equal the load node count");
  if (spec_.base_p.minCoeff() < 0)
    throw std::invalid_argument("profile base_p must be nonnegative");
  if (!(spec_.power_factor > 0.0) || spec_.power_factor > 1.0)
    throw std::invalid_argument("power_factor must be in (0, 1]");
  if (spec_.ar1_rho < 0.0 || spec_.ar1_rho >= 1.0)
    throw std::invalid_argument("ar1_rho must be in [0, 1)");
  if (spec_.volatility < 0.0 || spec_.cloud_sigma < 0.0)
    throw std::invalid_argument("noise levels must be nonnegative");
  if (spec_.pv_fraction < 0.0 || spec_.pv_fraction > 1.0)
    throw std::invalid_argument("pv_fraction must be in [0, 1]");

  tan_phi_ = std::tan(std::acos(spec_.power_factor));

  pv_capacity_ = Vec::Zero(L);
  const int n_pv = static_cast<int>(std::round(spec_.pv_fraction * L));
  if (n_pv > 0) {
    pv_nodes_ = rng_.sample_without_replacement(L, n_pv);
    for (int k : pv_nodes_) pv_capacity_(k) = spec_.pv_capacity_frac * spec_.base_p(k);
  }

  ar1_state_ = Vec(L);
  cloud_state_ = Vec(L);
  for (int k = 0; k < L; ++k) ar1_state_(k) = spec_.volatility * rng_.gaussian();
  for (int k = 0; k < L; ++k) cloud_state_(k) = spec_.cloud_sigma * rng_.gaussian();
}

double ProfileGenerator::diurnal(double hour) const {
  if (spec_.diurnal_flat) return 1.0;
  // smooth daily shape, trough near 04:00, peak near 16:00
  return spec_.diurnal_min_frac +
         (1.0 - spec_.diurnal_min_frac) * 0.5 * (1.0 - std::cos(2.0 * M_PI * (hour - 4.0) / 24.0));
}

double ProfileGenerator::irradiance(double hour) const {
  if (hour <= spec_.sunrise_hour || hour >= spec_.sunset_hour) return 0.0;
  double x = (hour - spec_.sunrise_hour) / (spec_.sunset_hour - spec_.sunrise_hour);
  double s = std::sin(M_PI * x);
  return s * s;
}

InjectionVector ProfileGenerator::step() {
  t_ += 1;
  const double hour = std::fmod(spec_.start_hour + static_cast<double>(t_) / 3600.0, 24.0);
  const double d = diurnal(hour);
  const double irr = irradiance(hour);
  const double rho = spec_.ar1_rho;
  const double ar1_drive = spec_.volatility * std::sqrt(1.0 - rho * rho);
  const double cloud_drive = spec_.cloud_sigma * std::sqrt(1.0 - rho * rho);

  InjectionVector s = InjectionVector::zeros(model_.n());
  const auto& loads = model_.load_nodes();
  for (size_t k = 0; k < loads.size(); ++k) {
    ar1_state_(k) = rho * ar1_state_(k) + ar1_drive * rng_.gaussian();
    cloud_state_(k) = rho * cloud_state_(k) + cloud_drive * rng_.gaussian();
    const double load_part = std::max(0.0, spec_.base_p(k) * d * (1.0 + ar1_state_(k)));
    const double pv_part =
        pv_capacity_(k) * irr * std::max(0.0, 1.0 + cloud_state_(k));
    s.p(loads[k]) = load_part - pv_part;
    s.q(loads[k]) = load_part * tan_phi_;
  }
  return s;
}

InjectionVector ProfileGenerator::nominal(long t) const {
  const double hour = std::fmod(spec_.start_hour + static_cast<double>(t) / 3600.0, 24.0);
  const double d = diurnal(hour);
  const double irr = irradiance(hour);
  InjectionVector s = InjectionVector::zeros(model_.n());
  const auto& loads = model_.load_nodes();
  for (size_t k = 0; k < loads.size(); ++k) {
    const double load_part = spec_.base_p(k) * d;
    s.p(loads[k]) = load_part - pv_capacity_(k) * irr;
    s.q(loads[k]) = load_part * tan_phi_;
  }
  return s;
}

namespace {

ArrivalPolicy parse_arrival(const json& j) {
  std::string policy = j.value("policy", "paper");
  if (policy == "full") return ArrivalPolicy::full();
  if (policy == "paper") return ArrivalPolicy::paper(j.value("k_v", 1), j.value("k_pq", 3));
  if (policy == "uniform") return ArrivalPolicy::uniform(j.at("m_t").get<int>());
  if (policy == "round_robin") return ArrivalPolicy::round_robin(j.at("m_t").get<int>());
  throw std::invalid_argument("unknown arrival policy '" + policy + "'");
}

EstimatorConfig parse_estimator(const json& j) {
  EstimatorConfig cfg;
  cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
  cfg.name = j.value("name", std::string(algorithm_name(cfg.algorithm)));
  if (j.contains("stepsize") && !j.at("stepsize").is_string())
    cfg.stepsize = j.at("stepsize").get<double>();
  else
    cfg.stepsize = 0.0;  // "auto"
  cfg.jacobian_refresh = j.value("jacobian_refresh", 300);
  std::string vr = j.value("exact_voltage_refresh",
                           cfg.algorithm == Algorithm::sgd ? "every_K" : "always");
  if (vr == "always") cfg.voltage_refresh = VoltageRefresh::always;
  else if (vr == "every_K") cfg.voltage_refresh = VoltageRefresh::every_k;
  else throw std::invalid_argument("exact_voltage_refresh must be 'always' or 'every_K'");
  cfg.voltage_refresh_k = j.value("voltage_refresh_k", 50);
  cfg.tol = j.value("tol", cfg.algorithm == Algorithm::gn ? 1e-8 : 1e-6);
  cfg.max_iter = j.value("max_iter", cfg.algorithm == Algorithm::gn ? 50 : 200);
  return cfg;
}

}  // namespace

ScenarioConfig load_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scenario parse failure: ") + e.what());
  }
  try {
    ScenarioConfig cfg;
    cfg.feeder = doc.at("feeder").get<std::string>();
    cfg.horizon_T = doc.value("horizon_T", 3600L);
    if (cfg.horizon_T < 1) throw std::runtime_error("horizon_T must be >= 1");
    cfg.seed = doc.value("seed", 1ULL);

    if (doc.contains("profile")) {
      const json& jp = doc.at("profile");
      if (jp.contains("base_p_pu") && jp.at("base_p_pu").is_array()) {
        cfg.profile_base_scalar = false;
        std::vector<double> v = jp.at("base_p_pu").get<std::vector<double>>();
        cfg.profile.base_p = Eigen::Map<Vec>(v.data(), v.size());
      } else {
        cfg.profile_base_scalar = true;
        cfg.profile_base_value = jp.value("base_p_pu", 0.06);
      }
      cfg.profile.power_factor = jp.value("power_factor", 0.95);
      if (jp.contains("diurnal")) {
        cfg.profile.diurnal_flat = jp.at("diurnal").value("kind", "bell") == "flat";
        cfg.profile.diurnal_min_frac = jp.at("diurnal").value("min_frac", 0.6);
      }
      cfg.profile.volatility = jp.value("volatility", 0.02);
      cfg.profile.ar1_rho = jp.value("ar1_rho", 0.99);
      if (jp.contains("pv")) {
        const json& jpv = jp.at("pv");
        cfg.profile.pv_fraction = jpv.value("fraction", 0.0);
        cfg.profile.pv_capacity_frac = jpv.value("capacity_frac", 0.8);
        cfg.profile.cloud_sigma = jpv.value("cloud_sigma", 0.1);
      }
      cfg.profile.start_hour = jp.value("start_hour", 6.0);
      cfg.profile.sunrise_hour = jp.value("sunrise_hour", 6.5);
      cfg.profile.sunset_hour = jp.value("sunset_hour", 19.5);
    }

    if (doc.contains("meters")) {
      const json& jm = doc.at("meters");
      cfg.placement.voltage_fraction = jm.value("voltage_fraction", 0.12);
      cfg.placement.voltage_sigma_pu = jm.value("voltage_sigma_pu", 0.01);
      cfg.placement.pseudo_rel_sigma = jm.value("pseudo_rel_sigma", 0.5);
    }
    if (doc.contains("arrival")) cfg.arrival = parse_arrival(doc.at("arrival"));
    cfg.pseudo_refresh = doc.value("pseudo_refresh", 0L);

    if (!doc.contains("estimators") || doc.at("estimators").empty())
      throw std::runtime_error("scenario must list at least one estimator");
    std::set<std::string> names;
    for (const json& je : doc.at("estimators")) {
      EstimatorConfig e = parse_estimator(je);
      if (!names.insert(e.name).second)
        throw std::runtime_error("duplicate estimator name '" + e.name + "'");
      cfg.estimators.push_back(std::move(e));
    }
    return cfg;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scenario document invalid: ") + e.what());
  }
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

namespace {

bool is_template_name(const std::string& s) {
  return s == "2bus" || s == "4bus" || s == "13node";
}

}  // namespace

ScenarioEngine::ScenarioEngine(ScenarioConfig config, bool log_states)
    : config_(std::move(config)),
      log_states_(log_states),
      rng_noise_(substream_seed(config_.seed, 3)),
      rng_arrival_(substream_seed(config_.seed, 4)) {
  model_ = std::make_unique<FeederModel>(is_template_name(config_.feeder)
                                             ? load_feeder_template(config_.feeder)
                                             : load_feeder_file(config_.feeder));

  const int L = static_cast<int>(model_->load_nodes().size());
  ProfileSpec spec = config_.profile;
  if (config_.profile_base_scalar) spec.base_p = Vec::Constant(L, config_.profile_base_value);
  profile_ = std::make_unique<ProfileGenerator>(*model_, spec,
                                                Rng(substream_seed(config_.seed, 1)));
  config_.profile = spec;

  InjectionVector nominal = profile_->nominal(1);
  Rng rng_placement(substream_seed(config_.seed, 2));
  meters_ = build_meter_set(*model_, config_.placement, nominal, rng_placement);

  // historical pseudo values: one draw per pseudo meter around the nominal profile
  pseudo_values_ = Vec::Zero(meters_.m());
  for (const Meter& mt : meters_.meters) {
    if (mt.kind == MeterKind::pseudo_p)
      pseudo_values_(mt.id) = nominal.p(mt.node) + mt.sigma * rng_noise_.gaussian();
    else if (mt.kind == MeterKind::pseudo_q)
      pseudo_values_(mt.id) = nominal.q(mt.node) + mt.sigma * rng_noise_.gaussian();
  }

  init_estimators();

  trace_.n = model_->n();
  for (const EstimatorConfig& e : est_configs_) trace_.estimator_names.push_back(e.name);
  trace_.v_est.resize(est_configs_.size());
  trace_.step_seconds.resize(est_configs_.size());
  trace_.z_est.resize(est_configs_.size());
  truth_warm_start_ = model_->no_load_voltage();
}

void ScenarioEngine::init_estimators() {
  est_configs_ = config_.estimators;

  InjectionVector z0 = InjectionVector::zeros(model_->n());
  for (const Meter& mt : meters_.meters) {
    if (mt.kind == MeterKind::pseudo_p) z0.p(mt.node) = pseudo_values_(mt.id);
    else if (mt.kind == MeterKind::pseudo_q) z0.q(mt.node) = pseudo_values_(mt.id);
  }

  for (EstimatorConfig& cfg : est_configs_) {
    EstimatorState st = make_estimator_state(*model_, meters_, z0, cfg, config_.jacobian,
                                             config_.powerflow);
    cfg.stepsize = st.stepsize;  // keep the resolved stepsize constant across the run
    est_states_.push_back(std::move(st));
    est_failed_.push_back(false);
  }
}

MeasurementBatch ScenarioEngine::make_batch(const InjectionVector& truth,
                                            const VoltageSolution& sol, long t) {
  const bool refresh_pseudo =
      config_.pseudo_refresh > 0 && t % config_.pseudo_refresh == 0;
  InjectionVector nominal_t;
  if (refresh_pseudo) nominal_t = profile_->nominal(t);

  MeasurementBatch batch;
  batch.t = t;
  batch.meter_ids = meters_.all_ids();
  batch.values = Vec::Zero(meters_.m());
  for (const Meter& mt : meters_.meters) {
    switch (mt.kind) {
      case MeterKind::voltage_mag:
        batch.values(mt.id) = sol.v_mag(mt.node) + mt.sigma * rng_noise_.gaussian();
        break;
      case MeterKind::pseudo_p:
        if (refresh_pseudo)
          pseudo_values_(mt.id) = nominal_t.p(mt.node) + mt.sigma * rng_noise_.gaussian();
        batch.values(mt.id) = pseudo_values_(mt.id);
        break;
      case MeterKind::pseudo_q:
        if (refresh_pseudo)
          pseudo_values_(mt.id) = nominal_t.q(mt.node) + mt.sigma * rng_noise_.gaussian();
        batch.values(mt.id) = pseudo_values_(mt.id);
        break;
      case MeterKind::virtual_p:
      case MeterKind::virtual_q:
        batch.values(mt.id) = 0.0;
        break;
    }
  }
  return batch;
}

void ScenarioEngine::step() {
  using clock = std::chrono::steady_clock;
  t_ += 1;

  InjectionVector truth = profile_->step();
  auto sol = try_solve_power_flow(*model_, truth, config_.powerflow, &truth_warm_start_);
  if (!sol)
    throw PowerFlowError("truth power flow failed at t = " + std::to_string(t_));
  truth_warm_start_ = sol->v_complex;

  last_batch_ = make_batch(truth, *sol, t_);
  last_subset_ = arrival_subset(meters_, config_.arrival, t_, rng_arrival_);

  trace_.t.push_back(t_);
  trace_.v_true.push_back(sol->v_mag);
  trace_.m_t.push_back(static_cast<int>(last_subset_.size()));

  for (size_t i = 0; i < est_configs_.size(); ++i) {
    const EstimatorConfig& cfg = est_configs_[i];
    auto t0 = clock::now();
    try {
      switch (cfg.algorithm) {
        case Algorithm::gn:
          est_states_[i] = gauss_newton_solve(*model_, meters_, last_batch_,
                                              est_states_[i].z, cfg.tol, cfg.max_iter,
                                              config_.jacobian, config_.powerflow);
          break;
        case Algorithm::go:
          est_states_[i] =
              converged_gd_solve(*model_, meters_, last_batch_, est_states_[i].z, cfg.tol,
                                 cfg.max_iter, cfg, config_.jacobian, config_.powerflow);
          break;
        case Algorithm::gd:
          online_gd_step(est_states_[i], last_batch_, meters_, *model_, cfg,
                         config_.jacobian, config_.powerflow);
          break;
        case Algorithm::sgd:
          online_sgd_step(est_states_[i], restrict_batch(last_batch_, last_subset_),
                          meters_, *model_, cfg, config_.jacobian, config_.powerflow);
          break;
      }
      est_failed_[i] = false;
    } catch (const std::exception&) {
      est_failed_[i] = true;  // keep the previous estimate for this step
    }
    double dt = std::chrono::duration<double>(clock::now() - t0).count();
    trace_.step_seconds[i].push_back(dt);
    trace_.v_est[i].push_back(est_states_[i].v_mag);
    if (log_states_) trace_.z_est[i].push_back(est_states_[i].z.stacked());
  }
}

RunTrace run_online(const ScenarioConfig& config, bool log_states) {
  ScenarioEngine engine(config, log_states);
  for (long t = 0; t < config.horizon_T; ++t) engine.step();
  return engine.trace();
}

}  // namespace dsse
