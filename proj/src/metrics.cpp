#include "dsse/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dsse {

std::string format_sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.5e", v);
  return buf;
}

MetricsSummary summarize(const RunTrace& trace) {
  if (trace.T() == 0) throw std::invalid_argument("empty trace");
  const long T = trace.T();
  const size_t E = trace.estimator_names.size();

  MetricsSummary s;
  s.estimator_names = trace.estimator_names;
  s.avg_step_time_s.resize(E);
  s.avg_error_per_node_pu.resize(E);
  s.avg_max_error_per_sample_pu.resize(E);
  s.running_avg_error.resize(E);
  s.instant_error.resize(E);

  for (size_t e = 0; e < E; ++e) {
    double time_sum = 0.0;
    double err_sum = 0.0;
    double max_sum = 0.0;
    double cum = 0.0;
    s.running_avg_error[e].resize(T);
    s.instant_error[e].resize(T);
    for (long t = 0; t < T; ++t) {
      time_sum += trace.step_seconds[e][t];
      Vec err = (trace.v_est[e][t] - trace.v_true[t]).cwiseAbs();
      double mean_err = err.mean();
      err_sum += mean_err;
      max_sum += err.maxCoeff();
      cum += mean_err;
      s.instant_error[e][t] = mean_err;
      s.running_avg_error[e][t] = cum / static_cast<double>(t + 1);
    }
    s.avg_step_time_s[e] = time_sum / static_cast<double>(T);
    s.avg_error_per_node_pu[e] = err_sum / static_cast<double>(T);
    s.avg_max_error_per_sample_pu[e] = max_sum / static_cast<double>(T);
  }
  return s;
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,node,v_true";
  for (const std::string& name : trace.estimator_names) out << ",v_est_" << name;
  out << '\n';
  for (long t = 0; t < trace.T(); ++t) {
    for (int node = 0; node < trace.n; ++node) {
      out << trace.t[t] << ',' << node << ',' << format_sci(trace.v_true[t](node));
      for (size_t e = 0; e < trace.estimator_names.size(); ++e)
        out << ',' << format_sci(trace.v_est[e][t](node));
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

void write_summary_csv(const MetricsSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "estimator,avg_step_time_s,avg_error_per_node_pu,avg_max_error_per_sample_pu\n";
  for (size_t e = 0; e < summary.estimator_names.size(); ++e) {
    out << summary.estimator_names[e] << ',' << format_sci(summary.avg_step_time_s[e])
        << ',' << format_sci(summary.avg_error_per_node_pu[e]) << ','
        << format_sci(summary.avg_max_error_per_sample_pu[e]) << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

void write_running_error_csv(const MetricsSummary& summary, const std::vector<long>& t,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t";
  for (const std::string& name : summary.estimator_names)
    out << ",err_" << name << ",running_avg_err_" << name;
  out << '\n';
  for (size_t k = 0; k < t.size(); ++k) {
    out << t[k];
    for (size_t e = 0; e < summary.estimator_names.size(); ++e)
      out << ',' << format_sci(summary.instant_error[e][k]) << ','
          << format_sci(summary.running_avg_error[e][k]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

void write_states_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "t,coord";
  for (const std::string& name : trace.estimator_names) out << ",z_" << name;
  out << '\n';
  for (long t = 0; t < trace.T(); ++t) {
    if (trace.z_est.empty() || trace.z_est[0].empty()) break;
    const int d = static_cast<int>(trace.z_est[0][t].size());
    for (int c = 0; c < d; ++c) {
      out << trace.t[t] << ',' << c;
      for (size_t e = 0; e < trace.estimator_names.size(); ++e)
        out << ',' << format_sci(trace.z_est[e][t](c));
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

RunTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");

  RunTrace trace;
  {
    std::stringstream ss(line);
    std::string col;
    int k = 0;
    while (std::getline(ss, col, ',')) {
      if (k >= 3) {
        if (col.rfind("v_est_", 0) != 0)
          throw std::runtime_error(path + ": unexpected column '" + col + "'");
        trace.estimator_names.push_back(col.substr(6));
      }
      ++k;
    }
    if (k < 3) throw std::runtime_error(path + ": expected header t,node,v_true,...");
  }
  trace.v_est.resize(trace.estimator_names.size());
  trace.step_seconds.resize(trace.estimator_names.size());
  trace.z_est.resize(trace.estimator_names.size());

  std::vector<double> vt;
  std::vector<std::vector<double>> ve(trace.estimator_names.size());
  long cur_t = -1;
  auto flush_row = [&]() {
    if (vt.empty()) return;
    trace.t.push_back(cur_t);
    trace.v_true.push_back(Eigen::Map<Vec>(vt.data(), vt.size()));
    for (size_t e = 0; e < ve.size(); ++e) {
      trace.v_est[e].push_back(Eigen::Map<Vec>(ve[e].data(), ve[e].size()));
      trace.step_seconds[e].push_back(0.0);
    }
    vt.clear();
    for (auto& v : ve) v.clear();
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    long t = std::stol(f);
    std::getline(ss, f, ',');  // node index; rows are ordered
    if (t != cur_t) {
      flush_row();
      cur_t = t;
    }
    std::getline(ss, f, ',');
    vt.push_back(std::stod(f));
    for (size_t e = 0; e < ve.size(); ++e) {
      std::getline(ss, f, ',');
      ve[e].push_back(std::stod(f));
    }
  }
  flush_row();
  trace.n = trace.v_true.empty() ? 0 : static_cast<int>(trace.v_true[0].size());
  return trace;
}

}  // namespace dsse
