#pragma once

#include "dsse/scenario.hpp"

namespace dsse {

/// Evaluation metrics per estimator, voltage magnitudes against truth.
struct MetricsSummary {
  std::vector<std::string> estimator_names;
  std::vector<double> avg_step_time_s;
  std::vector<double> avg_error_per_node_pu;        // mean over t and nodes of |v_est - v|
  std::vector<double> avg_max_error_per_sample_pu;  // mean over t of max over nodes
  std::vector<std::vector<double>> running_avg_error;  // [estimator][t], cumulative mean
  std::vector<std::vector<double>> instant_error;      // [estimator][t], mean over nodes
};

/// Throws std::invalid_argument on an empty trace.
MetricsSummary summarize(const RunTrace& trace);

/// Columns: t, node, v_true, then v_est_<name> per estimator. Values are
/// written in scientific notation with 6 significant digits.
void write_trace_csv(const RunTrace& trace, const std::string& path);

/// One row per estimator: estimator, avg_step_time_s, avg_error_per_node_pu,
/// avg_max_error_per_sample_pu.
void write_summary_csv(const MetricsSummary& summary, const std::string& path);

/// Columns: t, err_<name> and running_avg_err_<name> per estimator.
void write_running_error_csv(const MetricsSummary& summary,
                             const std::vector<long>& t, const std::string& path);

/// Optional state log: t, coord, z_<name> per estimator.
void write_states_csv(const RunTrace& trace, const std::string& path);

/// Reads back a trace CSV written by write_trace_csv (to printed precision).
RunTrace read_trace_csv(const std::string& path);

/// Formats a double in scientific notation with 6 significant digits.
std::string format_sci(double v);

}  // namespace dsse
