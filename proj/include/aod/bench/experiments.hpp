// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_BENCH_EXPERIMENTS_HPP
#define AOD_BENCH_EXPERIMENTS_HPP

#include <optional>
#include <string>
#include <vector>

#include "aod/bench/config.hpp"
#include "aod/neural/model_io.hpp"

namespace aod::bench {

/// Runtime failure while executing an experiment (CLI exit code 3):
/// missing model files, non-finite losses, aborted training.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One (method, sweep value) cell: per-trial absolute errors in degrees
/// (empty for the scrlb oracle) plus aggregate bound/runtime values.
struct SweepCell {
  std::string method;
  double sweep_value = 0.0;
  int trials = 0;
  std::vector<double> errors_deg;            // ordered by trial index
  std::optional<double> scrlb_deg;           // scrlb method only
  double mean_runtime_s = 0.0;

  double mae_deg() const;
  double rmse_deg() const;
  /// Standard error of the MAE estimate (sample std of |e| over sqrt(n)).
  double mae_stderr_deg() const;
};

struct ExperimentResult {
  std::string sweep_param;  // "p_dbm", "num_slots", "median_of", ...
  std::uint64_t seed = 0;
  std::vector<SweepCell> cells;
};

ExperimentResult run_mae_vs_power(const ExperimentConfig& config,
                                  Execution exec = Execution::kParallel);
ExperimentResult run_mae_vs_slots(const ExperimentConfig& config,
                                  Execution exec = Execution::kParallel);
/// Median-of-k single-estimate wall-clock per method; always serial.
ExperimentResult run_runtime_table(const ExperimentConfig& config);
ExperimentResult run_scrlb_curve(const ExperimentConfig& config,
                                 Execution exec = Execution::kParallel);

struct TrainArtifacts {
  std::string model_path;
  std::string curve_path;
  double test_mae_deg = 0.0;
  double final_train_loss = 0.0;
};

/// Dataset generation + training + model/curve emission.
TrainArtifacts run_train(const ExperimentConfig& config);

/// CSV with the stable schema
/// method,sweep_param,sweep_value,trials,mae_deg,rmse_deg,mean_runtime_s,seed.
/// With include_timing=false the runtime column is left empty so re-runs are
/// byte-identical.
std::string result_to_csv(const ExperimentResult& result, bool include_timing);
void write_csv_file(const ExperimentResult& result, const std::string& path,
                    bool include_timing);

/// SVG line chart (one polyline per method, log-10 y axis) of mae_deg.
std::string result_to_svg(const ExperimentResult& result, const std::string& x_label);
void write_svg_file(const ExperimentResult& result, const std::string& path,
                    const std::string& x_label);

}  // namespace aod::bench

#endif  // AOD_BENCH_EXPERIMENTS_HPP
