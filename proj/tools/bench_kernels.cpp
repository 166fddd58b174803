// SPDX-License-Identifier: Apache-2.0
//
// Compares the serial reference implementations of the hot kernels against
// their OpenMP versions: angle-grid scans (DML/SML), Monte Carlo trial
// loops, and mini-batch gradient accumulation. The two paths must agree
// bit-for-bit; this tool reports wall-clock and speedup.

#include <chrono>
#include <cstdio>
#include <omp.h>
#include <vector>

#include "aod/bench/experiments.hpp"
#include "aod/crlb.hpp"
#include "aod/ml_estimators.hpp"
#include "aod/neural/training.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Row {
  const char* name;
  double serial_s;
  double parallel_s;
  bool identical;
};

void print_row(const Row& row) {
  std::printf("%-28s %12.4f s %12.4f s %9.2fx   %s\n", row.name, row.serial_s, row.parallel_s,
              row.serial_s / row.parallel_s, row.identical ? "bitwise equal" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("OpenMP max threads: %d\n\n", omp_get_max_threads());
  std::printf("%-28s %14s %14s %10s   %s\n", "kernel", "serial", "openmp", "speedup",
              "serial vs openmp result");

  aod::ArrayGeometry geometry;  // M = 8, d = lambda/2, 28 GHz
  aod::Rng rng(42);

  // Shared Fig. 2-style scenario.
  aod::Scenario scenario;
  scenario.theta_rad = aod::deg2rad(23.4);
  scenario.range_m = 32.1;
  scenario.channel_gain_xi =
      aod::channel_gain(32.1, 1.0, 3.0, geometry.carrier_freq_hz);
  scenario.noise_var_w = aod::noise_variance_watts(-165.0, 1.2e5);
  scenario.tx_power_w = aod::dbm_to_watts(15.0);

  Eigen::MatrixXd phases(6, geometry.num_antennas);
  for (int l = 0; l < 6; ++l)
    for (int m = 0; m < geometry.num_antennas; ++m) phases(l, m) = rng.uniform(-1.0, 1.0);
  aod::PilotSchedule schedule;
  schedule.beamformers = aod::make_beamformers(scenario.tx_power_w, geometry.num_antennas, phases);
  schedule.block_symbols.resize(4);
  for (int q = 0; q < 4; ++q) schedule.block_symbols(q) = rng.cnormal();
  aod::Rng sim_rng = rng.substream(7);
  const aod::ObservationBatch batch =
      aod::simulate_observations(geometry, scenario, schedule, sim_rng);

  aod::GridConfig grid;

  {  // DML grid scan
    const int reps = 400;
    aod::DmlFit fit_serial, fit_parallel;
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      fit_serial = aod::dml_estimate(geometry, schedule, batch, grid, aod::Execution::kSerial);
    const double ts = seconds_since(t0);
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      fit_parallel = aod::dml_estimate(geometry, schedule, batch, grid, aod::Execution::kParallel);
    const double tp = seconds_since(t0);
    print_row({"dml grid scan (400 est.)", ts, tp,
               fit_serial.theta_hat_rad == fit_parallel.theta_hat_rad &&
                   fit_serial.residual == fit_parallel.residual});
  }

  {  // SML grid scan
    const int reps = 40;
    aod::SmlFit fit_serial, fit_parallel;
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      fit_serial = aod::sml_estimate(geometry, schedule.beamformers, batch, grid, 3,
                                     aod::Execution::kSerial);
    const double ts = seconds_since(t0);
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      fit_parallel = aod::sml_estimate(geometry, schedule.beamformers, batch, grid, 3,
                                       aod::Execution::kParallel);
    const double tp = seconds_since(t0);
    print_row({"sml grid scan (40 est.)", ts, tp,
               fit_serial.theta_hat_rad == fit_parallel.theta_hat_rad &&
                   fit_serial.nll == fit_parallel.nll});
  }

  {  // Monte Carlo trial loop through the sweep engine
    aod::bench::ExperimentConfig cfg;
    cfg.kind = aod::bench::ExperimentKind::kMaeVsPower;
    cfg.sweep = {15.0};
    cfg.trials = 200;
    cfg.methods = {"dml", "dft", "music", "esprit"};
    auto t0 = Clock::now();
    const auto res_serial = aod::bench::run_mae_vs_power(cfg, aod::Execution::kSerial);
    const double ts = seconds_since(t0);
    t0 = Clock::now();
    const auto res_parallel = aod::bench::run_mae_vs_power(cfg, aod::Execution::kParallel);
    const double tp = seconds_since(t0);
    bool same = res_serial.cells.size() == res_parallel.cells.size();
    for (std::size_t i = 0; same && i < res_serial.cells.size(); ++i)
      same = res_serial.cells[i].errors_deg == res_parallel.cells[i].errors_deg;
    print_row({"monte carlo trials (200)", ts, tp, same});
  }

  {  // Mini-batch gradient accumulation
    aod::DatasetSpec spec;
    spec.num_thetas = 8;
    spec.num_ranges = 8;
    spec.num_beamformer_sets = 2;
    spec.num_symbol_sets = 2;
    spec.num_noise = 1;
    aod::Rng ds_rng(7);
    const aod::Dataset dataset = aod::generate_dataset(spec, geometry, ds_rng);
    const aod::NetConfig net_cfg = aod::default_net_config(dataset);
    const aod::CompactNet net(net_cfg);
    aod::Rng init_rng(3);
    const std::vector<double> params = net.init_params(init_rng);
    const aod::InputScaling scaling = aod::compute_input_scaling(dataset);
    const aod::TrainContext context =
        aod::TrainContext::build(dataset, spec.mode, scaling);

    const int reps = 20;
    aod::BatchGradient g_serial, g_parallel;
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      g_serial = aod::batch_loss_and_grad(net, params, dataset, context, dataset.train_indices,
                                          16, aod::Execution::kSerial);
    const double ts = seconds_since(t0);
    t0 = Clock::now();
    for (int r = 0; r < reps; ++r)
      g_parallel = aod::batch_loss_and_grad(net, params, dataset, context, dataset.train_indices,
                                            16, aod::Execution::kParallel);
    const double tp = seconds_since(t0);
    print_row({"batch gradient (20 reps)", ts, tp,
               g_serial.mean_loss == g_parallel.mean_loss && g_serial.grad == g_parallel.grad});
  }

  return 0;
}
