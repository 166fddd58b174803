// SPDX-License-Identifier: Apache-2.0
#include "aod/bench/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "aod/baselines.hpp"
#include "aod/crlb.hpp"
#include "aod/ml_estimators.hpp"
#include "aod/neural/training.hpp"

namespace aod::bench {

double SweepCell::mae_deg() const {
  if (scrlb_deg.has_value()) return *scrlb_deg;
  double acc = 0.0;
  for (double e : errors_deg) acc += e;
  return errors_deg.empty() ? 0.0 : acc / static_cast<double>(errors_deg.size());
}

double SweepCell::rmse_deg() const {
  if (scrlb_deg.has_value()) return *scrlb_deg;
  double acc = 0.0;
  for (double e : errors_deg) acc += e * e;
  return errors_deg.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(errors_deg.size()));
}

double SweepCell::mae_stderr_deg() const {
  const std::size_t n = errors_deg.size();
  if (n < 2) return 0.0;
  const double mean = mae_deg();
  double var = 0.0;
  for (double e : errors_deg) var += (e - mean) * (e - mean);
  var /= static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n));
}

namespace {

using Clock = std::chrono::steady_clock;

struct LoadedModel {
  ModelFile file;
  CompactNet net;

  explicit LoadedModel(ModelFile f) : file(std::move(f)), net(file.net) {}
};

struct TrialData {
  Scenario scenario;
  PilotSchedule schedule;
  ObservationBatch batch;
  Rng uplink_rng;
};

TrialData make_trial(const ExperimentConfig& config, const ArrayGeometry& geometry, int num_slots,
                     double tx_power_w, std::uint64_t trial_index) {
  Rng trial_rng(derive_seed(config.seed, trial_index));

  Rng phase_rng = trial_rng.substream(1);
  Eigen::MatrixXd phases(num_slots, geometry.num_antennas);
  for (int l = 0; l < num_slots; ++l)
    for (int m = 0; m < geometry.num_antennas; ++m) phases(l, m) = phase_rng.uniform(-1.0, 1.0);

  TrialData trial{Scenario{}, PilotSchedule{}, ObservationBatch{}, trial_rng.substream(5)};
  trial.schedule.beamformers = make_beamformers(tx_power_w, geometry.num_antennas, phases);
  Rng symbol_rng = trial_rng.substream(2);
  trial.schedule.block_symbols.resize(config.num_blocks);
  for (int q = 0; q < config.num_blocks; ++q) trial.schedule.block_symbols(q) = symbol_rng.cnormal();

  Rng scene_rng = trial_rng.substream(3);
  trial.scenario.theta_rad =
      config.theta_random ? scene_rng.uniform(0.0, kPi / 2.0) : deg2rad(config.theta_deg);
  trial.scenario.range_m =
      config.range_random ? scene_rng.uniform(config.range_lo_m, config.range_hi_m) : config.range_m;
  trial.scenario.ref_range_m = config.ref_range_m;
  trial.scenario.pathloss_exp = config.pathloss_exp;
  trial.scenario.channel_gain_xi =
      Complex(channel_gain(trial.scenario.range_m, config.ref_range_m, config.pathloss_exp,
                           config.carrier_freq_hz),
              0.0);
  trial.scenario.noise_var_w =
      noise_variance_watts(config.noise_psd_dbm_per_hz, config.bandwidth_hz);
  trial.scenario.tx_power_w = tx_power_w;

  Rng noise_rng = trial_rng.substream(4);
  trial.batch = simulate_observations(geometry, trial.scenario, trial.schedule, noise_rng);
  return trial;
}

/// The uplink dual receives through the same channel, so the fair
/// per-snapshot signal power is |xi|^2 P.
UplinkSnapshots draw_uplink(const ExperimentConfig& config, const TrialData& trial, int num_slots,
                            Rng& rng) {
  const double eq_power =
      std::norm(trial.scenario.channel_gain_xi) * trial.scenario.tx_power_w;
  return uplink_dual_simulate(trial.scenario.theta_rad, num_slots, config.num_blocks, eq_power,
                              trial.scenario.noise_var_w, config.spacing_over_wavelength, rng);
}

struct MethodEngine {
  const ExperimentConfig& config;
  ArrayGeometry geometry;
  GridConfig grid;
  std::optional<LoadedModel> model_dml;
  std::optional<LoadedModel> model_sml;

  explicit MethodEngine(const ExperimentConfig& cfg) : config(cfg) {
    geometry.num_antennas = cfg.num_antennas;
    geometry.spacing_over_wavelength = cfg.spacing_over_wavelength;
    geometry.carrier_freq_hz = cfg.carrier_freq_hz;
    grid.num_points = cfg.grid_points;
    grid.refine_tol_rad = cfg.refine_tol_rad;
    const bool wants = [&](const std::string& name) {
      return std::find(cfg.methods.begin(), cfg.methods.end(), name) != cfg.methods.end();
    }("nn_dml");
    if (wants) model_dml.emplace(load_model_checked(cfg.model_dml, PilotMode::kDml));
    const bool wants_sml =
        std::find(cfg.methods.begin(), cfg.methods.end(), "nn_sml") != cfg.methods.end();
    if (wants_sml) model_sml.emplace(load_model_checked(cfg.model_sml, PilotMode::kSml));
  }

  ModelFile load_model_checked(const std::string& path, PilotMode mode) const {
    if (path.empty())
      throw RuntimeFailure("neural method requested but no model file configured");
    ModelFile file;
    try {
      file = load_model(path);
    } catch (const std::exception& e) {
      throw RuntimeFailure(std::string("cannot load model: ") + e.what());
    }
    if (file.mode != mode) throw RuntimeFailure("model file mode does not match method: " + path);
    return file;
  }

  /// Point estimate for one method on one trial; fills seconds.
  double estimate(const std::string& method, const TrialData& trial, int num_slots,
                  std::optional<UplinkSnapshots>& uplink_cache, double* seconds) const {
    const auto t0 = Clock::now();
    double theta_hat = 0.0;
    if (method == "dml") {
      theta_hat =
          dml_estimate(geometry, trial.schedule, trial.batch, grid, Execution::kSerial)
              .theta_hat_rad;
    } else if (method == "sml") {
      theta_hat = sml_estimate(geometry, trial.schedule.beamformers, trial.batch, grid,
                               config.sml_inner_iters, Execution::kSerial)
                      .theta_hat_rad;
    } else if (method == "dft") {
      theta_hat = dft_estimate(geometry, trial.schedule, trial.batch, config.n_fft);
    } else if (method == "music") {
      theta_hat = music_estimate(*uplink_cache, config.spacing_over_wavelength, config.n_music,
                                 grid.refine_tol_rad);
    } else if (method == "esprit") {
      theta_hat = esprit_estimate(*uplink_cache, config.spacing_over_wavelength);
    } else if (method == "nn_dml" || method == "nn_sml") {
      const LoadedModel& lm = method == "nn_dml" ? *model_dml : *model_sml;
      if (lm.file.num_antennas != geometry.num_antennas || lm.file.num_slots != num_slots ||
          lm.file.num_blocks != config.num_blocks)
        throw RuntimeFailure("model file dimensions do not match experiment point: " + method);
      theta_hat = nn_estimate_theta(lm.net, lm.file.params, lm.file.scaling, trial.schedule,
                                    trial.batch, lm.file.mode);
    } else {
      throw RuntimeFailure("unknown method in engine: " + method);
    }
    *seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return theta_hat;
  }

  bool needs_uplink(const std::string& method) const {
    return method == "music" || method == "esprit";
  }
};

ExperimentResult run_sweep(const ExperimentConfig& config, const std::string& sweep_param,
                           bool slots_sweep, Execution exec) {
  config.validate();
  MethodEngine engine(config);

  ExperimentResult result;
  result.sweep_param = sweep_param;
  result.seed = config.seed;

  for (double sweep_value : config.sweep) {
    const int num_slots = slots_sweep ? static_cast<int>(sweep_value) : config.num_slots;
    const double tx_power_w = dbm_to_watts(slots_sweep ? config.p_dbm : sweep_value);
    const int trials = config.trials;
    const std::size_t n_methods = config.methods.size();

    std::vector<std::vector<double>> errors(n_methods,
                                            std::vector<double>(static_cast<std::size_t>(trials)));
    std::vector<std::vector<double>> seconds(
        n_methods, std::vector<double>(static_cast<std::size_t>(trials)));
    std::vector<double> scrlb_values(static_cast<std::size_t>(trials),
                                     std::numeric_limits<double>::quiet_NaN());
    std::string failure;

#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
    for (int t = 0; t < trials; ++t) {
      try {
        const TrialData trial = make_trial(config, engine.geometry, num_slots, tx_power_w,
                                           static_cast<std::uint64_t>(t));
        std::optional<UplinkSnapshots> uplink;
        Rng uplink_rng = trial.uplink_rng;
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
          const std::string& method = config.methods[mi];
          if (method == "scrlb") {
            const auto t0 = Clock::now();
            double value = std::numeric_limits<double>::quiet_NaN();
            try {
              value = scrlb_theta_degrees(engine.geometry, trial.scenario, trial.schedule);
            } catch (const SingularFimError&) {
              // singular points stay NaN and become empty CSV cells
            }
            scrlb_values[static_cast<std::size_t>(t)] = value;
            seconds[mi][static_cast<std::size_t>(t)] =
                std::chrono::duration<double>(Clock::now() - t0).count();
            errors[mi][static_cast<std::size_t>(t)] = 0.0;
            continue;
          }
          if (engine.needs_uplink(method) && !uplink.has_value())
            uplink = draw_uplink(config, trial, num_slots, uplink_rng);
          double secs = 0.0;
          const double theta_hat = engine.estimate(method, trial, num_slots, uplink, &secs);
          errors[mi][static_cast<std::size_t>(t)] =
              rad2deg(std::abs(theta_hat - trial.scenario.theta_rad));
          seconds[mi][static_cast<std::size_t>(t)] = secs;
        }
      } catch (const std::exception& e) {
#pragma omp critical
        if (failure.empty()) failure = e.what();
      }
    }
    if (!failure.empty()) throw RuntimeFailure(failure);

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      SweepCell cell;
      cell.method = config.methods[mi];
      cell.sweep_value = sweep_value;
      cell.trials = trials;
      double time_acc = 0.0;
      for (double s : seconds[mi]) time_acc += s;
      cell.mean_runtime_s = time_acc / trials;
      if (cell.method == "scrlb") {
        double acc = 0.0;
        int finite = 0;
        for (double v : scrlb_values)
          if (std::isfinite(v)) {
            acc += v;
            ++finite;
          }
        if (finite > 0) cell.scrlb_deg = acc / finite;
      } else {
        cell.errors_deg = errors[mi];
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace

ExperimentResult run_mae_vs_power(const ExperimentConfig& config, Execution exec) {
  if (config.kind != ExperimentKind::kMaeVsPower)
    throw ConfigError("run_mae_vs_power: config kind mismatch");
  return run_sweep(config, "p_dbm", false, exec);
}

ExperimentResult run_mae_vs_slots(const ExperimentConfig& config, Execution exec) {
  if (config.kind != ExperimentKind::kMaeVsSlots)
    throw ConfigError("run_mae_vs_slots: config kind mismatch");
  return run_sweep(config, "num_slots", true, exec);
}

ExperimentResult run_scrlb_curve(const ExperimentConfig& config, Execution exec) {
  if (config.kind != ExperimentKind::kScrlbCurve)
    throw ConfigError("run_scrlb_curve: config kind mismatch");
  ExperimentConfig cfg = config;
  cfg.methods = {"scrlb"};
  return run_sweep(cfg, "p_dbm", false, exec);
}

ExperimentResult run_runtime_table(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::kRuntime)
    throw ConfigError("run_runtime_table: config kind mismatch");
  config.validate();
  MethodEngine engine(config);

  ExperimentResult result;
  result.sweep_param = "median_of";
  result.seed = config.seed;

  const int reps = config.runtime_reps;
  const double tx_power_w = dbm_to_watts(config.p_dbm);
  for (const std::string& method : config.methods) {
    if (method == "scrlb") continue;  // not an estimator
    SweepCell cell;
    cell.method = method;
    cell.sweep_value = static_cast<double>(reps);
    cell.trials = reps;
    std::vector<double> durations(static_cast<std::size_t>(reps));
    cell.errors_deg.resize(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
      const TrialData trial = make_trial(config, engine.geometry, config.num_slots, tx_power_w,
                                         static_cast<std::uint64_t>(r));
      std::optional<UplinkSnapshots> uplink;
      Rng uplink_rng = trial.uplink_rng;
      if (engine.needs_uplink(method)) uplink = draw_uplink(config, trial, config.num_slots, uplink_rng);
      double secs = 0.0;
      const double theta_hat = engine.estimate(method, trial, config.num_slots, uplink, &secs);
      durations[static_cast<std::size_t>(r)] = secs;
      cell.errors_deg[static_cast<std::size_t>(r)] =
          rad2deg(std::abs(theta_hat - trial.scenario.theta_rad));
    }
    std::sort(durations.begin(), durations.end());
    cell.mean_runtime_s = durations[durations.size() / 2];  // median
    result.cells.push_back(std::move(cell));
  }
  return result;
}

TrainArtifacts run_train(const ExperimentConfig& config) {
  if (config.kind != ExperimentKind::kTrain) throw ConfigError("run_train: config kind mismatch");
  config.validate();

  ArrayGeometry geometry;
  geometry.num_antennas = config.num_antennas;
  geometry.spacing_over_wavelength = config.spacing_over_wavelength;
  geometry.carrier_freq_hz = config.carrier_freq_hz;

  DatasetSpec spec;
  spec.num_thetas = config.num_thetas;
  spec.num_ranges = config.num_ranges;
  spec.num_beamformer_sets = config.num_beamformer_sets;
  spec.num_symbol_sets = config.num_symbol_sets;
  spec.num_noise = config.num_noise;
  spec.range_lo_m = config.range_lo_m;
  spec.range_hi_m = config.range_hi_m;
  spec.ref_range_m = config.ref_range_m;
  spec.pathloss_exp = config.pathloss_exp;
  spec.tx_power_w = dbm_to_watts(config.p_dbm);
  spec.noise_psd_dbm_per_hz = config.noise_psd_dbm_per_hz;
  spec.bandwidth_hz = config.bandwidth_hz;
  spec.num_slots = config.num_slots;
  spec.num_blocks = config.num_blocks;
  spec.mode = config.train_mode == "sml" ? PilotMode::kSml : PilotMode::kDml;
  spec.test_fraction = config.test_fraction;

  Dataset dataset;
  if (!config.dataset_cache.empty() && std::filesystem::exists(config.dataset_cache)) {
    dataset = load_dataset_cache(config.dataset_cache);
    if (dataset.samples.size() != spec.total_samples() || dataset.spec.mode != spec.mode)
      throw RuntimeFailure("dataset cache does not match the configured spec: " +
                           config.dataset_cache);
  } else {
    Rng rng(derive_seed(config.seed, 0xDA7A));
    dataset = generate_dataset(spec, geometry, rng);
    if (!config.dataset_cache.empty()) save_dataset_cache(dataset, config.dataset_cache);
  }

  NetConfig net_cfg = default_net_config(dataset);
  net_cfg.hidden_width = config.hidden_width;
  const CompactNet net(net_cfg);

  TrainConfig train_cfg;
  train_cfg.mode = spec.mode;
  train_cfg.learning_rate = config.learning_rate;
  train_cfg.weight_decay = config.weight_decay;
  train_cfg.grad_clip_norm = config.grad_clip_norm;
  train_cfg.batch_size = config.batch_size;
  train_cfg.epochs = config.epochs;
  train_cfg.seed = config.seed;

  TrainResult trained;
  try {
    trained = train(net, dataset, train_cfg);
  } catch (const std::exception& e) {
    throw RuntimeFailure(std::string("training failed: ") + e.what());
  }

  std::filesystem::create_directories(config.out_dir);
  TrainArtifacts artifacts;

  ModelFile model;
  model.mode = spec.mode;
  model.num_antennas = geometry.num_antennas;
  model.num_slots = spec.num_slots;
  model.num_blocks = spec.num_blocks;
  model.net = net_cfg;
  model.scaling = trained.scaling;
  model.train_config = train_cfg;
  model.params = trained.params;
  artifacts.model_path = (std::filesystem::path(config.out_dir) / config.model_out).string();
  save_model(model, artifacts.model_path);

  std::ostringstream curve;
  curve << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t e = 0; e < trained.epoch_mean_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%.17g", trained.epoch_mean_loss[e]);
    curve << e << "," << buf << "\n";
  }
  artifacts.curve_path =
      (std::filesystem::path(config.out_dir) / (config.model_out + ".curve.csv")).string();
  std::ofstream os(artifacts.curve_path, std::ios::binary);
  os << curve.str();
  if (!os) throw RuntimeFailure("cannot write training curve: " + artifacts.curve_path);

  const TrainContext context = TrainContext::build(dataset, spec.mode, trained.scaling);
  artifacts.test_mae_deg = dataset.test_indices.empty()
                               ? 0.0
                               : evaluate_mae_degrees(net, trained.params, dataset, context,
                                                      dataset.test_indices);
  artifacts.final_train_loss =
      trained.epoch_mean_loss.empty() ? 0.0 : trained.epoch_mean_loss.back();
  return artifacts;
}

namespace {

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string result_to_csv(const ExperimentResult& result, bool include_timing) {
  std::ostringstream os;
  os << "method,sweep_param,sweep_value,trials,mae_deg,rmse_deg,mean_runtime_s,seed\n";
  for (const auto& cell : result.cells) {
    os << cell.method << "," << result.sweep_param << "," << fmt_full(cell.sweep_value) << ","
       << cell.trials << ",";
    if (cell.method == "scrlb" && !cell.scrlb_deg.has_value()) {
      os << ",,";  // singular-FIM point: empty cells
    } else {
      os << fmt_full(cell.mae_deg()) << "," << fmt_full(cell.rmse_deg()) << ",";
    }
    if (include_timing) os << fmt_full(cell.mean_runtime_s);
    os << "," << result.seed << "\n";
  }
  return os.str();
}

void write_csv_file(const ExperimentResult& result, const std::string& path,
                    bool include_timing) {
  std::ofstream os(path, std::ios::binary);  // binary: LF endings everywhere
  if (!os) throw RuntimeFailure("cannot write CSV: " + path);
  os << result_to_csv(result, include_timing);
}

std::string result_to_svg(const ExperimentResult& result, const std::string& x_label) {
  // Collect per-method series of (sweep_value, mae).
  std::vector<std::string> methods;
  for (const auto& cell : result.cells)
    if (std::find(methods.begin(), methods.end(), cell.method) == methods.end())
      methods.push_back(cell.method);

  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  bool log_y = true;
  for (const auto& cell : result.cells) {
    const double y = cell.mae_deg();
    if (cell.method == "scrlb" && !cell.scrlb_deg.has_value()) continue;
    x_min = std::min(x_min, cell.sweep_value);
    x_max = std::max(x_max, cell.sweep_value);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
    if (y <= 0.0) log_y = false;
  }
  if (x_min > x_max) {
    x_min = 0.0;
    x_max = 1.0;
    y_min = 0.1;
    y_max = 1.0;
  }
  if (x_min == x_max) x_max = x_min + 1.0;
  if (y_min == y_max) y_max = y_min + 1.0;
  const auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  const double ty_min = ty(y_min), ty_max = ty(y_max);

  const double w = 640, h = 420, ml = 70, mr = 150, mt = 30, mb = 50;
  const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
  const auto py = [&](double y) {
    return h - mb - (ty(y) - ty_min) / (ty_max - ty_min) * (h - mt - mb);
  };

  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
     << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << (mt + h - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << (mt + h - mb) / 2 << ")\">MAE (deg" << (log_y ? ", log scale" : "") << ")</text>\n";

  // Axis ticks.
  for (int i = 0; i <= 4; ++i) {
    const double x = x_min + (x_max - x_min) * i / 4.0;
    os << "<text x=\"" << px(x) << "\" y=\"" << h - mb + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << x << "</text>\n";
    const double tyv = ty_min + (ty_max - ty_min) * i / 4.0;
    const double yv = log_y ? std::pow(10.0, tyv) : tyv;
    char lab[32];
    std::snprintf(lab, sizeof(lab), "%.3g", yv);
    const double ypix = h - mb - (tyv - ty_min) / (ty_max - ty_min) * (h - mt - mb);
    os << "<text x=\"" << ml - 8 << "\" y=\"" << ypix + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << lab << "</text>\n";
  }

  int color_idx = 0;
  for (const auto& method : methods) {
    const char* color = kColors[color_idx % 8];
    std::ostringstream pts;
    for (const auto& cell : result.cells) {
      if (cell.method != method) continue;
      if (cell.method == "scrlb" && !cell.scrlb_deg.has_value()) continue;
      pts << px(cell.sweep_value) << "," << py(cell.mae_deg()) << " ";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\""
       << pts.str() << "\"/>\n";
    os << "<text x=\"" << w - mr + 12 << "\" y=\"" << mt + 16 * color_idx + 10
       << "\" font-size=\"12\" fill=\"" << color << "\">" << method << "</text>\n";
    ++color_idx;
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg_file(const ExperimentResult& result, const std::string& path,
                    const std::string& x_label) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeFailure("cannot write SVG: " + path);
  os << result_to_svg(result, x_label);
}

}  // namespace aod::bench
