// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_BENCH_CONFIG_HPP
#define AOD_BENCH_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "aod/common.hpp"

namespace aod::bench {

/// Invalid or unparsable experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { kMaeVsPower, kMaeVsSlots, kRuntime, kScrlbCurve, kTrain };

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

/// Flat configuration for every experiment kind; dBm values live only here,
/// at the config boundary (internals are watts).
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kMaeVsPower;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  // Geometry and schedule.
  int num_antennas = 8;  // M
  int num_slots = 6;     // L
  int num_blocks = 4;    // Q
  double spacing_over_wavelength = 0.5;
  double carrier_freq_hz = 28e9;

  // Scenario; "random" re-draws per trial.
  double theta_deg = 23.4;
  bool theta_random = false;
  double range_m = 32.1;
  bool range_random = false;
  double range_lo_m = 20.0;
  double range_hi_m = 50.0;
  double ref_range_m = 1.0;
  double pathloss_exp = 3.0;
  double noise_psd_dbm_per_hz = -165.0;
  double bandwidth_hz = 1.2e5;

  // Sweep and methods.
  std::vector<double> sweep;  // dBm values (power sweeps) or slot counts
  double p_dbm = 15.0;        // fixed power for slots/runtime/train
  int trials = 500;
  std::vector<std::string> methods = {"dml", "sml", "dft", "music", "esprit", "scrlb"};

  // Estimator knobs.
  int n_fft = 256;
  int n_music = 256;
  int grid_points = 512;
  double refine_tol_rad = 1e-5;
  int sml_inner_iters = 3;
  int runtime_reps = 25;

  // Neural method model files.
  std::string model_dml;
  std::string model_sml;

  // Training (kind = train).
  std::string train_mode = "dml";
  int num_thetas = 20;
  int num_ranges = 22;
  int num_beamformer_sets = 2;
  int num_symbol_sets = 2;
  int num_noise = 3;
  double test_fraction = 0.2;
  double learning_rate = 3e-4;
  double weight_decay = 1e-4;
  double grad_clip_norm = 10.0;
  int batch_size = 256;
  int epochs = 100;
  int hidden_width = 128;
  std::string model_out = "model.aodnn";
  std::string dataset_cache;

  void validate() const;
};

/// Parses the plain-text `key = value` format with one `[experiment]`
/// section and `#` comments. Unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Default configuration for the given kind, rendered in the config format.
std::string default_config_text(ExperimentKind kind);

}  // namespace aod::bench

#endif  // AOD_BENCH_CONFIG_HPP
