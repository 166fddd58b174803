// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_NEURAL_DATASET_HPP
#define AOD_NEURAL_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "aod/neural/features.hpp"
#include "aod/rng.hpp"

namespace aod {

/// Enumerated dataset: all combinations of sampled angles, ranges,
/// beamformer sets and symbol sets, times independent noise realizations.
struct DatasetSpec {
  int num_thetas = 20;
  int num_ranges = 22;
  int num_beamformer_sets = 2;
  int num_symbol_sets = 2;
  int num_noise = 3;

  double theta_lo_rad = 0.0;  // angles drawn uniformly on (lo, hi)
  double theta_hi_rad = kPi / 2.0;
  double range_lo_m = 20.0;
  double range_hi_m = 50.0;
  double ref_range_m = 1.0;
  double pathloss_exp = 3.0;
  double tx_power_w = 0.0316227766016838;  // 15 dBm
  double noise_psd_dbm_per_hz = -165.0;
  double bandwidth_hz = 1.2e5;

  int num_slots = 6;   // L
  int num_blocks = 4;  // Q
  PilotMode mode = PilotMode::kDml;
  double test_fraction = 0.2;

  std::size_t total_samples() const {
    return static_cast<std::size_t>(num_thetas) * num_ranges * num_beamformer_sets *
           num_symbol_sets * num_noise;
  }
  void validate() const;
};

/// The view a training loss is allowed to see: observed data only.
struct DataSample {
  CMat pilot_feature;  // M x (Q*L), mode-dependent content
  CMat y;              // L x Q
  int num_slots = 0;
};

/// Truth labels ride along for evaluation; losses take DataSample only, so
/// the labels are unreachable from loss computations by construction.
struct LabeledSample {
  DataSample data;
  double theta_true_rad = 0.0;
  double range_m = 0.0;
  double xi_true = 0.0;
};

struct Dataset {
  DatasetSpec spec;
  ArrayGeometry geometry;
  double sigma2 = 0.0;
  std::vector<LabeledSample> samples;
  std::vector<int> train_indices;
  std::vector<int> test_indices;

  const DataSample& sample(int index) const {
    return samples[static_cast<std::size_t>(index)].data;
  }
  double theta_true(int index) const {
    return samples[static_cast<std::size_t>(index)].theta_true_rad;
  }
};

/// Deterministic enumeration; the same seed reproduces the dataset
/// bit-for-bit. Truth labels never enter the features.
Dataset generate_dataset(const DatasetSpec& spec, const ArrayGeometry& geometry, Rng& rng);

/// Versioned binary dataset cache.
void save_dataset_cache(const Dataset& dataset, const std::string& path);
Dataset load_dataset_cache(const std::string& path);

}  // namespace aod

#endif  // AOD_NEURAL_DATASET_HPP
