// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_NEURAL_FEATURES_HPP
#define AOD_NEURAL_FEATURES_HPP

#include <utility>
#include <vector>

#include "aod/signal_model.hpp"

namespace aod {

enum class PilotMode { kDml, kSml };

/// Pilot-side network input, M x (Q*L).
///   DML: column q*L + l is c_q * beamformer_l (full pilot knowledge).
///   SML: columns repeat [beamformer_1 .. beamformer_L] for every block
///        (second-order knowledge only; the symbols never appear).
struct PilotFeature {
  CMat x;
  PilotMode mode = PilotMode::kDml;

  int num_antennas() const { return static_cast<int>(x.rows()); }
  int num_columns() const { return static_cast<int>(x.cols()); }
};

/// Real input tensor 2 x (M+1) x (Q*L): channel 0 real parts, channel 1
/// imaginary parts; row 0 carries Y vectorized slot-fastest, rows 1..M the
/// rows of the pilot feature.
struct FeatureTensor {
  int num_rows = 0;  // M + 1
  int num_cols = 0;  // Q * L
  std::vector<double> data;  // [channel][row][col], row-major

  double& at(int channel, int row, int col) {
    return data[static_cast<std::size_t>((channel * num_rows + row) * num_cols + col)];
  }
  double at(int channel, int row, int col) const {
    return data[static_cast<std::size_t>((channel * num_rows + row) * num_cols + col)];
  }
};

PilotFeature build_pilot_feature(const PilotSchedule& schedule, PilotMode mode);

FeatureTensor build_input_tensor(const PilotFeature& feature, const ObservationBatch& batch);

/// Inverse of build_input_tensor; returns (X, Y) given the slot count L.
std::pair<CMat, CMat> split_input_tensor(const FeatureTensor& tensor, int num_slots);

}  // namespace aod

#endif  // AOD_NEURAL_FEATURES_HPP
