// SPDX-License-Identifier: Apache-2.0
#include "aod/neural/features.hpp"

namespace aod {

PilotFeature build_pilot_feature(const PilotSchedule& schedule, PilotMode mode) {
  schedule.validate();
  const int l_slots = schedule.num_slots();
  const int q_blocks = schedule.num_blocks();
  const int m = static_cast<int>(schedule.beamformers.front().size());

  PilotFeature feature;
  feature.mode = mode;
  feature.x.resize(m, q_blocks * l_slots);
  for (int q = 0; q < q_blocks; ++q) {
    const Complex c = mode == PilotMode::kDml ? schedule.block_symbols(q) : Complex(1.0, 0.0);
    for (int l = 0; l < l_slots; ++l) {
      feature.x.col(q * l_slots + l) = c * schedule.beamformers[static_cast<std::size_t>(l)];
    }
  }
  return feature;
}

FeatureTensor build_input_tensor(const PilotFeature& feature, const ObservationBatch& batch) {
  const int m = feature.num_antennas();
  const int cols = feature.num_columns();
  const int l_slots = batch.num_slots();
  const int q_blocks = batch.num_blocks();
  if (l_slots * q_blocks != cols)
    throw std::invalid_argument("build_input_tensor: Y and pilot feature column counts differ");

  FeatureTensor tensor;
  tensor.num_rows = m + 1;
  tensor.num_cols = cols;
  tensor.data.assign(static_cast<std::size_t>(2 * tensor.num_rows * cols), 0.0);

  // Row 0: Y vectorized slot-fastest (Y_11 .. Y_L1 .. Y_LQ).
  for (int q = 0; q < q_blocks; ++q) {
    for (int l = 0; l < l_slots; ++l) {
      const Complex y = batch.y(l, q);
      tensor.at(0, 0, q * l_slots + l) = y.real();
      tensor.at(1, 0, q * l_slots + l) = y.imag();
    }
  }
  // Rows 1..M: rows of the pilot feature.
  for (int r = 0; r < m; ++r) {
    for (int k = 0; k < cols; ++k) {
      const Complex x = feature.x(r, k);
      tensor.at(0, r + 1, k) = x.real();
      tensor.at(1, r + 1, k) = x.imag();
    }
  }
  return tensor;
}

std::pair<CMat, CMat> split_input_tensor(const FeatureTensor& tensor, int num_slots) {
  const int m = tensor.num_rows - 1;
  const int cols = tensor.num_cols;
  if (num_slots < 1 || cols % num_slots != 0)
    throw std::invalid_argument("split_input_tensor: column count not divisible by num_slots");
  const int q_blocks = cols / num_slots;

  CMat x(m, cols);
  for (int r = 0; r < m; ++r)
    for (int k = 0; k < cols; ++k)
      x(r, k) = Complex(tensor.at(0, r + 1, k), tensor.at(1, r + 1, k));

  CMat y(num_slots, q_blocks);
  for (int q = 0; q < q_blocks; ++q)
    for (int l = 0; l < num_slots; ++l)
      y(l, q) = Complex(tensor.at(0, 0, q * num_slots + l), tensor.at(1, 0, q * num_slots + l));

  return {std::move(x), std::move(y)};
}

}  // namespace aod
