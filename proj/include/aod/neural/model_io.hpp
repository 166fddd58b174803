// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_NEURAL_MODEL_IO_HPP
#define AOD_NEURAL_MODEL_IO_HPP

#include <string>
#include <vector>

#include "aod/neural/network.hpp"
#include "aod/neural/training.hpp"

namespace aod {

/// Trained-model container. Binary on disk with a magic/version header;
/// weight arrays are stored in layout order (conv1 w/b, conv2 w/b, fc1 w/b,
/// fc2 w/b, head w/b).
struct ModelFile {
  std::uint32_t format_version = 1;
  PilotMode mode = PilotMode::kDml;
  int num_antennas = 0;  // M
  int num_slots = 0;     // L
  int num_blocks = 0;    // Q
  NetConfig net;
  InputScaling scaling;
  TrainConfig train_config;
  std::vector<double> params;
};

void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace aod

#endif  // AOD_NEURAL_MODEL_IO_HPP
