// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_NEURAL_TRAINING_HPP
#define AOD_NEURAL_TRAINING_HPP

#include <span>
#include <string>
#include <vector>

#include "aod/neural/dataset.hpp"
#include "aod/neural/losses.hpp"
#include "aod/neural/network.hpp"
#include "aod/neural/optimizer.hpp"

namespace aod {

struct TrainConfig {
  PilotMode mode = PilotMode::kDml;
  double learning_rate = 3e-4;
  double lr_decay = 1.0;  // per-epoch multiplicative factor
  double weight_decay = 1e-4;
  double grad_clip_norm = 10.0;
  int batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 1;
  int num_shards = 16;  // fixed shard count keeps reduction order thread-independent
  Execution exec = Execution::kParallel;

  void validate() const;
};

/// Row scaling of the input tensor: the observation row and the pilot rows
/// each get their own scalar so neither side saturates the first
/// nonlinearity. Both scalars are recorded in the trained-model file and
/// applied identically at train and test time. The losses always read the
/// unscaled physical data, so the objectives are evaluated exactly.
struct InputScaling {
  double scale_y = 1.0;
  double scale_x = 1.0;
};

/// 1/sqrt(mean power) of Y entries and of pilot-feature entries over the
/// training split.
InputScaling compute_input_scaling(const Dataset& dataset);

/// Per-dataset precomputation shared by training and evaluation: scaled
/// input tensors for every sample, plus per-sample covariances (SML mode).
struct TrainContext {
  PilotMode mode = PilotMode::kDml;
  InputScaling scaling;
  double loss_scale = 1.0;  // objective multiplier used for conditioning
  std::vector<std::vector<double>> inputs;  // scaled tensors, per sample
  std::vector<CMat> sample_cov;             // SML only

  static TrainContext build(const Dataset& dataset, PilotMode mode, const InputScaling& scaling);
};

struct BatchGradient {
  double mean_loss = 0.0;  // physical objective, unscaled
  std::vector<double> grad;  // gradient of loss_scale * mean_loss
};

/// Mean loss and gradient over the given sample indices. Shards are
/// accumulated independently and reduced in index order, so the result does
/// not depend on the thread count.
BatchGradient batch_loss_and_grad(const CompactNet& net, std::span<const double> params,
                                  const Dataset& dataset, const TrainContext& context,
                                  std::span<const int> indices, int num_shards, Execution exec);

/// Mean physical loss only (no gradient).
double batch_loss(const CompactNet& net, std::span<const double> params, const Dataset& dataset,
                  const TrainContext& context, std::span<const int> indices);

struct TrainResult {
  NetConfig net_config;
  std::vector<double> params;
  InputScaling scaling;
  double loss_scale = 1.0;
  std::vector<double> epoch_mean_loss;  // physical objective per epoch
};

/// Network sized for the dataset with the standard head scales:
/// scale_sigma = thermal noise floor, scale_xi = midrange channel gain.
NetConfig default_net_config(const Dataset& dataset);

/// Mini-batch training loop (shuffled sampling without replacement).
/// Throws if the loss becomes non-finite.
TrainResult train(const CompactNet& net, const Dataset& dataset, const TrainConfig& config);

/// Mean |theta_hat - theta| in degrees over the given index set.
double evaluate_mae_degrees(const CompactNet& net, std::span<const double> params,
                            const Dataset& dataset, const TrainContext& context,
                            std::span<const int> indices);

/// Network estimate for a single observation outside any dataset.
double nn_estimate_theta(const CompactNet& net, std::span<const double> params,
                         const InputScaling& scaling, const PilotSchedule& schedule,
                         const ObservationBatch& batch, PilotMode mode);

}  // namespace aod

#endif  // AOD_NEURAL_TRAINING_HPP
