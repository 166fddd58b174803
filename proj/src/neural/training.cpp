// SPDX-License-Identifier: Apache-2.0
#include "aod/neural/training.hpp"

#include <cmath>
#include <stdexcept>

namespace aod {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1]");
  if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (num_shards < 1) throw std::invalid_argument("TrainConfig: num_shards must be >= 1");
}

InputScaling compute_input_scaling(const Dataset& dataset) {
  double y_power = 0.0, x_power = 0.0;
  std::size_t y_count = 0, x_count = 0;
  for (int idx : dataset.train_indices) {
    const DataSample& s = dataset.sample(idx);
    y_power += s.y.squaredNorm();
    y_count += static_cast<std::size_t>(s.y.size());
    x_power += s.pilot_feature.squaredNorm();
    x_count += static_cast<std::size_t>(s.pilot_feature.size());
  }
  if (y_count == 0 || x_count == 0)
    throw std::invalid_argument("compute_input_scaling: empty training split");
  InputScaling scaling;
  scaling.scale_y = y_power > 0.0 ? 1.0 / std::sqrt(y_power / y_count) : 1.0;
  scaling.scale_x = x_power > 0.0 ? 1.0 / std::sqrt(x_power / x_count) : 1.0;
  return scaling;
}

namespace {

std::vector<double> scaled_tensor(const DataSample& sample, PilotMode mode,
                                  const InputScaling& scaling) {
  PilotFeature feature;
  feature.x = sample.pilot_feature;
  feature.mode = mode;
  ObservationBatch batch;
  batch.y = sample.y;
  FeatureTensor tensor = build_input_tensor(feature, batch);
  for (int ch = 0; ch < 2; ++ch) {
    for (int col = 0; col < tensor.num_cols; ++col) tensor.at(ch, 0, col) *= scaling.scale_y;
    for (int row = 1; row < tensor.num_rows; ++row)
      for (int col = 0; col < tensor.num_cols; ++col) tensor.at(ch, row, col) *= scaling.scale_x;
  }
  return std::move(tensor.data);
}

}  // namespace

TrainContext TrainContext::build(const Dataset& dataset, PilotMode mode,
                                 const InputScaling& scaling) {
  TrainContext ctx;
  ctx.mode = mode;
  ctx.scaling = scaling;
  // DML: optimize scale_y^2 * loss so gradients sit near unity; the SML
  // objective is already well-conditioned in its head variables.
  ctx.loss_scale = mode == PilotMode::kDml ? scaling.scale_y * scaling.scale_y : 1.0;
  const int n = static_cast<int>(dataset.samples.size());
  ctx.inputs.resize(static_cast<std::size_t>(n));
  if (mode == PilotMode::kSml) ctx.sample_cov.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const DataSample& s = dataset.sample(i);
    ctx.inputs[static_cast<std::size_t>(i)] = scaled_tensor(s, mode, scaling);
    if (mode == PilotMode::kSml) {
      ObservationBatch batch;
      batch.y = s.y;
      ctx.sample_cov[static_cast<std::size_t>(i)] = sample_covariance(batch).c_hat;
    }
  }
  return ctx;
}

namespace {

double sample_loss_and_head_grad(const Dataset& dataset, const TrainContext& ctx, int index,
                                 const HeadValues& heads, HeadGrad* hg) {
  const DataSample& s = dataset.sample(index);
  if (ctx.mode == PilotMode::kDml) {
    return dml_sample_loss(dataset.geometry, s.pilot_feature, s.y, heads, hg);
  }
  const CMat beams = beamformers_from_feature(s.pilot_feature, s.num_slots);
  return sml_sample_loss(dataset.geometry, beams,
                         ctx.sample_cov[static_cast<std::size_t>(index)], heads, hg);
}

}  // namespace

BatchGradient batch_loss_and_grad(const CompactNet& net, std::span<const double> params,
                                  const Dataset& dataset, const TrainContext& context,
                                  std::span<const int> indices, int num_shards, Execution exec) {
  const int n = static_cast<int>(indices.size());
  if (n == 0) throw std::invalid_argument("batch_loss_and_grad: empty batch");
  const int shards = std::min(num_shards, n);
  const std::size_t p = net.num_params();

  std::vector<std::vector<double>> shard_grad(static_cast<std::size_t>(shards));
  std::vector<double> shard_loss(static_cast<std::size_t>(shards), 0.0);

  // Head-gradient scale: d(loss_scale * mean loss) / d heads.
  const double head_scale = context.loss_scale / n;

#pragma omp parallel for schedule(static) if (exec == Execution::kParallel)
  for (int sh = 0; sh < shards; ++sh) {
    auto& grad = shard_grad[static_cast<std::size_t>(sh)];
    grad.assign(p, 0.0);
    NetWorkspace ws;
    const int lo = sh * n / shards;
    const int hi = (sh + 1) * n / shards;
    double loss_acc = 0.0;
    for (int k = lo; k < hi; ++k) {
      const int idx = indices[static_cast<std::size_t>(k)];
      const HeadValues heads =
          net.forward(params, context.inputs[static_cast<std::size_t>(idx)], ws);
      HeadGrad hg;
      loss_acc += sample_loss_and_head_grad(dataset, context, idx, heads, &hg);
      hg.d_theta *= head_scale;
      hg.d_sigma2 *= head_scale;
      hg.d_xi *= head_scale;
      net.backward(params, ws, hg, grad);
    }
    shard_loss[static_cast<std::size_t>(sh)] = loss_acc;
  }

  BatchGradient out;
  out.grad.assign(p, 0.0);
  double loss_sum = 0.0;
  for (int sh = 0; sh < shards; ++sh) {  // fixed reduction order
    loss_sum += shard_loss[static_cast<std::size_t>(sh)];
    const auto& grad = shard_grad[static_cast<std::size_t>(sh)];
    for (std::size_t i = 0; i < p; ++i) out.grad[i] += grad[i];
  }
  out.mean_loss = loss_sum / n;
  return out;
}

double batch_loss(const CompactNet& net, std::span<const double> params, const Dataset& dataset,
                  const TrainContext& context, std::span<const int> indices) {
  NetWorkspace ws;
  double acc = 0.0;
  for (int idx : indices) {
    const HeadValues heads =
        net.forward(params, context.inputs[static_cast<std::size_t>(idx)], ws);
    acc += sample_loss_and_head_grad(dataset, context, idx, heads, nullptr);
  }
  return acc / static_cast<double>(indices.size());
}

NetConfig default_net_config(const Dataset& dataset) {
  NetConfig cfg;
  cfg.input_rows = dataset.geometry.num_antennas + 1;
  cfg.input_cols = dataset.spec.num_blocks * dataset.spec.num_slots;
  cfg.scale_sigma = noise_variance_watts(dataset.spec.noise_psd_dbm_per_hz, dataset.spec.bandwidth_hz);
  cfg.scale_xi = channel_gain(35.0, dataset.spec.ref_range_m, dataset.spec.pathloss_exp,
                              dataset.geometry.carrier_freq_hz);
  return cfg;
}

TrainResult train(const CompactNet& net, const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.spec.mode != config.mode)
    throw std::invalid_argument("train: dataset mode does not match config mode");
  if (dataset.train_indices.empty()) throw std::invalid_argument("train: empty training split");

  const InputScaling scaling = compute_input_scaling(dataset);
  const TrainContext context = TrainContext::build(dataset, config.mode, scaling);

  Rng init_rng = Rng(config.seed).substream(101);
  std::vector<double> params = net.init_params(init_rng);

  AdamWConfig opt_cfg;
  opt_cfg.learning_rate = config.learning_rate;
  opt_cfg.weight_decay = config.weight_decay;
  opt_cfg.grad_clip_norm = config.grad_clip_norm;
  AdamW optimizer(params.size(), opt_cfg);

  std::vector<int> order = dataset.train_indices;
  const int n = static_cast<int>(order.size());

  TrainResult result;
  result.net_config = net.config();
  result.scaling = scaling;
  result.loss_scale = context.loss_scale;
  result.epoch_mean_loss.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    optimizer.set_learning_rate(config.learning_rate * std::pow(config.lr_decay, epoch));
    Rng shuffle_rng = Rng(config.seed).substream(202, static_cast<std::uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i) {
      const int j =
          static_cast<int>(shuffle_rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int count = std::min(config.batch_size, n - start);
      BatchGradient bg = batch_loss_and_grad(
          net, params, dataset, context,
          std::span<const int>(order.data() + start, static_cast<std::size_t>(count)),
          config.num_shards, config.exec);
      if (!std::isfinite(bg.mean_loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += bg.mean_loss * count;
      optimizer.step(params, bg.grad);
      for (double w : params)
        if (!std::isfinite(w))
          throw std::runtime_error("train: non-finite parameter after optimizer step");
    }
    result.epoch_mean_loss.push_back(epoch_loss / n);
  }

  result.params = std::move(params);
  return result;
}

double evaluate_mae_degrees(const CompactNet& net, std::span<const double> params,
                            const Dataset& dataset, const TrainContext& context,
                            std::span<const int> indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate_mae_degrees: empty index set");
  NetWorkspace ws;
  double acc = 0.0;
  for (int idx : indices) {
    const HeadValues heads =
        net.forward(params, context.inputs[static_cast<std::size_t>(idx)], ws);
    acc += std::abs(heads.theta_rad - dataset.theta_true(idx));
  }
  return rad2deg(acc / static_cast<double>(indices.size()));
}

double nn_estimate_theta(const CompactNet& net, std::span<const double> params,
                         const InputScaling& scaling, const PilotSchedule& schedule,
                         const ObservationBatch& batch, PilotMode mode) {
  const PilotFeature feature = build_pilot_feature(schedule, mode);
  DataSample sample;
  sample.pilot_feature = feature.x;
  sample.y = batch.y;
  sample.num_slots = schedule.num_slots();
  const std::vector<double> input = scaled_tensor(sample, mode, scaling);
  NetWorkspace ws;
  return net.forward(params, input, ws).theta_rad;
}

}  // namespace aod
