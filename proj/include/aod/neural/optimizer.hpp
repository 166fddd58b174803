// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_NEURAL_OPTIMIZER_HPP
#define AOD_NEURAL_OPTIMIZER_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace aod {

/// Adaptive moment estimation with decoupled weight decay: the decay is
/// applied directly to the weights, never folded into the gradient.
struct AdamWConfig {
  double learning_rate = 3e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double grad_clip_norm = 10.0;  // <= 0 disables clipping
};

class AdamW {
 public:
  AdamW(std::size_t num_params, const AdamWConfig& config);

  const AdamWConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::int64_t step_count() const { return step_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  /// Clips the gradient's global norm in place (if enabled) and applies one
  /// bias-corrected update plus decoupled decay to `params`.
  void step(std::span<double> params, std::span<double> grad);

 private:
  AdamWConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t step_ = 0;
};

}  // namespace aod

#endif  // AOD_NEURAL_OPTIMIZER_HPP
