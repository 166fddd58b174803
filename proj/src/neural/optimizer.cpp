// SPDX-License-Identifier: Apache-2.0
#include "aod/neural/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace aod {

AdamW::AdamW(std::size_t num_params, const AdamWConfig& config)
    : config_(config), m_(num_params, 0.0), v_(num_params, 0.0) {
  if (config.learning_rate < 0.0) throw std::invalid_argument("AdamW: learning_rate must be >= 0");
  if (config.weight_decay < 0.0) throw std::invalid_argument("AdamW: weight_decay must be >= 0");
}

void AdamW::step(std::span<double> params, std::span<double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("AdamW::step: size mismatch");

  if (config_.grad_clip_norm > 0.0) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > config_.grad_clip_norm) {
      const double scale = config_.grad_clip_norm / norm;
      for (double& g : grad) g *= scale;
    }
  }

  ++step_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const double decay = config_.learning_rate * config_.weight_decay;
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    params[i] -= decay * params[i];
  }
}

}  // namespace aod
