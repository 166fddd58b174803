// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_NEURAL_LOSSES_HPP
#define AOD_NEURAL_LOSSES_HPP

#include "aod/neural/network.hpp"
#include "aod/signal_model.hpp"

namespace aod {

/// Value assigned when the reconstructed covariance cannot be factorized;
/// keeps training robust instead of crashing (gradients are zero there).
inline constexpr double kSmlLossClamp = 1e6;

/// Deterministic-ML reconstruction loss for one sample:
/// ||vec(Y) - xi X^T a(theta)||^2 on the physical (unscaled) data.
/// When `grad` is non-null also fills the analytic gradient with respect
/// to the squashed head outputs (sigma2 does not enter this loss).
double dml_sample_loss(const ArrayGeometry& geometry, const CMat& pilot_feature, const CMat& y,
                       const HeadValues& heads, HeadGrad* grad = nullptr);

/// Stochastic-ML loss for one sample:
/// ln det C_y + tr(C_y^{-1} C_hat) with C_y built from (theta, xi^2, sigma2)
/// and the sample's beamformers. Factorization failure returns the clamp
/// value with zero gradients.
double sml_sample_loss(const ArrayGeometry& geometry, const CMat& beamformer_matrix,
                       const CMat& c_hat, const HeadValues& heads, HeadGrad* grad = nullptr);

/// Leading L columns of an SML pilot feature, i.e. the beamformer matrix.
CMat beamformers_from_feature(const CMat& pilot_feature, int num_slots);

}  // namespace aod

#endif  // AOD_NEURAL_LOSSES_HPP
