// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_NEURAL_NETWORK_HPP
#define AOD_NEURAL_NETWORK_HPP

#include <span>
#include <vector>

#include "aod/neural/features.hpp"
#include "aod/rng.hpp"

namespace aod {

/// Estimates produced by the network head after range squashing:
/// theta in (0, pi/2), sigma2 > 0, xi > 0.
struct HeadValues {
  double theta_rad = 0.0;
  double sigma2 = 0.0;
  double xi = 0.0;
};

/// Loss gradient with respect to the squashed head outputs.
struct HeadGrad {
  double d_theta = 0.0;
  double d_sigma2 = 0.0;
  double d_xi = 0.0;
};

/// Architecture of the compact convolutional estimator:
/// conv(3x3, pad 1) -> tanh -> avgpool(2x2, ceil) twice, then two tanh
/// fully connected stages and a linear head of width 3 with range
/// squashing theta = (pi/2) logistic(z0), sigma2 = softplus(z1) * scale_sigma,
/// xi = softplus(z2) * scale_xi.
struct NetConfig {
  int input_rows = 0;  // M + 1
  int input_cols = 0;  // Q * L
  int conv1_channels = 8;
  int conv2_channels = 16;
  int hidden_width = 128;
  double scale_sigma = 1.0;
  double scale_xi = 1.0;
};

/// Reusable forward/backward buffers; after forward() they hold the tape
/// (pre- and post-activation values of every stage) that backward() consumes.
struct NetWorkspace {
  std::vector<double> pre1, act1;    // conv1 pre-activation / output
  std::vector<double> pool1;         // after first average pool
  std::vector<double> pre2, act2;    // conv2 pre-activation / output
  std::vector<double> pool2;         // after second average pool
  std::vector<double> hpre1, hid1;   // fc1 pre-activation / output
  std::vector<double> hpre2, hid2;   // fc2 pre-activation / output
  double z[3] = {0.0, 0.0, 0.0};
  std::vector<double> input;  // copy of the forward input

  // backward scratch
  std::vector<double> g_act1, g_pool1, g_act2, g_pool2, g_hid1, g_hid2;
};

class CompactNet {
 public:
  struct Layout {
    std::size_t conv1_w = 0, conv1_b = 0;
    std::size_t conv2_w = 0, conv2_b = 0;
    std::size_t fc1_w = 0, fc1_b = 0;
    std::size_t fc2_w = 0, fc2_b = 0;
    std::size_t head_w = 0, head_b = 0;
    std::size_t total = 0;
  };

  explicit CompactNet(const NetConfig& config);

  const NetConfig& config() const { return config_; }
  const Layout& layout() const { return layout_; }
  std::size_t num_params() const { return layout_.total; }

  int pool1_rows() const { return pool1_rows_; }
  int pool1_cols() const { return pool1_cols_; }
  int pool2_rows() const { return pool2_rows_; }
  int pool2_cols() const { return pool2_cols_; }
  int flat_size() const { return flat_size_; }

  /// Glorot-uniform weights, zero biases; deterministic for a given stream.
  std::vector<double> init_params(Rng& rng) const;

  /// Pure function of (params, input); fills the tape in the workspace.
  HeadValues forward(std::span<const double> params, std::span<const double> input,
                     NetWorkspace& ws) const;

  /// Reverse-mode accumulation over the recorded tape. Adds this sample's
  /// parameter gradient (scaled by the head gradient) into `grad`.
  void backward(std::span<const double> params, NetWorkspace& ws, const HeadGrad& hg,
                std::span<double> grad) const;

 private:
  NetConfig config_;
  Layout layout_;
  int pool1_rows_, pool1_cols_, pool2_rows_, pool2_cols_, flat_size_;
};

double logistic(double x);
double softplus(double x);

}  // namespace aod

#endif  // AOD_NEURAL_NETWORK_HPP
