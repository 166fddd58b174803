// SPDX-License-Identifier: Apache-2.0
#include "aod/neural/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aod {

double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

namespace {

// Smooth non-saturating nonlinearity (x * logistic(x)); keeps amplitude
// information flowing to the gain head, unlike tanh which clips it.
inline double silu(double x) { return x * logistic(x); }

inline double silu_prime(double x) {
  const double s = logistic(x);
  return s * (1.0 + x * (1.0 - s));
}

inline int ceil_half(int n) { return (n + 1) / 2; }

// 3x3 convolution, stride 1, zero padding 1; writes pre-activations.
// Kernel taps are applied as shifted row-contiguous axpy passes so the inner
// loops vectorize.
void conv3x3(std::span<const double> w, std::span<const double> b, const double* in, int in_ch,
             int rows, int cols, double* pre, int out_ch) {
  for (int o = 0; o < out_ch; ++o) {
    double* out_plane = pre + static_cast<std::ptrdiff_t>(o) * rows * cols;
    const double bias = b[static_cast<std::size_t>(o)];
    for (int idx = 0; idx < rows * cols; ++idx) out_plane[idx] = bias;
    for (int i = 0; i < in_ch; ++i) {
      const double* plane = in + static_cast<std::ptrdiff_t>(i) * rows * cols;
      const double* wk = w.data() + static_cast<std::ptrdiff_t>((o * in_ch + i) * 9);
      for (int kr = 0; kr < 3; ++kr) {
        const int r_lo = std::max(0, 1 - kr);
        const int r_hi = std::min(rows, rows + 1 - kr);
        for (int kc = 0; kc < 3; ++kc) {
          const double wv = wk[kr * 3 + kc];
          const int c_lo = std::max(0, 1 - kc);
          const int c_hi = std::min(cols, cols + 1 - kc);
          const int len = c_hi - c_lo;
          for (int r = r_lo; r < r_hi; ++r) {
            const double* src = plane + (r + kr - 1) * cols + (c_lo + kc - 1);
            double* dst = out_plane + r * cols + c_lo;
            for (int c = 0; c < len; ++c) dst[c] += wv * src[c];
          }
        }
      }
    }
  }
}

// Gradient of the convolution given d(pre-activation); accumulates weight
// and bias gradients and, when g_in != nullptr, the input gradient. Same
// shifted-row decomposition as the forward pass: dots for the weight
// gradient, axpy for the input gradient.
void conv3x3_backward(std::span<const double> w, const double* in, int in_ch, int rows, int cols,
                      const double* d_pre, int out_ch, double* g_w, double* g_b, double* g_in) {
  for (int o = 0; o < out_ch; ++o) {
    const double* d_plane = d_pre + static_cast<std::ptrdiff_t>(o) * rows * cols;
    double acc_b = 0.0;
    for (int idx = 0; idx < rows * cols; ++idx) acc_b += d_plane[idx];
    g_b[o] += acc_b;
    for (int i = 0; i < in_ch; ++i) {
      const double* plane = in + static_cast<std::ptrdiff_t>(i) * rows * cols;
      const double* wk = w.data() + static_cast<std::ptrdiff_t>((o * in_ch + i) * 9);
      double* gk = g_w + static_cast<std::ptrdiff_t>((o * in_ch + i) * 9);
      double* g_plane =
          g_in == nullptr ? nullptr : g_in + static_cast<std::ptrdiff_t>(i) * rows * cols;
      for (int kr = 0; kr < 3; ++kr) {
        const int r_lo = std::max(0, 1 - kr);
        const int r_hi = std::min(rows, rows + 1 - kr);
        for (int kc = 0; kc < 3; ++kc) {
          const double wv = wk[kr * 3 + kc];
          const int c_lo = std::max(0, 1 - kc);
          const int c_hi = std::min(cols, cols + 1 - kc);
          const int len = c_hi - c_lo;
          double acc_w = 0.0;
          for (int r = r_lo; r < r_hi; ++r) {
            const double* src = plane + (r + kr - 1) * cols + (c_lo + kc - 1);
            const double* d_row = d_plane + r * cols + c_lo;
            double dot = 0.0;
            for (int c = 0; c < len; ++c) dot += d_row[c] * src[c];
            acc_w += dot;
            if (g_plane != nullptr) {
              double* g_row = g_plane + (r + kr - 1) * cols + (c_lo + kc - 1);
              for (int c = 0; c < len; ++c) g_row[c] += wv * d_row[c];
            }
          }
          gk[kr * 3 + kc] += acc_w;
        }
      }
    }
  }
}

// 2x2 average pool with stride 2 and ceil-mode output size; edge windows
// are clipped to the valid region and divided by the actual cell count.
void avgpool2x2(const double* in, int ch, int rows, int cols, double* out) {
  const int p_rows = ceil_half(rows);
  const int p_cols = ceil_half(cols);
  for (int i = 0; i < ch; ++i) {
    const double* plane = in + static_cast<std::ptrdiff_t>(i) * rows * cols;
    double* o_plane = out + static_cast<std::ptrdiff_t>(i) * p_rows * p_cols;
    for (int pr = 0; pr < p_rows; ++pr) {
      const int r0 = 2 * pr;
      const int r1 = std::min(r0 + 2, rows);
      for (int pc = 0; pc < p_cols; ++pc) {
        const int c0 = 2 * pc;
        const int c1 = std::min(c0 + 2, cols);
        double acc = 0.0;
        for (int r = r0; r < r1; ++r)
          for (int c = c0; c < c1; ++c) acc += plane[r * cols + c];
        o_plane[pr * p_cols + pc] = acc / ((r1 - r0) * (c1 - c0));
      }
    }
  }
}

void avgpool2x2_backward(const double* d_out, int ch, int rows, int cols, double* d_in) {
  const int p_rows = ceil_half(rows);
  const int p_cols = ceil_half(cols);
  for (int i = 0; i < ch; ++i) {
    const double* d_o = d_out + static_cast<std::ptrdiff_t>(i) * p_rows * p_cols;
    double* d_plane = d_in + static_cast<std::ptrdiff_t>(i) * rows * cols;
    for (int pr = 0; pr < p_rows; ++pr) {
      const int r0 = 2 * pr;
      const int r1 = std::min(r0 + 2, rows);
      for (int pc = 0; pc < p_cols; ++pc) {
        const int c0 = 2 * pc;
        const int c1 = std::min(c0 + 2, cols);
        const double share = d_o[pr * p_cols + pc] / ((r1 - r0) * (c1 - c0));
        for (int r = r0; r < r1; ++r)
          for (int c = c0; c < c1; ++c) d_plane[r * cols + c] += share;
      }
    }
  }
}

void fc(std::span<const double> w, std::span<const double> b, const double* in, int in_dim,
        double* pre, int out_dim) {
  for (int o = 0; o < out_dim; ++o) {
    double acc = b[static_cast<std::size_t>(o)];
    const double* row = w.data() + static_cast<std::ptrdiff_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += row[i] * in[i];
    pre[o] = acc;
  }
}

void fc_backward(std::span<const double> w, const double* in, int in_dim, const double* d_pre,
                 int out_dim, double* g_w, double* g_b, double* g_in) {
  for (int o = 0; o < out_dim; ++o) {
    const double d = d_pre[o];
    g_b[o] += d;
    double* g_row = g_w + static_cast<std::ptrdiff_t>(o) * in_dim;
    const double* row = w.data() + static_cast<std::ptrdiff_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) {
      g_row[i] += d * in[i];
      if (g_in != nullptr) g_in[i] += d * row[i];
    }
  }
}

void apply_silu(const double* pre, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = silu(pre[i]);
}

void silu_backward_inplace(const double* pre, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) grad[i] *= silu_prime(pre[i]);
}

}  // namespace

CompactNet::CompactNet(const NetConfig& config) : config_(config) {
  if (config.input_rows < 1 || config.input_cols < 1)
    throw std::invalid_argument("CompactNet: input dimensions must be positive");
  if (config.conv1_channels < 1 || config.conv2_channels < 1 || config.hidden_width < 1)
    throw std::invalid_argument("CompactNet: channel/width parameters must be positive");
  if (!(config.scale_sigma > 0.0) || !(config.scale_xi > 0.0))
    throw std::invalid_argument("CompactNet: head scales must be positive");

  pool1_rows_ = ceil_half(config.input_rows);
  pool1_cols_ = ceil_half(config.input_cols);
  pool2_rows_ = ceil_half(pool1_rows_);
  pool2_cols_ = ceil_half(pool1_cols_);
  flat_size_ = config.conv2_channels * pool2_rows_ * pool2_cols_;

  const int c1 = config.conv1_channels;
  const int c2 = config.conv2_channels;
  const int h = config.hidden_width;
  std::size_t offset = 0;
  layout_.conv1_w = offset;
  offset += static_cast<std::size_t>(c1) * 2 * 9;
  layout_.conv1_b = offset;
  offset += static_cast<std::size_t>(c1);
  layout_.conv2_w = offset;
  offset += static_cast<std::size_t>(c2) * c1 * 9;
  layout_.conv2_b = offset;
  offset += static_cast<std::size_t>(c2);
  layout_.fc1_w = offset;
  offset += static_cast<std::size_t>(h) * flat_size_;
  layout_.fc1_b = offset;
  offset += static_cast<std::size_t>(h);
  layout_.fc2_w = offset;
  offset += static_cast<std::size_t>(h) * h;
  layout_.fc2_b = offset;
  offset += static_cast<std::size_t>(h);
  layout_.head_w = offset;
  offset += static_cast<std::size_t>(3) * h;
  layout_.head_b = offset;
  offset += 3;
  layout_.total = offset;
}

std::vector<double> CompactNet::init_params(Rng& rng) const {
  std::vector<double> params(layout_.total, 0.0);
  const auto fill_uniform = [&](std::size_t begin, std::size_t count, double limit) {
    for (std::size_t i = 0; i < count; ++i) params[begin + i] = rng.uniform(-limit, limit);
  };
  const int c1 = config_.conv1_channels;
  const int c2 = config_.conv2_channels;
  const int h = config_.hidden_width;
  fill_uniform(layout_.conv1_w, static_cast<std::size_t>(c1) * 2 * 9,
               std::sqrt(6.0 / (2 * 9 + c1 * 9)));
  fill_uniform(layout_.conv2_w, static_cast<std::size_t>(c2) * c1 * 9,
               std::sqrt(6.0 / (c1 * 9 + c2 * 9)));
  fill_uniform(layout_.fc1_w, static_cast<std::size_t>(h) * flat_size_,
               std::sqrt(6.0 / (flat_size_ + h)));
  fill_uniform(layout_.fc2_w, static_cast<std::size_t>(h) * h, std::sqrt(6.0 / (h + h)));
  fill_uniform(layout_.head_w, static_cast<std::size_t>(3) * h, std::sqrt(6.0 / (h + 3)));
  return params;  // biases stay zero
}

HeadValues CompactNet::forward(std::span<const double> params, std::span<const double> input,
                               NetWorkspace& ws) const {
  const int rows = config_.input_rows;
  const int cols = config_.input_cols;
  if (static_cast<int>(input.size()) != 2 * rows * cols)
    throw std::invalid_argument("CompactNet::forward: input size mismatch");
  if (params.size() != layout_.total)
    throw std::invalid_argument("CompactNet::forward: parameter size mismatch");

  const int c1 = config_.conv1_channels;
  const int c2 = config_.conv2_channels;
  const int h = config_.hidden_width;

  ws.input.assign(input.begin(), input.end());
  ws.pre1.assign(static_cast<std::size_t>(c1) * rows * cols, 0.0);
  ws.act1.assign(ws.pre1.size(), 0.0);
  ws.pool1.assign(static_cast<std::size_t>(c1) * pool1_rows_ * pool1_cols_, 0.0);
  ws.pre2.assign(static_cast<std::size_t>(c2) * pool1_rows_ * pool1_cols_, 0.0);
  ws.act2.assign(ws.pre2.size(), 0.0);
  ws.pool2.assign(static_cast<std::size_t>(flat_size_), 0.0);
  ws.hpre1.assign(static_cast<std::size_t>(h), 0.0);
  ws.hid1.assign(static_cast<std::size_t>(h), 0.0);
  ws.hpre2.assign(static_cast<std::size_t>(h), 0.0);
  ws.hid2.assign(static_cast<std::size_t>(h), 0.0);

  conv3x3(params.subspan(layout_.conv1_w), params.subspan(layout_.conv1_b), ws.input.data(), 2,
          rows, cols, ws.pre1.data(), c1);
  apply_silu(ws.pre1.data(), ws.act1.data(), ws.pre1.size());
  avgpool2x2(ws.act1.data(), c1, rows, cols, ws.pool1.data());
  conv3x3(params.subspan(layout_.conv2_w), params.subspan(layout_.conv2_b), ws.pool1.data(), c1,
          pool1_rows_, pool1_cols_, ws.pre2.data(), c2);
  apply_silu(ws.pre2.data(), ws.act2.data(), ws.pre2.size());
  avgpool2x2(ws.act2.data(), c2, pool1_rows_, pool1_cols_, ws.pool2.data());
  fc(params.subspan(layout_.fc1_w), params.subspan(layout_.fc1_b), ws.pool2.data(), flat_size_,
     ws.hpre1.data(), h);
  apply_silu(ws.hpre1.data(), ws.hid1.data(), ws.hpre1.size());
  fc(params.subspan(layout_.fc2_w), params.subspan(layout_.fc2_b), ws.hid1.data(), h,
     ws.hpre2.data(), h);
  apply_silu(ws.hpre2.data(), ws.hid2.data(), ws.hpre2.size());
  fc(params.subspan(layout_.head_w), params.subspan(layout_.head_b), ws.hid2.data(), h, ws.z, 3);
  // Logits clamped so the squashed heads stay strictly interior for inputs
  // of any magnitude: exp(-35) is still above the ulp of 1, so logistic(35)
  // rounds below one and softplus(-35) stays positive.
  for (double& z : ws.z) z = std::clamp(z, -35.0, 35.0);

  HeadValues out;
  out.theta_rad = 0.5 * kPi * logistic(ws.z[0]);
  out.sigma2 = softplus(ws.z[1]) * config_.scale_sigma;
  out.xi = softplus(ws.z[2]) * config_.scale_xi;
  return out;
}

void CompactNet::backward(std::span<const double> params, NetWorkspace& ws, const HeadGrad& hg,
                          std::span<double> grad) const {
  if (grad.size() != layout_.total)
    throw std::invalid_argument("CompactNet::backward: gradient size mismatch");
  const int rows = config_.input_rows;
  const int cols = config_.input_cols;
  const int c1 = config_.conv1_channels;
  const int c2 = config_.conv2_channels;
  const int h = config_.hidden_width;

  // Squash-stage chain rule.
  double dz[3];
  const double sig0 = logistic(ws.z[0]);
  dz[0] = hg.d_theta * 0.5 * kPi * sig0 * (1.0 - sig0);
  dz[1] = hg.d_sigma2 * logistic(ws.z[1]) * config_.scale_sigma;
  dz[2] = hg.d_xi * logistic(ws.z[2]) * config_.scale_xi;

  ws.g_hid2.assign(static_cast<std::size_t>(h), 0.0);
  ws.g_hid1.assign(static_cast<std::size_t>(h), 0.0);
  ws.g_pool2.assign(static_cast<std::size_t>(flat_size_), 0.0);
  ws.g_act2.assign(ws.act2.size(), 0.0);
  ws.g_pool1.assign(ws.pool1.size(), 0.0);
  ws.g_act1.assign(ws.act1.size(), 0.0);

  fc_backward(params.subspan(layout_.head_w), ws.hid2.data(), h, dz, 3,
              grad.data() + layout_.head_w, grad.data() + layout_.head_b, ws.g_hid2.data());

  silu_backward_inplace(ws.hpre2.data(), ws.g_hid2.data(), ws.g_hid2.size());
  fc_backward(params.subspan(layout_.fc2_w), ws.hid1.data(), h, ws.g_hid2.data(), h,
              grad.data() + layout_.fc2_w, grad.data() + layout_.fc2_b, ws.g_hid1.data());

  silu_backward_inplace(ws.hpre1.data(), ws.g_hid1.data(), ws.g_hid1.size());
  fc_backward(params.subspan(layout_.fc1_w), ws.pool2.data(), flat_size_, ws.g_hid1.data(), h,
              grad.data() + layout_.fc1_w, grad.data() + layout_.fc1_b, ws.g_pool2.data());

  avgpool2x2_backward(ws.g_pool2.data(), c2, pool1_rows_, pool1_cols_, ws.g_act2.data());
  silu_backward_inplace(ws.pre2.data(), ws.g_act2.data(), ws.g_act2.size());
  conv3x3_backward(params.subspan(layout_.conv2_w), ws.pool1.data(), c1, pool1_rows_, pool1_cols_,
                   ws.g_act2.data(), c2, grad.data() + layout_.conv2_w,
                   grad.data() + layout_.conv2_b, ws.g_pool1.data());

  avgpool2x2_backward(ws.g_pool1.data(), c1, rows, cols, ws.g_act1.data());
  silu_backward_inplace(ws.pre1.data(), ws.g_act1.data(), ws.g_act1.size());
  conv3x3_backward(params.subspan(layout_.conv1_w), ws.input.data(), 2, rows, cols,
                   ws.g_act1.data(), c1, grad.data() + layout_.conv1_w,
                   grad.data() + layout_.conv1_b, nullptr);
}

}  // namespace aod
