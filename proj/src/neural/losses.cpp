// SPDX-License-Identifier: Apache-2.0
#include "aod/neural/losses.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace aod {

double dml_sample_loss(const ArrayGeometry& geometry, const CMat& pilot_feature, const CMat& y,
                       const HeadValues& heads, HeadGrad* grad) {
  const Eigen::Index cols = pilot_feature.cols();
  if (y.rows() * y.cols() != cols)
    throw std::invalid_argument("dml_sample_loss: Y and pilot feature sizes differ");

  const CVec a = steering_vector(geometry, heads.theta_rad);
  const CVec g = pilot_feature.transpose() * a;  // X^T a, length QL

  // vec(Y) is column-major, matching the feature's slot-fastest columns.
  CVec r(cols);
  {
    Eigen::Index k = 0;
    for (Eigen::Index q = 0; q < y.cols(); ++q)
      for (Eigen::Index l = 0; l < y.rows(); ++l) {
        r(k) = y(l, q) - heads.xi * g(k);
        ++k;
      }
  }
  const double loss = r.squaredNorm();

  if (grad != nullptr) {
    const CVec da = steering_derivative(geometry, heads.theta_rad);
    const CVec dg = pilot_feature.transpose() * da;  // X^T a'
    grad->d_theta = -2.0 * heads.xi * (dg.adjoint() * r).value().real();
    grad->d_xi = -2.0 * (g.adjoint() * r).value().real();
    grad->d_sigma2 = 0.0;  // head present but unused by this loss
  }
  return loss;
}

CMat beamformers_from_feature(const CMat& pilot_feature, int num_slots) {
  if (num_slots < 1 || pilot_feature.cols() < num_slots)
    throw std::invalid_argument("beamformers_from_feature: bad slot count");
  return pilot_feature.leftCols(num_slots);
}

double sml_sample_loss(const ArrayGeometry& geometry, const CMat& beamformer_matrix,
                       const CMat& c_hat, const HeadValues& heads, HeadGrad* grad) {
  const Eigen::Index l = beamformer_matrix.cols();
  if (c_hat.rows() != l || c_hat.cols() != l)
    throw std::invalid_argument("sml_sample_loss: covariance/beamformer dimension mismatch");

  const auto clamp_out = [&]() {
    if (grad != nullptr) *grad = HeadGrad{};
    return kSmlLossClamp;
  };
  if (!(heads.sigma2 > 0.0) || !std::isfinite(heads.sigma2) || !std::isfinite(heads.xi))
    return clamp_out();

  const CVec a = steering_vector(geometry, heads.theta_rad);
  const CVec v = beamformer_matrix.transpose() * a;  // slot responses
  const double xi2 = heads.xi * heads.xi;
  const CMat c_y = xi2 * (v * v.adjoint()) + heads.sigma2 * CMat::Identity(l, l);

  Eigen::LLT<CMat> llt(c_y);
  if (llt.info() != Eigen::Success) return clamp_out();

  double log_det = 0.0;
  const auto& factor = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l; ++i) log_det += 2.0 * std::log(factor(i, i).real());
  const CMat c_inv_chat = llt.solve(c_hat);
  const double loss = log_det + c_inv_chat.trace().real();
  if (!std::isfinite(loss)) return clamp_out();

  if (grad != nullptr) {
    // d/dp [ln det C + tr(C^{-1} Chat)] = tr((C^{-1} - C^{-1} Chat C^{-1}) dC/dp).
    const CMat c_inv = llt.solve(CMat::Identity(l, l));
    const CMat adj = c_inv - c_inv_chat * c_inv;  // Hermitian
    const CVec da = steering_derivative(geometry, heads.theta_rad);
    const CVec dv = beamformer_matrix.transpose() * da;
    const Complex v_adj_dv = (v.adjoint() * (adj * dv)).value();
    const double v_adj_v = (v.adjoint() * (adj * v)).value().real();
    grad->d_theta = 2.0 * xi2 * v_adj_dv.real();     // dC/dtheta = xi2 (v' v^H + v v'^H)
    grad->d_xi = 2.0 * heads.xi * v_adj_v;           // dC/dxi    = 2 xi v v^H
    grad->d_sigma2 = adj.trace().real();             // dC/dsigma2 = I
    if (!std::isfinite(grad->d_theta) || !std::isfinite(grad->d_xi) ||
        !std::isfinite(grad->d_sigma2))
      return clamp_out();
  }
  return loss;
}

}  // namespace aod
