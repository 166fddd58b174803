// SPDX-License-Identifier: Apache-2.0
#include "aod/crlb.hpp"

#include <cmath>

namespace aod {

FisherInfo fisher_information(const ArrayGeometry& geometry, const Scenario& scenario,
                              const PilotSchedule& schedule) {
  if (!(scenario.noise_var_w > 0.0))
    throw std::invalid_argument("fisher_information: noise variance must be > 0");
  schedule.validate();

  const int l_slots = schedule.num_slots();
  const int q_blocks = schedule.num_blocks();
  const int t = l_slots * q_blocks;

  const CVec a = steering_vector(geometry, scenario.theta_rad);
  const CVec da = steering_derivative(geometry, scenario.theta_rad);
  CVec v(l_slots), dv(l_slots);
  for (int l = 0; l < l_slots; ++l) {
    v(l) = schedule.beamformers[static_cast<std::size_t>(l)].transpose() * a;
    dv(l) = schedule.beamformers[static_cast<std::size_t>(l)].transpose() * da;
  }

  CMat jac(t, 3);
  for (int q = 0; q < q_blocks; ++q) {
    const Complex c = schedule.block_symbols(q);
    for (int l = 0; l < l_slots; ++l) {
      const int row = q * l_slots + l;
      jac(row, 0) = scenario.channel_gain_xi * c * dv(l);
      jac(row, 1) = c * v(l);
      jac(row, 2) = Complex(0.0, 1.0) * c * v(l);
    }
  }

  FisherInfo info;
  info.f = (2.0 / scenario.noise_var_w) * (jac.adjoint() * jac).real();
  info.f = 0.5 * (info.f + info.f.transpose().eval());  // kill rounding skew
  return info;
}

double scrlb_theta_degrees(const ArrayGeometry& geometry, const Scenario& scenario,
                           const PilotSchedule& schedule) {
  const FisherInfo info = fisher_information(geometry, scenario, schedule);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(info.f);
  if (!lu.isInvertible())
    throw SingularFimError("scrlb_theta_degrees: Fisher information is singular");
  const Eigen::Matrix3d inv = lu.inverse();
  const double var_theta = inv(0, 0);
  if (!(var_theta > 0.0))
    throw SingularFimError("scrlb_theta_degrees: nonpositive variance bound");
  return std::sqrt(var_theta) * 180.0 / kPi;
}

}  // namespace aod
