// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_CRLB_HPP
#define AOD_CRLB_HPP

#include "aod/signal_model.hpp"

namespace aod {

/// Fisher information over (theta, Re xi, Im xi) for the deterministic
/// Gaussian observation model with known noise variance.
struct FisherInfo {
  Eigen::Matrix3d f;
};

/// F = (2 / sigma^2) Re(J^H J) with Jacobian columns
///   d mu / d theta  = xi * stack_q(X^(q) a'(theta)),
///   d mu / d Re xi  = stack_q(X^(q) a(theta)),
///   d mu / d Im xi  = j * stack_q(X^(q) a(theta)).
FisherInfo fisher_information(const ArrayGeometry& geometry, const Scenario& scenario,
                              const PilotSchedule& schedule);

/// sqrt([F^{-1}]_{00}) in degrees; throws SingularFimError at degenerate
/// geometries (e.g. theta = 0 where a'(theta) vanishes).
double scrlb_theta_degrees(const ArrayGeometry& geometry, const Scenario& scenario,
                           const PilotSchedule& schedule);

}  // namespace aod

#endif  // AOD_CRLB_HPP
