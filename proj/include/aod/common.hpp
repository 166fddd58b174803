// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_COMMON_HPP
#define AOD_COMMON_HPP

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace aod {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;

enum class Execution { kSerial, kParallel };

/// Degenerate geometry at a grid point: the stacked pilot response is
/// (numerically) zero, so the gain has no unique least-squares value.
class DegenerateDirectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization of a model covariance failed; the requested
/// noise floor is too small for the matrix to be numerically PD.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fisher information is singular (e.g. endpoint geometry with a'(theta)=0).
class SingularFimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

}  // namespace aod

#endif  // AOD_COMMON_HPP
