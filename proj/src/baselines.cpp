// SPDX-License-Identifier: Apache-2.0
#include "aod/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace aod {

double dft_estimate(const ArrayGeometry& geometry, const PilotSchedule& schedule,
                    const ObservationBatch& batch, int n_fft) {
  if (n_fft < geometry.num_antennas)
    throw std::invalid_argument("dft_estimate: n_fft must be >= num_antennas");

  const double lambda_over_d = 1.0 / geometry.spacing_over_wavelength;
  double best_residual = std::numeric_limits<double>::infinity();
  double best_theta = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < n_fft; ++k) {
    // omega_k = 2 pi k / n_fft  ->  cos(theta_k) = omega_k lambda / (2 pi d).
    const double cos_theta = (static_cast<double>(k) / n_fft) * lambda_over_d;
    if (!(cos_theta > 0.0 && cos_theta < 1.0)) continue;  // theta in (0, pi/2) only
    const double theta = std::acos(cos_theta);
    const auto point = detail::dml_profile_at(geometry, theta, schedule, batch);
    if (point.degenerate) continue;
    if (point.residual < best_residual) {
      best_residual = point.residual;
      best_theta = theta;
    }
  }
  if (!std::isfinite(best_residual))
    throw DegenerateDirectionError("dft_estimate: no usable lattice candidate");
  return best_theta;
}

UplinkSnapshots uplink_dual_simulate(double theta_rad, int num_rx, int num_snapshots,
                                     double snapshot_power_w, double sigma2,
                                     double spacing_over_wavelength, Rng& rng) {
  if (num_rx < 2) throw std::invalid_argument("uplink_dual_simulate: need at least 2 antennas");
  if (num_snapshots < 1) throw std::invalid_argument("uplink_dual_simulate: need Q >= 1");
  ArrayGeometry rx_array;
  rx_array.num_antennas = num_rx;
  rx_array.spacing_over_wavelength = spacing_over_wavelength;
  const CVec a = steering_vector(rx_array, theta_rad);

  const double sig_amp = std::sqrt(snapshot_power_w);
  const double noise_amp = std::sqrt(sigma2);
  UplinkSnapshots snap;
  snap.z.resize(num_rx, num_snapshots);
  for (int q = 0; q < num_snapshots; ++q) {
    const Complex s = sig_amp * rng.cnormal();
    for (int l = 0; l < num_rx; ++l) snap.z(l, q) = s * a(l) + noise_amp * rng.cnormal();
  }
  return snap;
}

namespace {

CMat snapshot_covariance(const UplinkSnapshots& snapshots) {
  const double q = static_cast<double>(snapshots.num_snapshots());
  CMat c = (snapshots.z * snapshots.z.adjoint()) / q;
  return ((c + c.adjoint().eval()) * 0.5).eval();
}

}  // namespace

double music_estimate(const UplinkSnapshots& snapshots, double spacing_over_wavelength,
                      int n_grid, double refine_tol_rad) {
  const int l = snapshots.num_antennas();
  if (l < 2) throw std::invalid_argument("music_estimate: need at least 2 antennas");
  if (n_grid < 2) throw std::invalid_argument("music_estimate: need at least 2 grid points");

  const CMat cov = snapshot_covariance(snapshots);
  Eigen::SelfAdjointEigenSolver<CMat> eig(cov);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("music_estimate: eigendecomposition failed");
  // Eigenvalues are ascending; the L-1 smallest span the noise subspace.
  const CMat noise_subspace = eig.eigenvectors().leftCols(l - 1);

  ArrayGeometry rx_array;
  rx_array.num_antennas = l;
  rx_array.spacing_over_wavelength = spacing_over_wavelength;
  const auto null_power = [&](double theta) {
    return (noise_subspace.adjoint() * steering_vector(rx_array, theta)).squaredNorm();
  };

  const double lo = 1e-6;
  const double hi = kPi / 2.0 - 1e-6;
  const double step = (hi - lo) / (n_grid - 1);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_grid; ++i) {
    const double val = null_power(lo + i * step);
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  const double a = lo + std::max(0, best - 1) * step;
  const double b = lo + std::min(n_grid - 1, best + 1) * step;
  return golden_section_min(null_power, a, b, refine_tol_rad);
}

double esprit_estimate(const UplinkSnapshots& snapshots, double spacing_over_wavelength) {
  const int l = snapshots.num_antennas();
  if (l < 2) throw std::invalid_argument("esprit_estimate: need at least 2 antennas");

  const CMat cov = snapshot_covariance(snapshots);
  Eigen::SelfAdjointEigenSolver<CMat> eig(cov);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("esprit_estimate: eigendecomposition failed");
  const CVec u = eig.eigenvectors().col(l - 1);  // principal eigenvector

  const CVec u1 = u.head(l - 1);
  const CVec u2 = u.tail(l - 1);
  const Complex denom = (u1.adjoint() * u1).value();
  if (std::abs(denom) < 1e-30)
    throw std::runtime_error("esprit_estimate: degenerate leading subarray");
  const Complex phi = (u1.adjoint() * u2).value() / denom;

  // Noise-free invariance: arg(phi) = -2 pi (d/lambda) cos(theta).
  double cos_theta = -std::arg(phi) / (2.0 * kPi * spacing_over_wavelength);
  cos_theta = std::clamp(cos_theta, -1.0, 1.0);
  double theta = std::acos(cos_theta);
  return std::clamp(theta, 1e-9, kPi / 2.0 - 1e-9);
}

}  // namespace aod
