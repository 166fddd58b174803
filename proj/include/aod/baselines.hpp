// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_BASELINES_HPP
#define AOD_BASELINES_HPP

#include "aod/ml_estimators.hpp"
#include "aod/signal_model.hpp"

namespace aod {

/// Q snapshots at an L-element uplink ULA receiving the UE's pilot. The
/// snapshot power budget is whatever the caller passes; fair comparison
/// with the downlink applies the downlink's |xi|^2 P at the call site.
struct UplinkSnapshots {
  CMat z;  // L x Q

  int num_antennas() const { return static_cast<int>(z.rows()); }
  int num_snapshots() const { return static_cast<int>(z.cols()); }
};

/// DFT-lattice benchmark: evaluates the gain-eliminated least-squares
/// residual on the spatial-frequency lattice omega_k = 2 pi k / n_fft
/// (only candidates with cos(theta) in (0, 1)) and returns the best lattice
/// angle. Deliberately coarse: no refinement.
double dft_estimate(const ArrayGeometry& geometry, const PilotSchedule& schedule,
                    const ObservationBatch& batch, int n_fft);

/// Z column q = s_q a_L(theta) + n_q with s_q ~ CN(0, snapshot_power_w) and
/// n_q ~ CN(0, sigma2 I).
UplinkSnapshots uplink_dual_simulate(double theta_rad, int num_rx, int num_snapshots,
                                     double snapshot_power_w, double sigma2,
                                     double spacing_over_wavelength, Rng& rng);

/// Single-source MUSIC on the snapshot covariance: noise subspace from the
/// L-1 smallest eigenvalues, pseudospectrum grid search over (0, pi/2) with
/// golden-section peak refinement.
double music_estimate(const UplinkSnapshots& snapshots, double spacing_over_wavelength,
                      int n_grid, double refine_tol_rad = 1e-6);

/// Single-source least-squares ESPRIT from the principal eigenvector's
/// shift invariance; the result is clamped into (0, pi/2).
double esprit_estimate(const UplinkSnapshots& snapshots, double spacing_over_wavelength);

}  // namespace aod

#endif  // AOD_BASELINES_HPP
