// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_SIGNAL_MODEL_HPP
#define AOD_SIGNAL_MODEL_HPP

#include <vector>

#include "aod/common.hpp"
#include "aod/rng.hpp"

namespace aod {

/// Uniform linear transmit array. Wavelength is always derived from the
/// carrier, never stored.
struct ArrayGeometry {
  int num_antennas = 8;                  // M
  double spacing_over_wavelength = 0.5;  // d / lambda
  double carrier_freq_hz = 28e9;         // f_c

  double wavelength() const { return kSpeedOfLight / carrier_freq_hz; }
  void validate() const;
};

/// One line-of-sight downlink scenario. The gain is typed complex even
/// though the standard generator produces real-positive values: estimators
/// must not assume zero phase.
struct Scenario {
  double theta_rad = 0.0;     // AoD, (0, pi/2)
  double range_m = 32.1;      // r
  double ref_range_m = 1.0;   // r0
  double pathloss_exp = 3.0;  // gamma
  Complex channel_gain_xi = 0.0;
  double noise_var_w = 0.0;  // sigma^2
  double tx_power_w = 0.0;   // P

  void validate() const;
};

/// Per-slot beamformers plus per-block scalar symbols; the pilot matrix of
/// block q has row l equal to c_q * beamformer_l^T.
struct PilotSchedule {
  std::vector<CVec> beamformers;  // L vectors of length M
  CVec block_symbols;             // Q entries c^(q)

  int num_slots() const { return static_cast<int>(beamformers.size()); }    // L
  int num_blocks() const { return static_cast<int>(block_symbols.size()); }  // Q
  int total_observations() const { return num_slots() * num_blocks(); }      // T = QL

  /// Beamformer matrix B (M x L), column l = beamformer l.
  CMat beamformer_matrix() const;

  /// Pilot matrix X^(q) (L x M), row l = c_q * beamformer_l^T.
  CMat pilot_matrix(int q) const;

  void validate() const;
};

/// Received blocks, column q = y^(q). L x Q.
struct ObservationBatch {
  CMat y;

  int num_slots() const { return static_cast<int>(y.rows()); }
  int num_blocks() const { return static_cast<int>(y.cols()); }
};

/// Hermitian PSD sample covariance over blocks, L x L.
struct SampleCovariance {
  CMat c_hat;
};

/// ULA steering vector, entry m = exp(-j 2 pi m (d/lambda) cos(theta)).
CVec steering_vector(const ArrayGeometry& geometry, double theta_rad);

/// Elementwise derivative of the steering vector with respect to theta:
/// entry m = j 2 pi m (d/lambda) sin(theta) * exp(-j 2 pi m (d/lambda) cos(theta)).
CVec steering_derivative(const ArrayGeometry& geometry, double theta_rad);

/// Free-space-referenced gain sqrt((c0 / (4 pi f_c r0))^2 * (r0 / r)^gamma).
double channel_gain(double range_m, double ref_range_m, double pathloss_exp,
                    double carrier_freq_hz);

/// Noise power in watts from a PSD in dBm/Hz over a bandwidth in Hz.
double noise_variance_watts(double psd_dbm_per_hz, double bandwidth_hz);

/// Unit-modulus-phase beamformers x_{l,m} = sqrt(P/M) exp(j pi rho_{l,m});
/// every vector carries transmit power P exactly. `phases` is L x M.
std::vector<CVec> make_beamformers(double tx_power_w, int num_antennas,
                                   const Eigen::MatrixXd& phases);

/// Draws y^(q) = xi X^(q) a(theta) + w^(q) with w ~ CN(0, sigma^2 I) for
/// every block. Identical seeds reproduce identical batches bit-for-bit.
ObservationBatch simulate_observations(const ArrayGeometry& geometry, const Scenario& scenario,
                                       const PilotSchedule& schedule, Rng& rng);

/// C_hat = (1/Q) sum_q y^(q) y^(q)^H.
SampleCovariance sample_covariance(const ObservationBatch& batch);

}  // namespace aod

#endif  // AOD_SIGNAL_MODEL_HPP
