// SPDX-License-Identifier: Apache-2.0
#include "aod/signal_model.hpp"

#include <cmath>

namespace aod {

void ArrayGeometry::validate() const {
  if (num_antennas < 1) throw std::invalid_argument("ArrayGeometry: num_antennas must be >= 1");
  if (spacing_over_wavelength <= 0.0)
    throw std::invalid_argument("ArrayGeometry: spacing_over_wavelength must be > 0");
  if (carrier_freq_hz <= 0.0)
    throw std::invalid_argument("ArrayGeometry: carrier_freq_hz must be > 0");
}

void Scenario::validate() const {
  if (noise_var_w <= 0.0) throw std::invalid_argument("Scenario: noise_var_w must be > 0");
  if (tx_power_w <= 0.0) throw std::invalid_argument("Scenario: tx_power_w must be > 0");
  if (!(range_m >= ref_range_m) || !(ref_range_m > 0.0))
    throw std::invalid_argument("Scenario: require range_m >= ref_range_m > 0");
}

CMat PilotSchedule::beamformer_matrix() const {
  const int l_slots = num_slots();
  const int m = l_slots > 0 ? static_cast<int>(beamformers.front().size()) : 0;
  CMat b(m, l_slots);
  for (int l = 0; l < l_slots; ++l) b.col(l) = beamformers[l];
  return b;
}

CMat PilotSchedule::pilot_matrix(int q) const {
  const int l_slots = num_slots();
  const int m = l_slots > 0 ? static_cast<int>(beamformers.front().size()) : 0;
  CMat x(l_slots, m);
  const Complex c = block_symbols(q);
  for (int l = 0; l < l_slots; ++l) x.row(l) = c * beamformers[l].transpose();
  return x;
}

void PilotSchedule::validate() const {
  if (beamformers.empty()) throw std::invalid_argument("PilotSchedule: no beamformers");
  if (block_symbols.size() == 0) throw std::invalid_argument("PilotSchedule: no block symbols");
  const auto m = beamformers.front().size();
  for (const auto& v : beamformers)
    if (v.size() != m) throw std::invalid_argument("PilotSchedule: ragged beamformers");
}

CVec steering_vector(const ArrayGeometry& geometry, double theta_rad) {
  geometry.validate();
  const int m = geometry.num_antennas;
  const double phase_step = -2.0 * kPi * geometry.spacing_over_wavelength * std::cos(theta_rad);
  CVec a(m);
  for (int i = 0; i < m; ++i) {
    const double phi = phase_step * i;
    a(i) = Complex(std::cos(phi), std::sin(phi));
  }
  a(0) = Complex(1.0, 0.0);  // zero-index phase is exact
  return a;
}

CVec steering_derivative(const ArrayGeometry& geometry, double theta_rad) {
  geometry.validate();
  const int m = geometry.num_antennas;
  const double k = 2.0 * kPi * geometry.spacing_over_wavelength;
  const double phase_step = -k * std::cos(theta_rad);
  const double sin_theta = std::sin(theta_rad);
  CVec da(m);
  for (int i = 0; i < m; ++i) {
    const double phi = phase_step * i;
    const Complex a_i(std::cos(phi), std::sin(phi));
    da(i) = Complex(0.0, k * i * sin_theta) * a_i;
  }
  return da;
}

double channel_gain(double range_m, double ref_range_m, double pathloss_exp,
                    double carrier_freq_hz) {
  if (ref_range_m <= 0.0) throw std::domain_error("channel_gain: ref_range_m must be > 0");
  if (range_m < ref_range_m) throw std::domain_error("channel_gain: range_m must be >= ref_range_m");
  if (carrier_freq_hz <= 0.0) throw std::domain_error("channel_gain: carrier_freq_hz must be > 0");
  const double free_space = kSpeedOfLight / (4.0 * kPi * carrier_freq_hz * ref_range_m);
  return std::sqrt(free_space * free_space * std::pow(ref_range_m / range_m, pathloss_exp));
}

double noise_variance_watts(double psd_dbm_per_hz, double bandwidth_hz) {
  if (bandwidth_hz <= 0.0) throw std::invalid_argument("noise_variance_watts: bandwidth must be > 0");
  const double total_dbm = psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
  return std::pow(10.0, (total_dbm - 30.0) / 10.0);
}

std::vector<CVec> make_beamformers(double tx_power_w, int num_antennas,
                                   const Eigen::MatrixXd& phases) {
  if (tx_power_w <= 0.0) throw std::invalid_argument("make_beamformers: tx_power_w must be > 0");
  if (phases.cols() != num_antennas)
    throw std::invalid_argument("make_beamformers: phases must have num_antennas columns");
  const double amp = std::sqrt(tx_power_w / num_antennas);
  std::vector<CVec> out(static_cast<std::size_t>(phases.rows()));
  for (Eigen::Index l = 0; l < phases.rows(); ++l) {
    CVec v(num_antennas);
    for (int m = 0; m < num_antennas; ++m) {
      const double phi = kPi * phases(l, m);
      v(m) = amp * Complex(std::cos(phi), std::sin(phi));
    }
    out[static_cast<std::size_t>(l)] = std::move(v);
  }
  return out;
}

ObservationBatch simulate_observations(const ArrayGeometry& geometry, const Scenario& scenario,
                                       const PilotSchedule& schedule, Rng& rng) {
  schedule.validate();
  const int l_slots = schedule.num_slots();
  const int q_blocks = schedule.num_blocks();
  if (schedule.beamformers.front().size() != geometry.num_antennas)
    throw std::invalid_argument("simulate_observations: beamformer length != num_antennas");

  const CVec a = steering_vector(geometry, scenario.theta_rad);
  // v_l = beamformer_l^T a; block q contributes xi * c_q * v.
  CVec v(l_slots);
  for (int l = 0; l < l_slots; ++l) v(l) = schedule.beamformers[l].transpose() * a;

  const double noise_amp = std::sqrt(scenario.noise_var_w);
  ObservationBatch batch;
  batch.y.resize(l_slots, q_blocks);
  for (int q = 0; q < q_blocks; ++q) {
    const Complex scale = scenario.channel_gain_xi * schedule.block_symbols(q);
    for (int l = 0; l < l_slots; ++l) {
      batch.y(l, q) = scale * v(l) + noise_amp * rng.cnormal();
    }
  }
  return batch;
}

SampleCovariance sample_covariance(const ObservationBatch& batch) {
  const int q_blocks = batch.num_blocks();
  if (q_blocks < 1) throw std::invalid_argument("sample_covariance: need Q >= 1");
  SampleCovariance cov;
  cov.c_hat = (batch.y * batch.y.adjoint()) / static_cast<double>(q_blocks);
  // Eliminate the asymmetric rounding residue so downstream factorizations
  // see an exactly Hermitian matrix.
  cov.c_hat = (cov.c_hat + cov.c_hat.adjoint().eval()) * 0.5;
  return cov;
}

}  // namespace aod
