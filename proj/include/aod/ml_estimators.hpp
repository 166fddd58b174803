// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_ML_ESTIMATORS_HPP
#define AOD_ML_ESTIMATORS_HPP

#include <functional>
#include <vector>

#include "aod/signal_model.hpp"

namespace aod {

/// Search grid for the one-dimensional angle scans.
struct GridConfig {
  double theta_lo_rad = 1e-3;
  double theta_hi_rad = kPi / 2.0 - 1e-3;
  int num_points = 512;
  double refine_tol_rad = 1e-5;

  void validate() const;
  std::vector<double> points() const;
};

struct DmlFit {
  double theta_hat_rad = 0.0;
  Complex xi_hat = 0.0;
  double residual = 0.0;  // least-squares objective at the fit
};

struct SmlFit {
  double theta_hat_rad = 0.0;
  double xi2_hat = 0.0;     // |xi|^2
  double sigma2_hat = 0.0;  // noise variance
  double nll = 0.0;         // Gaussian negative log-likelihood at the fit
};

/// Model covariance C_y = R_X(theta) + sigma^2 I with rank(R_X) <= 1.
struct ModelCovariance {
  CMat c_y;
  CMat r_x;
  double sigma2 = 0.0;
};

/// Golden-section minimization of f on [lo, hi] down to an interval of
/// width tol; returns the midpoint of the final bracket.
double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                          double tol);

/// Least-squares objective sum_q ||y^(q) - xi X^(q) a(theta)||^2.
double dml_residual(const ArrayGeometry& geometry, double theta_rad, Complex xi,
                    const PilotSchedule& schedule, const ObservationBatch& batch);

/// Closed-form gain minimizing the least-squares objective at fixed theta:
/// xi(theta) = b^H vec(Y) / ||b||^2 with b the stacked pilot response.
/// Throws DegenerateDirectionError when ||b||^2 < 1e-30.
Complex dml_xi_closed_form(const ArrayGeometry& geometry, double theta_rad,
                           const PilotSchedule& schedule, const ObservationBatch& batch);

/// Deterministic grid-then-golden-section solver for the least-squares
/// problem with the gain eliminated in closed form at every angle.
DmlFit dml_estimate(const ArrayGeometry& geometry, const PilotSchedule& schedule,
                    const ObservationBatch& batch, const GridConfig& grid,
                    Execution exec = Execution::kParallel);

/// C_y(theta, |xi|^2, sigma^2) from the beamformers only (no symbols):
/// [R_X]_{l,l'} = |xi|^2 (a^T x_l)(a^T x_{l'})^*.
ModelCovariance model_covariance(const ArrayGeometry& geometry, double theta_rad, double xi2,
                                 double sigma2, const std::vector<CVec>& beamformers);

/// ln det(C_y) + tr(C_y^{-1} C_hat) via a Cholesky factorization;
/// throws NotPositiveDefiniteError if the factorization fails.
double sml_nll(const ArrayGeometry& geometry, double theta_rad, double xi2, double sigma2,
               const std::vector<CVec>& beamformers, const CMat& c_hat);

/// Stochastic-ML solver: outer angle grid, inner coordinate descent over
/// (|xi|^2, sigma^2) with log-spaced bracketing, golden-section refinement
/// of the winning angle.
SmlFit sml_estimate(const ArrayGeometry& geometry, const std::vector<CVec>& beamformers,
                    const ObservationBatch& batch, const GridConfig& grid, int inner_iters = 3,
                    Execution exec = Execution::kParallel);

namespace detail {

/// Per-angle profile of the least-squares objective with the gain
/// eliminated; used by both the estimator and the DFT-lattice benchmark.
struct DmlProfilePoint {
  double residual = 0.0;
  Complex xi = 0.0;
  bool degenerate = false;
};

DmlProfilePoint dml_profile_at(const ArrayGeometry& geometry, double theta_rad,
                               const PilotSchedule& schedule, const ObservationBatch& batch);

/// Coordinate-descent result for the inner SML subproblem at fixed theta.
struct SmlInnerFit {
  double xi2 = 0.0;
  double sigma2 = 0.0;
  double nll = 0.0;
};

SmlInnerFit sml_inner_descent(const ArrayGeometry& geometry, double theta_rad,
                              const std::vector<CVec>& beamformers, const CMat& c_hat,
                              int inner_iters, const SmlInnerFit* warm_start = nullptr);

}  // namespace detail

}  // namespace aod

#endif  // AOD_ML_ESTIMATORS_HPP
