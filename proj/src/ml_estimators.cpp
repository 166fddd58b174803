// SPDX-License-Identifier: Apache-2.0
#include "aod/ml_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace aod {

void GridConfig::validate() const {
  if (!(theta_lo_rad < theta_hi_rad)) throw std::invalid_argument("GridConfig: lo must be < hi");
  if (num_points < 2) throw std::invalid_argument("GridConfig: need at least 2 grid points");
  if (!(refine_tol_rad > 0.0)) throw std::invalid_argument("GridConfig: refine_tol must be > 0");
}

std::vector<double> GridConfig::points() const {
  validate();
  std::vector<double> pts(static_cast<std::size_t>(num_points));
  const double step = (theta_hi_rad - theta_lo_rad) / (num_points - 1);
  for (int i = 0; i < num_points; ++i) pts[static_cast<std::size_t>(i)] = theta_lo_rad + i * step;
  return pts;
}

double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

namespace {

// Slot responses v_l = x_l^T a(theta); the stacked pilot response over all
// blocks factors as b = c (x) v, which keeps the per-angle scan at O(LM + QL).
CVec slot_responses(const ArrayGeometry& geometry, double theta_rad,
                    const std::vector<CVec>& beamformers) {
  const CVec a = steering_vector(geometry, theta_rad);
  CVec v(static_cast<Eigen::Index>(beamformers.size()));
  for (std::size_t l = 0; l < beamformers.size(); ++l)
    v(static_cast<Eigen::Index>(l)) = beamformers[l].transpose() * a;
  return v;
}

}  // namespace

double dml_residual(const ArrayGeometry& geometry, double theta_rad, Complex xi,
                    const PilotSchedule& schedule, const ObservationBatch& batch) {
  const int l_slots = schedule.num_slots();
  const int q_blocks = schedule.num_blocks();
  if (batch.num_slots() != l_slots || batch.num_blocks() != q_blocks)
    throw std::invalid_argument("dml_residual: batch/schedule dimension mismatch");
  const CVec v = slot_responses(geometry, theta_rad, schedule.beamformers);
  double acc = 0.0;
  for (int q = 0; q < q_blocks; ++q) {
    const Complex scale = xi * schedule.block_symbols(q);
    for (int l = 0; l < l_slots; ++l) {
      acc += std::norm(batch.y(l, q) - scale * v(l));
    }
  }
  return acc;
}

namespace detail {

DmlProfilePoint dml_profile_at(const ArrayGeometry& geometry, double theta_rad,
                               const PilotSchedule& schedule, const ObservationBatch& batch) {
  const int l_slots = schedule.num_slots();
  const int q_blocks = schedule.num_blocks();
  const CVec v = slot_responses(geometry, theta_rad, schedule.beamformers);

  // ||b||^2 = (sum_q |c_q|^2)(sum_l |v_l|^2),  b^H vec(Y) = sum_q c_q^* (v^H y^(q)).
  const double v_norm2 = v.squaredNorm();
  const double c_norm2 = schedule.block_symbols.squaredNorm();
  const double b_norm2 = c_norm2 * v_norm2;

  DmlProfilePoint out;
  if (b_norm2 < 1e-30) {
    out.degenerate = true;
    out.residual = std::numeric_limits<double>::infinity();
    return out;
  }

  Complex b_dot_y = 0.0;
  for (int q = 0; q < q_blocks; ++q) {
    Complex vy = 0.0;
    for (int l = 0; l < l_slots; ++l) vy += std::conj(v(l)) * batch.y(l, q);
    b_dot_y += std::conj(schedule.block_symbols(q)) * vy;
  }
  out.xi = b_dot_y / b_norm2;

  double acc = 0.0;
  for (int q = 0; q < q_blocks; ++q) {
    const Complex scale = out.xi * schedule.block_symbols(q);
    for (int l = 0; l < l_slots; ++l) acc += std::norm(batch.y(l, q) - scale * v(l));
  }
  out.residual = acc;
  return out;
}

}  // namespace detail

Complex dml_xi_closed_form(const ArrayGeometry& geometry, double theta_rad,
                           const PilotSchedule& schedule, const ObservationBatch& batch) {
  const auto point = detail::dml_profile_at(geometry, theta_rad, schedule, batch);
  if (point.degenerate)
    throw DegenerateDirectionError("dml_xi_closed_form: beamformers orthogonal to a(theta)");
  return point.xi;
}

DmlFit dml_estimate(const ArrayGeometry& geometry, const PilotSchedule& schedule,
                    const ObservationBatch& batch, const GridConfig& grid, Execution exec) {
  const std::vector<double> thetas = grid.points();
  const int n = static_cast<int>(thetas.size());
  std::vector<detail::DmlProfilePoint> profile(static_cast<std::size_t>(n));

  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
      profile[static_cast<std::size_t>(i)] =
          detail::dml_profile_at(geometry, thetas[static_cast<std::size_t>(i)], schedule, batch);
  } else {
    for (int i = 0; i < n; ++i)
      profile[static_cast<std::size_t>(i)] =
          detail::dml_profile_at(geometry, thetas[static_cast<std::size_t>(i)], schedule, batch);
  }

  int best = -1;
  for (int i = 0; i < n; ++i) {
    const auto& p = profile[static_cast<std::size_t>(i)];
    if (p.degenerate) continue;
    if (best < 0 || p.residual < profile[static_cast<std::size_t>(best)].residual) best = i;
  }
  if (best < 0) throw DegenerateDirectionError("dml_estimate: every grid point is degenerate");

  const double lo = thetas[static_cast<std::size_t>(std::max(0, best - 1))];
  const double hi = thetas[static_cast<std::size_t>(std::min(n - 1, best + 1))];
  const auto objective = [&](double theta) {
    return detail::dml_profile_at(geometry, theta, schedule, batch).residual;
  };
  const double refined = golden_section_min(objective, lo, hi, grid.refine_tol_rad);

  auto refined_point = detail::dml_profile_at(geometry, refined, schedule, batch);
  const auto& winner = profile[static_cast<std::size_t>(best)];
  DmlFit fit;
  if (!refined_point.degenerate && refined_point.residual <= winner.residual) {
    fit.theta_hat_rad = refined;
    fit.xi_hat = refined_point.xi;
    fit.residual = refined_point.residual;
  } else {
    fit.theta_hat_rad = thetas[static_cast<std::size_t>(best)];
    fit.xi_hat = winner.xi;
    fit.residual = winner.residual;
  }
  return fit;
}

ModelCovariance model_covariance(const ArrayGeometry& geometry, double theta_rad, double xi2,
                                 double sigma2, const std::vector<CVec>& beamformers) {
  if (xi2 < 0.0) throw std::invalid_argument("model_covariance: xi2 must be >= 0");
  if (sigma2 < 0.0) throw std::invalid_argument("model_covariance: sigma2 must be >= 0");
  const CVec v = slot_responses(geometry, theta_rad, beamformers);
  const Eigen::Index l = v.size();
  ModelCovariance mc;
  mc.r_x = xi2 * (v * v.adjoint());
  mc.c_y = mc.r_x + sigma2 * CMat::Identity(l, l);
  mc.sigma2 = sigma2;
  return mc;
}

double sml_nll(const ArrayGeometry& geometry, double theta_rad, double xi2, double sigma2,
               const std::vector<CVec>& beamformers, const CMat& c_hat) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sml_nll: sigma2 must be > 0");
  const ModelCovariance mc = model_covariance(geometry, theta_rad, xi2, sigma2, beamformers);
  Eigen::LLT<CMat> llt(mc.c_y);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("sml_nll: covariance factorization failed");
  double log_det = 0.0;
  const auto& factor = llt.matrixLLT();
  for (Eigen::Index i = 0; i < factor.rows(); ++i) log_det += 2.0 * std::log(factor(i, i).real());
  const double trace_term = llt.solve(c_hat).trace().real();
  return log_det + trace_term;
}

namespace detail {

namespace {

// Rank-one structure of C = xi2 v v^H + sigma2 I gives the NLL in closed
// form; sml_nll's Cholesky route is the independent cross-check.
struct RankOneNll {
  double vn2 = 0.0;    // ||v||^2
  double vcv = 0.0;    // v^H C_hat v (real, >= 0 for PSD C_hat)
  double tr_c = 0.0;   // tr(C_hat)
  int dim = 0;

  double operator()(double xi2, double sigma2) const {
    const double spike = sigma2 + xi2 * vn2;
    const double log_det = (dim - 1) * std::log(sigma2) + std::log(spike);
    const double trace_term = (tr_c - xi2 * vcv / spike) / sigma2;
    return log_det + trace_term;
  }
};

// One coordinate update: log-spaced bracket scan over [lo, hi], then
// golden-section on the bracketing triple; never accepts a worse value.
template <typename F>
void refine_coordinate(const F& nll_of, double lo, double hi, double* coord, double* best_nll) {
  constexpr int kBracketPoints = 23;
  const double t_lo = std::log(lo);
  const double t_hi = std::log(hi);
  const double step = (t_hi - t_lo) / (kBracketPoints - 1);

  int best_i = -1;
  double best_val = *best_nll;  // current point competes with the bracket
  for (int i = 0; i < kBracketPoints; ++i) {
    const double val = nll_of(std::exp(t_lo + i * step));
    if (val < best_val) {
      best_val = val;
      best_i = i;
    }
  }
  if (best_i < 0) return;  // bracket never beat the current point

  const double a = t_lo + std::max(0, best_i - 1) * step;
  const double b = t_lo + std::min(kBracketPoints - 1, best_i + 1) * step;
  const double t_star =
      golden_section_min([&](double t) { return nll_of(std::exp(t)); }, a, b, 1e-4);

  const double cand = std::exp(t_star);
  const double cand_val = nll_of(cand);
  const double grid_val = nll_of(std::exp(t_lo + best_i * step));
  if (cand_val <= grid_val && cand_val < *best_nll) {
    *coord = cand;
    *best_nll = cand_val;
  } else if (grid_val < *best_nll) {
    *coord = std::exp(t_lo + best_i * step);
    *best_nll = grid_val;
  }
}

}  // namespace

SmlInnerFit sml_inner_descent(const ArrayGeometry& geometry, double theta_rad,
                              const std::vector<CVec>& beamformers, const CMat& c_hat,
                              int inner_iters, const SmlInnerFit* warm_start) {
  const CVec v = slot_responses(geometry, theta_rad, beamformers);
  RankOneNll nll;
  nll.vn2 = v.squaredNorm();
  nll.vcv = std::max(0.0, (v.adjoint() * c_hat * v).value().real());
  nll.tr_c = c_hat.trace().real();
  nll.dim = static_cast<int>(c_hat.rows());

  const double scale_ref = nll.tr_c / nll.dim;
  if (!(scale_ref > 0.0))
    throw std::invalid_argument("sml_inner_descent: sample covariance has no energy");
  const double lo = 1e-20 * scale_ref;
  const double hi = 1e+2 * scale_ref;

  SmlInnerFit fit;
  if (warm_start != nullptr) {
    fit = *warm_start;
    fit.xi2 = std::clamp(fit.xi2, lo, hi);
    fit.sigma2 = std::clamp(fit.sigma2, lo, hi);
  } else {
    fit.xi2 = lo;
    fit.sigma2 = scale_ref;
  }
  fit.nll = nll(fit.xi2, fit.sigma2);

  for (int round = 0; round < inner_iters; ++round) {
    refine_coordinate([&](double x) { return nll(x, fit.sigma2); }, lo, hi, &fit.xi2, &fit.nll);
    refine_coordinate([&](double s) { return nll(fit.xi2, s); }, lo, hi, &fit.sigma2, &fit.nll);
  }
  return fit;
}

}  // namespace detail

SmlFit sml_estimate(const ArrayGeometry& geometry, const std::vector<CVec>& beamformers,
                    const ObservationBatch& batch, const GridConfig& grid, int inner_iters,
                    Execution exec) {
  if (batch.num_blocks() < 1) throw std::invalid_argument("sml_estimate: need Q >= 1");
  const CMat c_hat = sample_covariance(batch).c_hat;
  const std::vector<double> thetas = grid.points();
  const int n = static_cast<int>(thetas.size());
  std::vector<detail::SmlInnerFit> fits(static_cast<std::size_t>(n));

  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
      fits[static_cast<std::size_t>(i)] = detail::sml_inner_descent(
          geometry, thetas[static_cast<std::size_t>(i)], beamformers, c_hat, inner_iters);
  } else {
    for (int i = 0; i < n; ++i)
      fits[static_cast<std::size_t>(i)] = detail::sml_inner_descent(
          geometry, thetas[static_cast<std::size_t>(i)], beamformers, c_hat, inner_iters);
  }

  int best = 0;
  for (int i = 1; i < n; ++i)
    if (fits[static_cast<std::size_t>(i)].nll < fits[static_cast<std::size_t>(best)].nll) best = i;

  const detail::SmlInnerFit winner = fits[static_cast<std::size_t>(best)];
  const double lo = thetas[static_cast<std::size_t>(std::max(0, best - 1))];
  const double hi = thetas[static_cast<std::size_t>(std::min(n - 1, best + 1))];
  const auto objective = [&](double theta) {
    return detail::sml_inner_descent(geometry, theta, beamformers, c_hat, inner_iters, &winner)
        .nll;
  };
  const double refined = golden_section_min(objective, lo, hi, grid.refine_tol_rad);
  const detail::SmlInnerFit refined_fit =
      detail::sml_inner_descent(geometry, refined, beamformers, c_hat, inner_iters, &winner);

  SmlFit out;
  if (refined_fit.nll <= winner.nll) {
    out.theta_hat_rad = refined;
    out.xi2_hat = refined_fit.xi2;
    out.sigma2_hat = refined_fit.sigma2;
    out.nll = refined_fit.nll;
  } else {
    out.theta_hat_rad = thetas[static_cast<std::size_t>(best)];
    out.xi2_hat = winner.xi2;
    out.sigma2_hat = winner.sigma2;
    out.nll = winner.nll;
  }
  return out;
}

}  // namespace aod
