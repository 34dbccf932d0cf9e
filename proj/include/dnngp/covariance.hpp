/*!
 * This file is part of dnngp, a C++ library for scalable Bayesian
 * spatio-temporal regression with dynamic nearest-neighbor Gaussian
 * processes.
 *
 * Copyright (c) 2026 dnngp contributors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in
 * the project root for license information.
 */
#ifndef DNNGP_COVARIANCE_HPP_
#define DNNGP_COVARIANCE_HPP_

#include <cmath>
#include <vector>

#include "dnngp/spacetime.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

enum class CovForm { exponential, matern };

/*! Parameters of the non-separable space-time kernel
 *
 *    C(h, u) = sigma2 / (a u^(2 alpha) + 1)^(delta + kappa)
 *              * rho_nu( c h / (a u^(2 alpha) + 1)^(kappa/2) ),
 *
 * where rho_nu is the Whittle-Matern correlation of order nu, normalized
 * so rho_nu(0) = 1 and hence C(0,0) = sigma2. The `exponential` form is
 * the nu = 1/2, alpha = 1, delta = 0 member, which reduces to
 *
 *    C(h, u) = sigma2 (a u^2 + 1)^(-kappa) exp(-c h (a u^2 + 1)^(-kappa/2)).
 */
struct CovarianceParams {
  double sigma2 = 1.0;  ///< marginal variance, > 0
  double a = 1.0;       ///< temporal decay, > 0
  double c = 1.0;       ///< spatial decay, > 0
  double kappa = 0.0;   ///< space-time interaction, in [0, 1]
  double alpha = 1.0;   ///< temporal smoothness, in (0, 1]
  double nu = 0.5;      ///< spatial smoothness, > 0
  double delta = 0.0;   ///< temporal power offset, >= 0
  CovForm form = CovForm::exponential;

  /*! Throws invalid_input when any constraint is violated. The
   *  exponential form additionally requires nu = 1/2, alpha = 1,
   *  delta = 0 (the factory below stores them that way). */
  void validate() const;

  static CovarianceParams exponential(double sigma2, double a, double c,
                                      double kappa);
  static CovarianceParams matern(double sigma2, double a, double c,
                                 double kappa, double alpha, double nu,
                                 double delta);
};

/*! Whittle-Matern correlation rho_nu(x) = x^nu K_nu(x) / (2^(nu-1) Gamma(nu)),
 *  evaluated through the modified Bessel function of the second kind for
 *  every nu (relative accuracy ~1e-14 for half-integer orders, documented
 *  1e-8 elsewhere). Arguments below 1e-12 return 1. */
double matern_correlation(double nu, double x);

/*! Temporal pieces of the kernel at lag u: the sigma2-scaled temporal
 *  factor and the interaction-adjusted spatial decay c (a u^(2 alpha) +
 *  1)^(-kappa/2). Every evaluation path shares this function so equal
 *  lags give bitwise-equal covariances; neighbor ranking relies on that. */
struct KernelTerms {
  double temporal;
  double ch_scale;
};
KernelTerms kernel_terms(double u, const CovarianceParams& params);

/*! Kernel value at spatial lag h >= 0 and temporal lag u >= 0.
 *  Throws invalid_input on NaN lags or invalid parameters. */
double cov(double h, double u, const CovarianceParams& params);

/*! Cross-covariance matrix with entry (i, j) = cov(|s_i - s_j|, |t_i - t_j|). */
mat_t cross_cov_matrix(const std::vector<SpaceTimePoint>& A,
                       const std::vector<SpaceTimePoint>& B,
                       const CovarianceParams& params);

/*! True iff the kernel is non-increasing along h for every fixed u in the
 *  grids and along u for every fixed h. Grids must be sorted ascending.
 *
 *  Note the exponential form rises with u at long range (c h > 2); over
 *  grids confined to c * max(h) <= 2 it is monotone for every valid
 *  parameter value. */
bool check_natural_monotonicity(const CovarianceParams& params,
                                const vec_t& h_grid, const vec_t& u_grid);

/*! Upper bound on spatial lag below which the exponential form is
 *  monotone in u for any valid (a, kappa); used to draw test kernels. */
inline double exponential_monotone_h_max(double c) { return 2.0 / c; }

/*! Kernel evaluation between reference-set points under one fixed theta.
 *
 * The temporal factor depends only on the level offset, so it is
 * tabulated once per theta; a reference-pair evaluation then costs one
 * radial evaluation. Build one per Metropolis proposal and share it
 * read-only across worker threads.
 */
class RefCovEval {
public:
  RefCovEval(const ReferenceSet& ref, const CovarianceParams& params);

  double operator()(index_t i, index_t j) const {
    return cov_lag(ref_->site_distance(ref_->site_of(i), ref_->site_of(j)),
                   ref_->level_of(i), ref_->level_of(j));
  }

  /*! Covariance at spatial lag h between time levels la and lb. */
  double cov_lag(double h, index_t la, index_t lb) const {
    const double x = ch_scale_(la, lb) * h;
    if (params_.form == CovForm::exponential) {
      return temporal_(la, lb) * std::exp(-x);
    }
    return temporal_(la, lb) * matern_correlation(params_.nu, x);
  }

  const CovarianceParams& params() const { return params_; }

private:
  const ReferenceSet* ref_;
  CovarianceParams params_;
  mat_t temporal_;  // sigma2 * (a u^(2 alpha) + 1)^-(delta+kappa) per level pair
  mat_t ch_scale_;  // c * (a u^(2 alpha) + 1)^-(kappa/2) per level pair
};

}  // namespace dnngp

#endif  // DNNGP_COVARIANCE_HPP_
