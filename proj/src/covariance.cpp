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
#include "dnngp/covariance.hpp"

#include <cmath>
#include <sstream>

namespace dnngp {

void CovarianceParams::validate() const {
  const auto fail = [](const std::string& what) {
    throw invalid_input("invalid covariance parameters: " + what);
  };
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be > 0");
  if (!(a > 0.0) || !std::isfinite(a)) fail("a must be > 0");
  if (!(c > 0.0) || !std::isfinite(c)) fail("c must be > 0");
  if (!(kappa >= 0.0 && kappa <= 1.0)) fail("kappa must be in [0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must be in (0, 1]");
  if (!(nu > 0.0) || !std::isfinite(nu)) fail("nu must be > 0");
  if (!(delta >= 0.0) || !std::isfinite(delta)) fail("delta must be >= 0");
  if (form == CovForm::exponential &&
      (nu != 0.5 || alpha != 1.0 || delta != 0.0)) {
    fail("exponential form implies nu=0.5, alpha=1, delta=0");
  }
}

CovarianceParams CovarianceParams::exponential(double sigma2, double a,
                                               double c, double kappa) {
  CovarianceParams p;
  p.sigma2 = sigma2;
  p.a = a;
  p.c = c;
  p.kappa = kappa;
  p.nu = 0.5;
  p.alpha = 1.0;
  p.delta = 0.0;
  p.form = CovForm::exponential;
  p.validate();
  return p;
}

CovarianceParams CovarianceParams::matern(double sigma2, double a, double c,
                                          double kappa, double alpha,
                                          double nu, double delta) {
  CovarianceParams p;
  p.sigma2 = sigma2;
  p.a = a;
  p.c = c;
  p.kappa = kappa;
  p.alpha = alpha;
  p.nu = nu;
  p.delta = delta;
  p.form = CovForm::matern;
  p.validate();
  return p;
}

double matern_correlation(double nu, double x) {
  if (!(x > 1e-12)) return 1.0;
  // x^nu K_nu(x) underflows jointly for large x; K_nu alone underflows
  // first, so the product is safe and tends to 0.
  const double knu = std::cyl_bessel_k(nu, x);
  if (knu == 0.0) return 0.0;
  return std::pow(x, nu) * knu / (std::pow(2.0, nu - 1.0) * std::tgamma(nu));
}

KernelTerms kernel_terms(double u, const CovarianceParams& params) {
  const double tden = params.a * std::pow(u, 2.0 * params.alpha) + 1.0;
  const double interact = std::pow(tden, -0.5 * params.kappa);
  KernelTerms t;
  t.ch_scale = params.c * interact;
  if (params.form == CovForm::exponential) {
    // delta = 0, alpha = 1: the temporal exponent is kappa = interact^2.
    t.temporal = params.sigma2 * interact * interact;
  } else {
    t.temporal =
        params.sigma2 * std::pow(tden, -(params.delta + params.kappa));
  }
  return t;
}

double cov(double h, double u, const CovarianceParams& params) {
  params.validate();
  if (std::isnan(h) || std::isnan(u)) {
    throw invalid_input("cov: NaN lag");
  }
  if (h < 0.0 || u < 0.0) {
    throw invalid_input("cov: lags must be nonnegative");
  }
  const KernelTerms t = kernel_terms(u, params);
  const double x = t.ch_scale * h;
  if (params.form == CovForm::exponential) {
    return t.temporal * std::exp(-x);
  }
  return t.temporal * matern_correlation(params.nu, x);
}

mat_t cross_cov_matrix(const std::vector<SpaceTimePoint>& A,
                       const std::vector<SpaceTimePoint>& B,
                       const CovarianceParams& params) {
  params.validate();
  if (A.empty() || B.empty()) {
    throw invalid_input("cross_cov_matrix: empty point list");
  }
  mat_t out(A.size(), B.size());
  for (std::size_t i = 0; i < A.size(); ++i) {
    for (std::size_t j = 0; j < B.size(); ++j) {
      out(i, j) = cov(spatial_lag(A[i], B[j]), temporal_lag(A[i], B[j]), params);
    }
  }
  return out;
}

bool check_natural_monotonicity(const CovarianceParams& params,
                                const vec_t& h_grid, const vec_t& u_grid) {
  params.validate();
  if (h_grid.size() == 0 || u_grid.size() == 0) {
    throw invalid_input("check_natural_monotonicity: empty grid");
  }
  for (index_t i = 1; i < h_grid.size(); ++i) {
    if (h_grid[i] < h_grid[i - 1]) {
      throw invalid_input("check_natural_monotonicity: h grid not sorted");
    }
  }
  for (index_t i = 1; i < u_grid.size(); ++i) {
    if (u_grid[i] < u_grid[i - 1]) {
      throw invalid_input("check_natural_monotonicity: u grid not sorted");
    }
  }
  const double tol = 1e-12 * params.sigma2;
  for (index_t ku = 0; ku < u_grid.size(); ++ku) {
    double prev = cov(h_grid[0], u_grid[ku], params);
    for (index_t kh = 1; kh < h_grid.size(); ++kh) {
      const double v = cov(h_grid[kh], u_grid[ku], params);
      if (v > prev + tol) return false;
      prev = v;
    }
  }
  for (index_t kh = 0; kh < h_grid.size(); ++kh) {
    double prev = cov(h_grid[kh], u_grid[0], params);
    for (index_t ku = 1; ku < u_grid.size(); ++ku) {
      const double v = cov(h_grid[kh], u_grid[ku], params);
      if (v > prev + tol) return false;
      prev = v;
    }
  }
  return true;
}

RefCovEval::RefCovEval(const ReferenceSet& ref, const CovarianceParams& params)
    : ref_(&ref), params_(params) {
  params_.validate();
  const index_t M = ref.num_times();
  temporal_.resize(M, M);
  ch_scale_.resize(M, M);
  for (index_t la = 0; la < M; ++la) {
    for (index_t lb = la; lb < M; ++lb) {
      const double u = ref.times()[lb] - ref.times()[la];
      const KernelTerms t = kernel_terms(u, params_);
      ch_scale_(la, lb) = t.ch_scale;
      ch_scale_(lb, la) = t.ch_scale;
      temporal_(la, lb) = t.temporal;
      temporal_(lb, la) = t.temporal;
    }
  }
}

}  // namespace dnngp
