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
#include "dnngp/datagen.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "dnngp/rng.hpp"

namespace dnngp {

namespace {

mat_t unit_grid_sites(int per_axis, int dim) {
  index_t n = 1;
  for (int d = 0; d < dim; ++d) n *= per_axis;
  mat_t sites(n, dim);
  for (index_t i = 0; i < n; ++i) {
    index_t rest = i;
    for (int d = 0; d < dim; ++d) {
      const index_t cell = rest % per_axis;
      rest /= per_axis;
      sites(i, d) =
          per_axis == 1 ? 0.5 : static_cast<double>(cell) / (per_axis - 1);
    }
  }
  return sites;
}

Eigen::LLT<mat_t> dense_chol(mat_t& C, double sigma2, const char* where) {
  Eigen::LLT<mat_t> llt(C);
  if (llt.info() == Eigen::Success) return llt;
  C.diagonal().array() += 1e-10 * sigma2;
  llt.compute(C);
  if (llt.info() != Eigen::Success) {
    throw numeric_error(std::string(where) +
                        ": covariance not positive definite after jitter retry");
  }
  return llt;
}

}  // namespace

SyntheticData simulate_dataset(const SyntheticSpec& spec) {
  spec.theta.validate();
  if (spec.spatial_dim < 1 || spec.spatial_dim > 3) {
    throw invalid_input("simulate_dataset: spatial_dim must be 1, 2 or 3");
  }
  if (spec.beta.size() < 1) {
    throw invalid_input("simulate_dataset: beta must include an intercept");
  }
  if (spec.tau2 < 0.0) {
    throw invalid_input("simulate_dataset: tau2 must be >= 0");
  }
  const index_t n_grid = spec.grid_size();
  const index_t n_total = n_grid + spec.n_holdout;
  if (n_total > spec.dense_cap) {
    throw invalid_input("simulate_dataset: " + std::to_string(n_total) +
                        " points exceed the dense cap of " +
                        std::to_string(spec.dense_cap) +
                        "; use the sparse prior sampler instead");
  }

  const mat_t sites = unit_grid_sites(spec.sites_per_axis, spec.spatial_dim);
  vec_t times(spec.n_times);
  for (int k = 0; k < spec.n_times; ++k) {
    times[k] =
        spec.n_times == 1 ? 0.5 : static_cast<double>(k) / (spec.n_times - 1);
  }

  Rng rng(spec.seed);
  ReferenceSet ref(sites, times);

  std::vector<SpaceTimePoint> all_pts(n_total);
  for (index_t i = 0; i < n_grid; ++i) all_pts[i] = ref.point(i);
  for (index_t k = 0; k < spec.n_holdout; ++k) {
    SpaceTimePoint p;
    do {
      for (int d = 0; d < spec.spatial_dim; ++d) p.s[d] = rng.uniform();
      p.t = rng.uniform();
    } while (ref.find(p).has_value());
    all_pts[n_grid + k] = p;
  }

  mat_t C = cross_cov_matrix(all_pts, all_pts, spec.theta);
  const Eigen::LLT<mat_t> llt =
      dense_chol(C, spec.theta.sigma2, "simulate_dataset");
  vec_t z(n_total);
  for (index_t i = 0; i < n_total; ++i) z[i] = rng.normal();
  const vec_t w_all = llt.matrixL() * z;

  const index_t p = spec.beta.size();
  mat_t X_all(n_total, p);
  X_all.col(0).setOnes();
  for (index_t i = 0; i < n_total; ++i) {
    for (index_t c = 1; c < p; ++c) X_all(i, c) = rng.normal();
  }
  vec_t y_all(n_total);
  const double noise_sd = std::sqrt(spec.tau2);
  for (index_t i = 0; i < n_total; ++i) {
    y_all[i] = X_all.row(i).dot(spec.beta) + w_all[i] + noise_sd * rng.normal();
  }

  SyntheticData out{std::move(ref),
                    X_all.topRows(n_grid),
                    y_all.head(n_grid),
                    w_all.head(n_grid),
                    {all_pts.begin() + n_grid, all_pts.end()},
                    X_all.bottomRows(spec.n_holdout),
                    y_all.tail(spec.n_holdout),
                    w_all.tail(spec.n_holdout),
                    spec};
  return out;
}

double dense_gp_logdensity(const vec_t& w, const std::vector<SpaceTimePoint>& pts,
                           const CovarianceParams& params) {
  if (w.size() != static_cast<index_t>(pts.size())) {
    throw invalid_input("dense_gp_logdensity: w and point list differ in size");
  }
  mat_t C = cross_cov_matrix(pts, pts, params);
  const Eigen::LLT<mat_t> llt =
      dense_chol(C, params.sigma2, "dense_gp_logdensity");
  const mat_t& L = llt.matrixL().nestedExpression();
  double log_det = 0.0;
  for (index_t i = 0; i < w.size(); ++i) log_det += 2.0 * std::log(L(i, i));
  const vec_t alpha = llt.solve(w);
  return -0.5 * (w.size() * std::log(2.0 * M_PI) + log_det + w.dot(alpha));
}

}  // namespace dnngp
