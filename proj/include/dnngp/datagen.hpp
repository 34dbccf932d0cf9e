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
#ifndef DNNGP_DATAGEN_HPP_
#define DNNGP_DATAGEN_HPP_

#include <cstdint>
#include <vector>

#include "dnngp/covariance.hpp"
#include "dnngp/spacetime.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

/*! Synthetic design: an evenly spaced site grid and time axis inside the
 *  unit cube, a latent field drawn from the dense parent process, i.i.d.
 *  standard-normal covariates next to an intercept, and uniform off-grid
 *  holdout points. */
struct SyntheticSpec {
  int sites_per_axis = 8;
  int n_times = 8;
  int spatial_dim = 2;
  CovarianceParams theta = CovarianceParams::exponential(1.0, 50.0, 25.0, 0.75);
  vec_t beta = (vec_t(2) << 1.0, 5.0).finished();
  double tau2 = 0.1;
  int n_holdout = 0;
  std::uint64_t seed = 1;
  index_t dense_cap = 5000;

  index_t num_sites() const {
    index_t n = 1;
    for (int d = 0; d < spatial_dim; ++d) n *= sites_per_axis;
    return n;
  }
  index_t grid_size() const { return num_sites() * n_times; }
};

struct SyntheticData {
  ReferenceSet ref;
  mat_t X;       // grid_size x p, first column all ones
  vec_t y;
  vec_t w_true;
  std::vector<SpaceTimePoint> holdout;
  mat_t X_hold;
  vec_t y_hold;
  vec_t w_hold;
  SyntheticSpec spec;
};

/*! Draws the latent field over grid + holdout from the exact dense
 *  process via one symmetric factorization, then y = X beta + w + noise.
 *  Reproducible by seed; throws invalid_input above the dense cap. */
SyntheticData simulate_dataset(const SyntheticSpec& spec);

/*! Exact multivariate normal log density of w over arbitrary points under
 *  the parent process; the reference oracle for the sparse factorization. */
double dense_gp_logdensity(const vec_t& w, const std::vector<SpaceTimePoint>& pts,
                           const CovarianceParams& params);

}  // namespace dnngp

#endif  // DNNGP_DATAGEN_HPP_
