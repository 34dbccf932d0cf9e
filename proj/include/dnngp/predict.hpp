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
#ifndef DNNGP_PREDICT_HPP_
#define DNNGP_PREDICT_HPP_

#include <cstdint>
#include <vector>

#include "dnngp/mcmc.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

struct PredictionSummary {
  double mean = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  std::vector<double> exceed;  // P(y > threshold_k)
};

/*! Posterior predictive draws, one row per target point. */
struct PredictiveDraws {
  mat_t y;  // targets x draws
  std::vector<PredictionSummary> summaries;
};

/*! Mean, type-7 quantiles and exceedance probabilities per row of y. */
std::vector<PredictionSummary> summarize_draws(const mat_t& y,
                                               const vec_t& thresholds);

double quantile_type7(vec_t sorted_ascending, double prob);

/*! Predictive draws y* ~ Normal(x'beta + w, tau2) at reference points,
 *  typically those with missing responses. Requires stored w draws and
 *  finite covariates at every target. */
PredictiveDraws predict_reference_missing(const PosteriorSamples& samples,
                                          const ModelSpec& spec,
                                          const std::vector<index_t>& targets,
                                          const vec_t& thresholds,
                                          std::uint64_t seed);

/*! Predictive draws at points outside the reference set. Per posterior
 *  draw: build N(l) (re-ranked per draw under the adaptive scheme), draw
 *  w(l) ~ Normal(a' w_N, f), then y ~ Normal(x'beta + w(l), tau2).
 *  draw_stride > 1 thins the posterior uniformly. Points that coincide
 *  with a reference cell are rejected (predict there via the reference
 *  path). */
PredictiveDraws predict_new_points(const std::vector<SpaceTimePoint>& targets,
                                   const mat_t& X_targets,
                                   const PosteriorSamples& samples,
                                   const ModelSpec& spec,
                                   const vec_t& thresholds, std::uint64_t seed,
                                   int draw_stride = 1);

}  // namespace dnngp

#endif  // DNNGP_PREDICT_HPP_
