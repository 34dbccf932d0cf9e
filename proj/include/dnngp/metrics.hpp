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
#ifndef DNNGP_METRICS_HPP_
#define DNNGP_METRICS_HPP_

#include "dnngp/mcmc.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

struct FitMetrics {
  double pD = 0.0;
  double DIC = 0.0;
  double G = 0.0;
  double P = 0.0;
  double D = 0.0;
};

/*! Deviance information criterion: pD = mean deviance minus the deviance
 *  at the posterior means of (beta, tau2, w); DIC = mean deviance + pD.
 *  The plug-in uses pointwise posterior means of the latent field, the
 *  usual convention when latent effects are sampled. Needs >= 2 draws. */
std::pair<double, double> dic(const PosteriorSamples& samples,
                              const ModelSpec& spec);

/*! Posterior predictive loss D = G + P over the observed cells, with
 *  replicates y_rep ~ Normal(x'beta + w, tau2) per stored draw. G is the
 *  squared-error fit term, P the replicate-variance penalty; both use the
 *  exact mixture moments of the replicate law rather than simulated
 *  replicates. Needs >= 2 draws. */
std::tuple<double, double, double> predictive_loss(
    const PosteriorSamples& samples, const ModelSpec& spec);

FitMetrics fit_metrics(const PosteriorSamples& samples, const ModelSpec& spec);

/*! Root mean squared prediction error. */
double rmspe(const vec_t& predicted, const vec_t& truth);

/*! Percent of truths inside the closed intervals [lo_i, hi_i]. */
double ci_coverage(const vec_t& lo, const vec_t& hi, const vec_t& truth);

}  // namespace dnngp

#endif  // DNNGP_METRICS_HPP_
