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
#include "dnngp/metrics.hpp"

#include <cmath>

namespace dnngp {

namespace {

/*! -2 log likelihood of the observed responses at one parameter point. */
double deviance(const ModelSpec& spec, const vec_t& beta, double tau2,
                const vec_t& w_at_obs_or_empty, bool w_is_zero) {
  double nll = 0.0;
  index_t row = 0;
  const index_t r = spec.ref.size();
  for (index_t i = 0; i < r; ++i) {
    if (!spec.observed[i]) continue;
    const double w_i = w_is_zero ? 0.0 : w_at_obs_or_empty[row];
    const double resid = spec.y[i] - spec.X.row(i).dot(beta) - w_i;
    nll += std::log(2.0 * M_PI * tau2) + resid * resid / tau2;
    ++row;
  }
  return nll;
}

/*! Gathers the stored w draws at the observed cells (draws x n_obs). */
mat_t w_at_observed(const PosteriorSamples& samples, const ModelSpec& spec) {
  const index_t n = spec.n_obs();
  mat_t out(samples.n_draws(), n);
  index_t col = 0;
  for (index_t i = 0; i < spec.ref.size(); ++i) {
    if (!spec.observed[i]) continue;
    out.col(col++) = samples.w.col(i);
  }
  return out;
}

}  // namespace

std::pair<double, double> dic(const PosteriorSamples& samples,
                              const ModelSpec& spec) {
  const index_t d = samples.n_draws();
  if (d < 2) throw invalid_input("dic: needs at least 2 draws");
  const bool no_w = !samples.has_w();
  if (no_w && !spec.fix_w_zero) {
    throw invalid_input("dic: posterior has no stored w draws");
  }
  mat_t w_obs;
  if (!no_w) w_obs = w_at_observed(samples, spec);

  double mean_dev = 0.0;
  for (index_t k = 0; k < d; ++k) {
    const vec_t beta = samples.beta.row(k).transpose();
    const vec_t wk = no_w ? vec_t() : vec_t(w_obs.row(k).transpose());
    mean_dev += deviance(spec, beta, samples.tau2[k], wk, no_w);
  }
  mean_dev /= static_cast<double>(d);

  const vec_t beta_bar = samples.beta.colwise().mean().transpose();
  const double tau2_bar = samples.tau2.mean();
  const vec_t w_bar = no_w ? vec_t() : vec_t(w_obs.colwise().mean().transpose());
  const double dev_at_mean = deviance(spec, beta_bar, tau2_bar, w_bar, no_w);

  const double pD = mean_dev - dev_at_mean;
  return {pD, mean_dev + pD};
}

std::tuple<double, double, double> predictive_loss(
    const PosteriorSamples& samples, const ModelSpec& spec) {
  const index_t d = samples.n_draws();
  if (d < 2) throw invalid_input("predictive_loss: needs at least 2 draws");
  const bool no_w = !samples.has_w();
  if (no_w && !spec.fix_w_zero) {
    throw invalid_input("predictive_loss: posterior has no stored w draws");
  }

  double G = 0.0, P = 0.0;
  index_t col = 0;
  for (index_t i = 0; i < spec.ref.size(); ++i) {
    if (!spec.observed[i]) continue;
    // Replicate mixture over draws: mean of mu and total variance
    // var(mu) + mean(tau2).
    double mean_mu = 0.0, mean_mu2 = 0.0, mean_tau2 = 0.0;
    for (index_t k = 0; k < d; ++k) {
      const double mu = spec.X.row(i).dot(samples.beta.row(k)) +
                        (no_w ? 0.0 : samples.w(k, i));
      mean_mu += mu;
      mean_mu2 += mu * mu;
      mean_tau2 += samples.tau2[k];
    }
    mean_mu /= d;
    mean_mu2 /= d;
    mean_tau2 /= d;
    const double var_rep = std::max(mean_mu2 - mean_mu * mean_mu, 0.0) + mean_tau2;
    const double err = spec.y[i] - mean_mu;
    G += err * err;
    P += var_rep;
    ++col;
  }
  return {G, P, G + P};
}

FitMetrics fit_metrics(const PosteriorSamples& samples, const ModelSpec& spec) {
  FitMetrics out;
  std::tie(out.pD, out.DIC) = dic(samples, spec);
  std::tie(out.G, out.P, out.D) = predictive_loss(samples, spec);
  return out;
}

double rmspe(const vec_t& predicted, const vec_t& truth) {
  if (predicted.size() != truth.size() || predicted.size() == 0) {
    throw invalid_input("rmspe: vectors must be nonempty and equal length");
  }
  return std::sqrt((predicted - truth).squaredNorm() /
                   static_cast<double>(predicted.size()));
}

double ci_coverage(const vec_t& lo, const vec_t& hi, const vec_t& truth) {
  const index_t n = truth.size();
  if (lo.size() != n || hi.size() != n || n == 0) {
    throw invalid_input("ci_coverage: vectors must be nonempty and equal "
                        "length");
  }
  index_t inside = 0;
  for (index_t i = 0; i < n; ++i) {
    if (!(lo[i] <= hi[i])) {
      throw invalid_input("ci_coverage: interval " + std::to_string(i) +
                          " has lo > hi");
    }
    inside += (truth[i] >= lo[i] && truth[i] <= hi[i]);
  }
  return 100.0 * static_cast<double>(inside) / static_cast<double>(n);
}

}  // namespace dnngp
