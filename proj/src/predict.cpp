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
#include "dnngp/predict.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "dnngp/rng.hpp"

namespace dnngp {

double quantile_type7(vec_t sorted, double prob) {
  const index_t n = sorted.size();
  if (n == 0) throw invalid_input("quantile of an empty sample");
  if (n == 1) return sorted[0];
  const double h = prob * static_cast<double>(n - 1);
  const index_t lo = static_cast<index_t>(std::floor(h));
  const index_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<PredictionSummary> summarize_draws(const mat_t& y,
                                               const vec_t& thresholds) {
  std::vector<PredictionSummary> out(y.rows());
  for (index_t t = 0; t < y.rows(); ++t) {
    vec_t row = y.row(t).transpose();
    std::sort(row.data(), row.data() + row.size());
    PredictionSummary& s = out[t];
    s.mean = row.mean();
    s.median = quantile_type7(row, 0.5);
    s.q025 = quantile_type7(row, 0.025);
    s.q975 = quantile_type7(row, 0.975);
    s.exceed.resize(thresholds.size());
    for (index_t k = 0; k < thresholds.size(); ++k) {
      const double* first =
          std::upper_bound(row.data(), row.data() + row.size(), thresholds[k]);
      s.exceed[k] = static_cast<double>(row.data() + row.size() - first) /
                    static_cast<double>(row.size());
    }
  }
  return out;
}

PredictiveDraws predict_reference_missing(const PosteriorSamples& samples,
                                          const ModelSpec& spec,
                                          const std::vector<index_t>& targets,
                                          const vec_t& thresholds,
                                          std::uint64_t seed) {
  const index_t d = samples.n_draws();
  if (d == 0) throw invalid_input("predict: no posterior draws");
  if (!samples.has_w() && !spec.fix_w_zero) {
    throw invalid_input("predict: posterior has no stored w draws");
  }
  for (const index_t i : targets) {
    if (i < 0 || i >= spec.ref.size()) {
      throw invalid_input("predict: target index out of range");
    }
    if (!spec.X.row(i).allFinite()) {
      throw invalid_input("predict: missing covariates at reference point " +
                          std::to_string(i) +
                          "; covariate imputation is not supported");
    }
  }
  Rng rng(seed);
  PredictiveDraws out;
  out.y.resize(static_cast<index_t>(targets.size()), d);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const index_t i = targets[t];
    for (index_t k = 0; k < d; ++k) {
      const double mu = spec.X.row(i).dot(samples.beta.row(k)) +
                        (samples.has_w() ? samples.w(k, i) : 0.0);
      out.y(t, k) = mu + std::sqrt(samples.tau2[k]) * rng.normal();
    }
  }
  out.summaries = summarize_draws(out.y, thresholds);
  return out;
}

PredictiveDraws predict_new_points(const std::vector<SpaceTimePoint>& targets,
                                   const mat_t& X_targets,
                                   const PosteriorSamples& samples,
                                   const ModelSpec& spec,
                                   const vec_t& thresholds, std::uint64_t seed,
                                   int draw_stride) {
  const index_t n_t = static_cast<index_t>(targets.size());
  if (X_targets.rows() != n_t || X_targets.cols() != spec.X.cols()) {
    throw invalid_input("predict: target covariate matrix must be "
                        "n_targets x p");
  }
  if (!X_targets.allFinite()) {
    throw invalid_input("predict: missing covariates at a target point; "
                        "covariate imputation is not supported");
  }
  if (draw_stride < 1) throw invalid_input("predict: draw_stride must be >= 1");
  if (!samples.has_w()) {
    throw invalid_input("predict: posterior has no stored w draws");
  }
  const index_t n_d = samples.n_draws();
  if (n_d == 0) throw invalid_input("predict: no posterior draws");
  const index_t used = (n_d + draw_stride - 1) / draw_stride;
  const ReferenceSet& ref = spec.ref;
  for (const auto& p : targets) {
    if (ref.find(p).has_value()) {
      throw invalid_input("predict: a target coincides with a reference "
                          "point; predict it via the reference path");
    }
  }

  // Theta-free per-target candidate sets.
  std::vector<std::vector<index_t>> cand(n_t);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 4)
#endif
  for (index_t t = 0; t < n_t; ++t) {
    switch (spec.scheme) {
      case Scheme::adaptive:
        cand[t] = eligible_for_point(targets[t], ref, spec.m);
        break;
      case Scheme::simple:
        cand[t] = prediction_neighbors(targets[t], ref, Scheme::simple, spec.m,
                                       nullptr);
        break;
      case Scheme::dense: {
        cand[t].resize(ref.size());
        std::iota(cand[t].begin(), cand[t].end(), 0);
        break;
      }
    }
  }

  PredictiveDraws out;
  out.y.resize(n_t, used);

  if (spec.scheme == Scheme::dense) {
    // One factorization per draw, shared by every target.
    Rng rng(seed);
    const index_t r = ref.size();
    std::vector<SpaceTimePoint> ref_pts(r);
    for (index_t i = 0; i < r; ++i) ref_pts[i] = ref.point(i);
    for (index_t dk = 0, col = 0; dk < n_d; dk += draw_stride, ++col) {
      const CovarianceParams theta = samples.theta_at(spec, dk);
      mat_t C = cross_cov_matrix(ref_pts, ref_pts, theta);
      Eigen::LLT<mat_t> llt(C);
      if (llt.info() != Eigen::Success) {
        C.diagonal().array() += 1e-10 * theta.sigma2;
        llt.compute(C);
        if (llt.info() != Eigen::Success) {
          throw numeric_error("predict: dense covariance not positive "
                              "definite after jitter retry");
        }
      }
      const vec_t w_draw = samples.w.row(dk).transpose();
      const double noise_sd = std::sqrt(samples.tau2[dk]);
      for (index_t t = 0; t < n_t; ++t) {
        vec_t rhs(r);
        for (index_t i = 0; i < r; ++i) {
          rhs[i] = cov(spatial_lag(ref_pts[i], targets[t]),
                       temporal_lag(ref_pts[i], targets[t]), theta);
        }
        const vec_t a = llt.solve(rhs);
        const double f = std::max(theta.sigma2 - rhs.dot(a), 0.0);
        const double w_t = a.dot(w_draw) + std::sqrt(f) * rng.normal();
        const double mu = X_targets.row(t).dot(samples.beta.row(dk)) + w_t;
        out.y(t, col) = mu + noise_sd * rng.normal();
      }
    }
    out.summaries = summarize_draws(out.y, thresholds);
    return out;
  }

#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (index_t t = 0; t < n_t; ++t) {
    Rng rng = Rng::for_stream(seed, static_cast<std::uint64_t>(t));
    for (index_t dk = 0, col = 0; dk < n_d; dk += draw_stride, ++col) {
      const CovarianceParams theta = samples.theta_at(spec, dk);
      std::vector<index_t> nbrs =
          spec.scheme == Scheme::adaptive
              ? select_point_neighbors(targets[t], cand[t], ref, theta, spec.m)
              : cand[t];
      const PointConditional pc =
          point_conditional(targets[t], nbrs, ref, theta);
      double w_mean = 0.0;
      for (index_t k = 0; k < static_cast<index_t>(nbrs.size()); ++k) {
        w_mean += pc.a[k] * samples.w(dk, nbrs[k]);
      }
      const double w_t = w_mean + std::sqrt(pc.f) * rng.normal();
      const double mu = X_targets.row(t).dot(samples.beta.row(dk)) + w_t;
      out.y(t, col) = mu + std::sqrt(samples.tau2[dk]) * rng.normal();
    }
  }
  out.summaries = summarize_draws(out.y, thresholds);
  return out;
}

}  // namespace dnngp
