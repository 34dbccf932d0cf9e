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
#ifndef DNNGP_MCMC_HPP_
#define DNNGP_MCMC_HPP_

#include <cstdint>
#include <vector>

#include "dnngp/covariance.hpp"
#include "dnngp/neighbors.hpp"
#include "dnngp/process.hpp"
#include "dnngp/rng.hpp"
#include "dnngp/spacetime.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

/*! Gaussian prior on the regression coefficients, or flat. */
struct BetaPrior {
  bool flat = true;
  vec_t mean;
  mat_t cov;
};

/*! Uniform box for one sampled kernel parameter, or a pinned value. */
struct ParamBox {
  double lo = 0.0;
  double hi = 1.0;
  bool fixed = false;
  double value = 0.0;
};

struct ThetaPrior {
  ParamBox sigma2{0.1, 10.0};
  ParamBox a{1.0, 100.0};
  ParamBox c{0.0, 50.0};
  ParamBox kappa{0.0, 1.0};
};

/*! The hierarchical regression: y(l) = x(l)'beta + w(l) + eps(l) with a
 *  sparse process prior on w over the reference set and i.i.d. Normal(0,
 *  tau2) noise. Responses may be missing anywhere; covariates must be
 *  present wherever the response is observed or a prediction is wanted. */
struct ModelSpec {
  ReferenceSet ref;
  mat_t X;                           // r x p, aligned with the enumeration
  vec_t y;                           // r, NaN where missing
  std::vector<std::uint8_t> observed;

  BetaPrior beta_prior;
  double a_tau = 2.0;
  double b_tau = 0.1;
  ThetaPrior theta_prior;

  CovForm form = CovForm::exponential;
  double nu = 0.5;      // matern form extras, never sampled
  double alpha = 1.0;
  double delta = 0.0;

  Scheme scheme = Scheme::adaptive;
  int m = 25;
  bool fix_w_zero = false;  // m = 0 debug mode: no latent field, no theta moves

  index_t n_obs() const;
  void validate() const;
  CovarianceParams make_theta(double sigma2, double a, double c,
                              double kappa) const;
};

struct SamplerConfig {
  int n_iter = 5000;
  int n_burn = 2000;
  int n_chains = 1;
  int thin = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  bool store_w = true;
};

struct PosteriorSamples {
  index_t p = 0;
  index_t r = 0;
  std::vector<int> chain;
  std::vector<int> iter;
  mat_t beta;    // draws x p
  vec_t tau2;
  vec_t sigma2, a, c, kappa;
  mat_t w;       // draws x r, 0 x 0 when not stored
  std::vector<double> accept_rate;  // Metropolis acceptance per chain

  index_t n_draws() const { return tau2.size(); }
  bool has_w() const { return w.size() > 0; }
  CovarianceParams theta_at(const ModelSpec& spec, index_t d) const {
    return spec.make_theta(sigma2[d], a[d], c[d], kappa[d]);
  }
};

/*! One chain's mutable state; exposed so the conditional updates can be
 *  unit-tested against closed-form oracles. */
struct ChainState {
  vec_t beta;
  double tau2 = 1.0;
  CovarianceParams theta;
  vec_t w;

  NeighborTable table;
  SparseFactors factors;
  ReverseTable reverse;

  Rng rng{1};
  long propose_count = 0;
  long accept_count = 0;
  double log_step = 0.0;
  long tune_count = 0;

  // proposal scratch, kept allocated between Metropolis steps
  NeighborTable prop_table;
  SparseFactors prop_factors;
  vec_t res;
};

struct GaussianConditional {
  vec_t mean;
  mat_t cov;
};

/*! Full conditional of beta: Normal(V* mu*, V*) with
 *  V* = (V_beta^-1 + X'X / tau2)^-1 and
 *  mu* = V_beta^-1 mu_beta + X'(y - w_obs) / tau2 (flat: V_beta^-1 = 0). */
GaussianConditional beta_conditional(const ModelSpec& spec, const vec_t& w,
                                     double tau2);

/*! Full conditional of tau2: inverse-gamma (shape, scale) =
 *  (a_tau + n_obs/2, b_tau + ||y - X beta - w_obs||^2 / 2). */
std::pair<double, double> tau2_conditional(const ModelSpec& spec,
                                           const vec_t& beta, const vec_t& w);

/*! Mean and variance of the single-site conditional of w_i given all other
 *  components, the data term (when observed), and the current factors.
 *  Refreshes the state's residual workspace. */
std::pair<double, double> w_conditional(index_t i, ChainState& state,
                                        const ModelSpec& spec);

void update_beta(ChainState& state, const ModelSpec& spec);
void update_tau2(ChainState& state, const ModelSpec& spec);

/*! One full sequential sweep over the reference set per the compressed
 *  conditional factorization; residuals are maintained incrementally so a
 *  sweep costs O(sum_i |N(i)| + |U(i)|). */
void update_w(ChainState& state, const ModelSpec& spec);

/*! Block random-walk Metropolis on (log sigma2, log a, log c, logit kappa)
 *  restricted to the prior boxes. Under the adaptive scheme the proposal
 *  is evaluated with neighbor sets re-ranked for the proposed kernel, and
 *  those sets replace the current ones only on acceptance. */
void update_theta(ChainState& state, const ModelSpec& spec,
                  const EligibleSets* eligible, bool adapt_step);

ChainState init_chain(const ModelSpec& spec, const SamplerConfig& config,
                      int chain_index, const EligibleSets* eligible);

/*! Runs n_chains independent chains (concurrently when threads > 1) and
 *  stores post-burn-in, thinned draws. Identical (spec, config) inputs
 *  give identical output for any thread count. */
PosteriorSamples run_sampler(const ModelSpec& spec, const SamplerConfig& config);

/*! Caps the worker count used by parallel regions. */
void set_max_threads(int threads);

}  // namespace dnngp

#endif  // DNNGP_MCMC_HPP_
