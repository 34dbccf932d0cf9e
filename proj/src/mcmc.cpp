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
#include "dnngp/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dnngp {

namespace {

constexpr double kTargetAcceptance = 0.35;
constexpr double kLogStepMin = -6.907755278982137;  // log 1e-3
constexpr double kLogStepMax = 2.302585092994046;   // log 10

double logit(double x) { return std::log(x / (1.0 - x)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ThetaTransform {
  // Sampled components in fixed order: sigma2, a, c, kappa.
  const ThetaPrior* prior;

  int n_sampled() const {
    return (!prior->sigma2.fixed) + (!prior->a.fixed) + (!prior->c.fixed) +
           (!prior->kappa.fixed);
  }

  vec_t to_z(const CovarianceParams& theta) const {
    vec_t z(n_sampled());
    int k = 0;
    if (!prior->sigma2.fixed) z[k++] = std::log(theta.sigma2);
    if (!prior->a.fixed) z[k++] = std::log(theta.a);
    if (!prior->c.fixed) z[k++] = std::log(theta.c);
    if (!prior->kappa.fixed) {
      const ParamBox& b = prior->kappa;
      z[k++] = logit((theta.kappa - b.lo) / (b.hi - b.lo));
    }
    return z;
  }

  /*! Returns false when a log component leaves its prior box. */
  bool from_z(const vec_t& z, const ModelSpec& spec,
              CovarianceParams* theta) const {
    int k = 0;
    double sigma2 = prior->sigma2.fixed ? prior->sigma2.value : 0.0;
    double a = prior->a.fixed ? prior->a.value : 0.0;
    double c = prior->c.fixed ? prior->c.value : 0.0;
    double kappa = prior->kappa.fixed ? prior->kappa.value : 0.0;
    bool inside = true;
    const auto take_log = [&](const ParamBox& box, double* dst) {
      const double v = std::exp(z[k++]);
      *dst = v;
      if (!(v > box.lo && v < box.hi)) inside = false;
    };
    if (!prior->sigma2.fixed) take_log(prior->sigma2, &sigma2);
    if (!prior->a.fixed) take_log(prior->a, &a);
    if (!prior->c.fixed) take_log(prior->c, &c);
    if (!prior->kappa.fixed) {
      const ParamBox& b = prior->kappa;
      kappa = b.lo + (b.hi - b.lo) * sigmoid(z[k++]);
    }
    if (!inside) return false;
    *theta = spec.make_theta(sigma2, a, c, kappa);
    return true;
  }

  /*! log |d theta / d z|: the z-space target absorbs the transform. */
  double log_jacobian(const vec_t& z) const {
    double lj = 0.0;
    int k = 0;
    if (!prior->sigma2.fixed) lj += z[k++];
    if (!prior->a.fixed) lj += z[k++];
    if (!prior->c.fixed) lj += z[k++];
    if (!prior->kappa.fixed) {
      const ParamBox& b = prior->kappa;
      const double g = sigmoid(z[k++]);
      lj += std::log((b.hi - b.lo) * g * (1.0 - g));
    }
    return lj;
  }
};

double box_midpoint_log(const ParamBox& b) {
  const double lo = std::max(b.lo, 1e-4 * b.hi);  // guard open-at-zero boxes
  return std::sqrt(lo * b.hi);
}

void check_box(const ParamBox& b, const char* name) {
  if (b.fixed) return;
  if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
    throw invalid_input(std::string("theta prior box for ") + name +
                        " must satisfy lo < hi with finite bounds");
  }
}

}  // namespace

index_t ModelSpec::n_obs() const {
  index_t n = 0;
  for (const auto o : observed) n += o != 0;
  return n;
}

CovarianceParams ModelSpec::make_theta(double sigma2, double a, double c,
                                       double kappa) const {
  if (form == CovForm::exponential) {
    return CovarianceParams::exponential(sigma2, a, c, kappa);
  }
  return CovarianceParams::matern(sigma2, a, c, kappa, alpha, nu, delta);
}

void ModelSpec::validate() const {
  const index_t r = ref.size();
  if (X.rows() != r || y.size() != r ||
      static_cast<index_t>(observed.size()) != r) {
    throw invalid_input("model spec: X, y and the observation map must all "
                        "cover the reference set");
  }
  if (X.cols() < 1) throw invalid_input("model spec: empty design matrix");
  for (index_t i = 0; i < r; ++i) {
    if (observed[i] && (!std::isfinite(y[i]) || !X.row(i).allFinite())) {
      throw invalid_input("model spec: non-finite response or covariate at "
                          "observed point " + std::to_string(i));
    }
  }
  if (!beta_prior.flat) {
    if (beta_prior.mean.size() != X.cols() ||
        beta_prior.cov.rows() != X.cols() ||
        beta_prior.cov.cols() != X.cols()) {
      throw invalid_input("model spec: beta prior dimensions do not match X");
    }
  }
  if (!(a_tau > 0.0) || !(b_tau > 0.0)) {
    throw invalid_input("model spec: a_tau and b_tau must be positive");
  }
  check_box(theta_prior.sigma2, "sigma2");
  check_box(theta_prior.a, "a");
  check_box(theta_prior.c, "c");
  check_box(theta_prior.kappa, "kappa");
  if (fix_w_zero != (m == 0)) {
    throw invalid_input("model spec: m = 0 and fix_w_zero imply each other");
  }
  if (!fix_w_zero && scheme != Scheme::dense && (m < 1 || m > 64)) {
    throw invalid_input("model spec: m must be in [1, 64]");
  }
  if (!fix_w_zero && m >= r) {
    throw invalid_input("model spec: m must be smaller than the reference "
                        "set; use the dense scheme for saturated fits");
  }
}

GaussianConditional beta_conditional(const ModelSpec& spec, const vec_t& w,
                                     double tau2) {
  const index_t p = spec.X.cols();
  mat_t precision = mat_t::Zero(p, p);
  vec_t rhs = vec_t::Zero(p);
  if (!spec.beta_prior.flat) {
    const Eigen::LLT<mat_t> vllt(spec.beta_prior.cov);
    if (vllt.info() != Eigen::Success) {
      throw numeric_error("beta prior covariance is not positive definite");
    }
    precision = vllt.solve(mat_t::Identity(p, p));
    rhs = precision * spec.beta_prior.mean;
  }
  const index_t r = spec.ref.size();
  for (index_t i = 0; i < r; ++i) {
    if (!spec.observed[i]) continue;
    const auto x = spec.X.row(i);
    precision.noalias() += x.transpose() * x / tau2;
    rhs.noalias() += x.transpose() * (spec.y[i] - w[i]) / tau2;
  }
  const Eigen::LLT<mat_t> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw numeric_error("beta conditional: singular normal equations under a "
                        "flat prior; supply a proper (ridge) beta prior");
  }
  GaussianConditional out;
  out.mean = llt.solve(rhs);
  out.cov = llt.solve(mat_t::Identity(p, p));
  return out;
}

std::pair<double, double> tau2_conditional(const ModelSpec& spec,
                                           const vec_t& beta, const vec_t& w) {
  double rss = 0.0;
  index_t n = 0;
  const index_t r = spec.ref.size();
  for (index_t i = 0; i < r; ++i) {
    if (!spec.observed[i]) continue;
    const double resid = spec.y[i] - spec.X.row(i).dot(beta) - w[i];
    rss += resid * resid;
    ++n;
  }
  return {spec.a_tau + 0.5 * static_cast<double>(n), spec.b_tau + 0.5 * rss};
}

void update_beta(ChainState& state, const ModelSpec& spec) {
  const GaussianConditional cond =
      beta_conditional(spec, state.w, state.tau2);
  const Eigen::LLT<mat_t> llt(cond.cov);
  vec_t z(cond.mean.size());
  for (index_t k = 0; k < z.size(); ++k) z[k] = state.rng.normal();
  state.beta = cond.mean + mat_t(llt.matrixL()) * z;
}

void update_tau2(ChainState& state, const ModelSpec& spec) {
  const auto [shape, scale] = tau2_conditional(spec, state.beta, state.w);
  state.tau2 = state.rng.inverse_gamma(shape, scale);
}

namespace {

/*! res[j] = w[j] - a_j' w_{N(j)} for every j; the sweep keeps it current. */
void refresh_residuals(ChainState& state) {
  const index_t r = state.table.size();
  state.res.resize(r);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (index_t j = 0; j < r; ++j) {
    const auto nbrs = state.table.neighbors(j);
    const double* a = state.factors.a_flat.data() + state.table.offsets[j];
    double mean = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) mean += a[k] * state.w[nbrs[k]];
    state.res[j] = state.w[j] - mean;
  }
}

/*! Precision and precision-weighted mean of w_i given everything else;
 *  assumes res is current. */
std::pair<double, double> w_site_terms(index_t i, const ChainState& state,
                                       const ModelSpec& spec) {
  const double fi = state.factors.f[i];
  double prec = 1.0 / fi;
  double num = (state.w[i] - state.res[i]) / fi;  // a_i' w_{N(i)} / f_i
  if (spec.observed[i]) {
    prec += 1.0 / state.tau2;
    num += (spec.y[i] - spec.X.row(i).dot(state.beta)) / state.tau2;
  }
  const auto owners = state.reverse.owners(i);
  const std::int32_t* pos = state.reverse.pos.data() + state.reverse.offsets[i];
  for (std::size_t k = 0; k < owners.size(); ++k) {
    const std::int32_t j = owners[k];
    const double b = state.factors.a_flat[state.table.offsets[j] + pos[k]];
    const double fj = state.factors.f[j];
    // Residual of w_j with point i's contribution added back.
    const double aji = state.res[j] + b * state.w[i];
    prec += b * b / fj;
    num += b * aji / fj;
  }
  return {prec, num};
}

}  // namespace

std::pair<double, double> w_conditional(index_t i, ChainState& state,
                                        const ModelSpec& spec) {
  refresh_residuals(state);
  const auto [prec, num] = w_site_terms(i, state, spec);
  return {num / prec, 1.0 / prec};
}

void update_w(ChainState& state, const ModelSpec& spec) {
  refresh_residuals(state);
  const index_t r = state.table.size();
  for (index_t i = 0; i < r; ++i) {
    const auto [prec, num] = w_site_terms(i, state, spec);
    const double v = 1.0 / prec;
    const double wn = v * num + std::sqrt(v) * state.rng.normal();
    const double delta = wn - state.w[i];
    state.res[i] += delta;
    const auto owners = state.reverse.owners(i);
    const std::int32_t* pos =
        state.reverse.pos.data() + state.reverse.offsets[i];
    for (std::size_t k = 0; k < owners.size(); ++k) {
      const std::int32_t j = owners[k];
      state.res[j] -= state.factors.a_flat[state.table.offsets[j] + pos[k]] * delta;
    }
    state.w[i] = wn;
  }
}

void update_theta(ChainState& state, const ModelSpec& spec,
                  const EligibleSets* eligible, bool adapt_step) {
  const ThetaTransform trans{&spec.theta_prior};
  const int k = trans.n_sampled();
  if (k == 0) return;
  state.propose_count++;

  const vec_t z = trans.to_z(state.theta);
  vec_t zp(k);
  const double step = std::exp(state.log_step);
  for (int j = 0; j < k; ++j) zp[j] = z[j] + step * state.rng.normal();

  CovarianceParams proposal = state.theta;
  double alpha = 0.0;
  bool accepted = false;
  if (trans.from_z(zp, spec, &proposal)) {
    const NeighborTable* prop_table = &state.table;
    if (spec.scheme == Scheme::adaptive) {
      reselect_adaptive(state.prop_table, *eligible, spec.ref, proposal);
      prop_table = &state.prop_table;
    }
    recompute_factors(state.prop_factors, spec.ref, *prop_table, proposal);
    const double ll_prop =
        log_prior_density(state.w, *prop_table, state.prop_factors);
    const double ll_cur =
        log_prior_density(state.w, state.table, state.factors);
    const double log_alpha = ll_prop - ll_cur + trans.log_jacobian(zp) -
                             trans.log_jacobian(z);
    alpha = std::min(1.0, std::exp(log_alpha));
    if (std::log(state.rng.uniform_pos()) < log_alpha) {
      accepted = true;
      state.theta = proposal;
      std::swap(state.factors, state.prop_factors);
      if (spec.scheme == Scheme::adaptive) {
        std::swap(state.table, state.prop_table);
        state.reverse = build_reverse(state.table);
      }
    }
  }
  if (accepted) state.accept_count++;

  if (adapt_step) {
    // Robbins-Monro drift toward the target rate, frozen after burn-in.
    state.tune_count++;
    state.log_step += (alpha - kTargetAcceptance) /
                      std::pow(static_cast<double>(state.tune_count), 0.7);
    state.log_step = std::clamp(state.log_step, kLogStepMin, kLogStepMax);
  }
}

ChainState init_chain(const ModelSpec& spec, const SamplerConfig& config,
                      int chain_index, const EligibleSets* eligible) {
  ChainState state;
  state.rng = Rng::for_stream(config.seed, static_cast<std::uint64_t>(chain_index));
  const index_t r = spec.ref.size();
  const index_t p = spec.X.cols();
  const index_t n = spec.n_obs();

  // Ordinary least squares on the observed rows seeds beta and tau2.
  mat_t Xo(n, p);
  vec_t yo(n);
  index_t row = 0;
  for (index_t i = 0; i < r; ++i) {
    if (!spec.observed[i]) continue;
    Xo.row(row) = spec.X.row(i);
    yo[row] = spec.y[i];
    ++row;
  }
  if (n >= p) {
    state.beta = Xo.colPivHouseholderQr().solve(yo);
    const double rss = (yo - Xo * state.beta).squaredNorm();
    state.tau2 = std::max(0.5 * rss / std::max<index_t>(n, 1), 1e-8);
  } else {
    state.beta = vec_t::Zero(p);
    state.tau2 = spec.b_tau / spec.a_tau;
  }

  const ThetaPrior& tp = spec.theta_prior;
  const double sigma2 =
      tp.sigma2.fixed ? tp.sigma2.value : box_midpoint_log(tp.sigma2);
  const double a = tp.a.fixed ? tp.a.value : box_midpoint_log(tp.a);
  const double c = tp.c.fixed ? tp.c.value : box_midpoint_log(tp.c);
  const double kappa =
      tp.kappa.fixed ? tp.kappa.value : 0.5 * (tp.kappa.lo + tp.kappa.hi);
  state.theta = spec.make_theta(sigma2, a, c, kappa);

  state.w = vec_t::Zero(r);
  state.log_step = std::log(0.3);

  if (spec.fix_w_zero) {
    state.table.offsets.assign(r + 1, 0);
    state.factors.f = vec_t::Constant(r, state.theta.sigma2);
    state.factors.theta = state.theta;
    state.reverse = build_reverse(state.table);
    return state;
  }

  switch (spec.scheme) {
    case Scheme::simple:
      state.table = simple_neighbors(spec.ref, spec.m);
      break;
    case Scheme::adaptive:
      if (eligible == nullptr) {
        throw invalid_input("init_chain: adaptive scheme needs eligible sets");
      }
      state.table = adaptive_neighbors(*eligible, spec.ref, state.theta, spec.m);
      break;
    case Scheme::dense:
      state.table = dense_table(spec.ref);
      break;
  }
  state.factors = compute_factors(spec.ref, state.table, state.theta);
  state.reverse = build_reverse(state.table);
  state.prop_table = state.table;
  state.prop_factors = state.factors;
  return state;
}

void set_max_threads(int threads) {
#if defined(_OPENMP)
  omp_set_num_threads(std::max(1, threads));
#else
  (void)threads;
#endif
}

PosteriorSamples run_sampler(const ModelSpec& spec, const SamplerConfig& config) {
  spec.validate();
  if (config.n_iter < config.n_burn || config.n_burn < 0 || config.thin < 1 ||
      config.n_chains < 1) {
    throw invalid_input("sampler config: need n_iter >= n_burn >= 0, "
                        "thin >= 1, n_chains >= 1");
  }
  set_max_threads(config.threads);

  EligibleSets eligible;
  const EligibleSets* eligible_ptr = nullptr;
  if (!spec.fix_w_zero && spec.scheme == Scheme::adaptive) {
    eligible = build_eligible_sets(spec.ref, spec.m);
    eligible_ptr = &eligible;
  }

  const index_t per_chain = (config.n_iter - config.n_burn) / config.thin;
  const index_t total = per_chain * config.n_chains;
  const index_t r = spec.ref.size();
  const index_t p = spec.X.cols();

  PosteriorSamples out;
  out.p = p;
  out.r = r;
  out.chain.resize(total);
  out.iter.resize(total);
  out.beta.resize(total, p);
  out.tau2.resize(total);
  out.sigma2.resize(total);
  out.a.resize(total);
  out.c.resize(total);
  out.kappa.resize(total);
  if (config.store_w) out.w.resize(total, r);
  out.accept_rate.assign(config.n_chains, 0.0);

  std::vector<std::string> failures(config.n_chains);

#if defined(_OPENMP)
#pragma omp parallel for schedule(static, 1) num_threads(std::max(1, config.threads))
#endif
  for (int chain = 0; chain < config.n_chains; ++chain) {
    try {
      ChainState state = init_chain(spec, config, chain, eligible_ptr);
      index_t slot = static_cast<index_t>(chain) * per_chain;
      for (int it = 1; it <= config.n_iter; ++it) {
        update_beta(state, spec);
        update_tau2(state, spec);
        if (!spec.fix_w_zero) {
          update_w(state, spec);
          update_theta(state, spec, eligible_ptr, it <= config.n_burn);
        }
        if (!state.beta.allFinite() || !std::isfinite(state.tau2) ||
            !state.w.allFinite()) {
          std::ostringstream msg;
          msg << "chain " << chain << " diverged at iteration " << it
              << " (non-finite state); tau2=" << state.tau2;
          throw numeric_error(msg.str());
        }
        const int past_burn = it - config.n_burn;
        if (past_burn >= 1 && past_burn % config.thin == 0) {
          out.chain[slot] = chain;
          out.iter[slot] = it;
          out.beta.row(slot) = state.beta.transpose();
          out.tau2[slot] = state.tau2;
          out.sigma2[slot] = state.theta.sigma2;
          out.a[slot] = state.theta.a;
          out.c[slot] = state.theta.c;
          out.kappa[slot] = state.theta.kappa;
          if (config.store_w) out.w.row(slot) = state.w.transpose();
          ++slot;
        }
      }
      out.accept_rate[chain] =
          state.propose_count > 0
              ? static_cast<double>(state.accept_count) / state.propose_count
              : 0.0;
    } catch (const std::exception& e) {
      failures[chain] = e.what();
    }
  }

  for (const auto& f : failures) {
    if (!f.empty()) throw numeric_error(f);
  }
  return out;
}

}  // namespace dnngp
