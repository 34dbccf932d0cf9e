#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "dnngp/datagen.hpp"
#include "dnngp/metrics.hpp"
#include "oracles.hpp"

using namespace dnngp;

namespace {

ModelSpec regression_spec(index_t n, double b0, double b1, double sd,
                          std::uint64_t seed) {
  const int n_times = static_cast<int>(n / 4);
  mat_t sites(4, 2);
  sites << 0, 0, 0, 1, 1, 0, 1, 1;
  vec_t times(n_times);
  for (int k = 0; k < n_times; ++k) times[k] = k;
  ModelSpec spec{ReferenceSet(sites, times)};
  Rng rng(seed);
  const index_t r = spec.ref.size();
  spec.X.resize(r, 2);
  spec.y.resize(r);
  for (index_t i = 0; i < r; ++i) {
    spec.X(i, 0) = 1.0;
    spec.X(i, 1) = rng.normal();
    spec.y[i] = b0 + b1 * spec.X(i, 1) + sd * rng.normal();
  }
  spec.observed.assign(r, 1);
  spec.m = 0;
  spec.fix_w_zero = true;
  spec.validate();
  return spec;
}

PosteriorSamples degenerate_posterior(const ModelSpec& spec, index_t n_draws,
                                      const vec_t& beta, double tau2) {
  PosteriorSamples s;
  s.p = spec.X.cols();
  s.r = spec.ref.size();
  s.chain.assign(n_draws, 0);
  s.iter.resize(n_draws);
  s.beta.resize(n_draws, s.p);
  s.tau2 = vec_t::Constant(n_draws, tau2);
  s.sigma2 = vec_t::Ones(n_draws);
  s.a = vec_t::Ones(n_draws);
  s.c = vec_t::Ones(n_draws);
  s.kappa = vec_t::Zero(n_draws);
  for (index_t d = 0; d < n_draws; ++d) {
    s.iter[d] = static_cast<int>(d);
    s.beta.row(d) = beta.transpose();
  }
  s.accept_rate = {0.0};
  return s;
}

}  // namespace

TEST_CASE("dic: degenerate chain has zero complexity") {
  const ModelSpec spec = regression_spec(40, 0.5, -1.0, 0.3, 51);
  const vec_t beta = (vec_t(2) << 0.5, -1.0).finished();
  const PosteriorSamples s = degenerate_posterior(spec, 20, beta, 0.09);
  const auto [pD, DIC] = dic(s, spec);
  CHECK(pD == doctest::Approx(0.0).epsilon(1e-10));
  // DIC equals the deviance at the common parameter point.
  double dev = 0.0;
  for (index_t i = 0; i < spec.ref.size(); ++i) {
    const double resid = spec.y[i] - spec.X.row(i).dot(beta);
    dev += std::log(2.0 * M_PI * 0.09) + resid * resid / 0.09;
  }
  CHECK(DIC == doctest::Approx(dev).epsilon(1e-10));
  CHECK_THROWS_AS(dic(degenerate_posterior(spec, 1, beta, 0.09), spec),
                  invalid_input);
}

TEST_CASE("dic: non-spatial regression has pD near p + 1") {
  const ModelSpec spec = regression_spec(200, 1.0, 2.0, 0.5, 52);
  SamplerConfig cfg;
  cfg.n_iter = 4000;
  cfg.n_burn = 1000;
  cfg.n_chains = 1;
  cfg.seed = 5;
  const PosteriorSamples s = run_sampler(spec, cfg);
  const auto [pD, DIC] = dic(s, spec);
  CHECK(pD == doctest::Approx(3.0).epsilon(0.2));  // p = 2 plus tau2
  CHECK(DIC > 0.0);
}

TEST_CASE("dic and predictive loss are invariant to draw order") {
  const ModelSpec spec = regression_spec(60, 0.2, 1.5, 0.4, 53);
  SamplerConfig cfg;
  cfg.n_iter = 400;
  cfg.n_burn = 100;
  cfg.seed = 6;
  PosteriorSamples s = run_sampler(spec, cfg);
  const auto [pD1, DIC1] = dic(s, spec);
  const auto [G1, P1, D1] = predictive_loss(s, spec);

  // Shuffle rows.
  std::vector<index_t> perm(s.n_draws());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(99));
  PosteriorSamples t = s;
  for (index_t d = 0; d < s.n_draws(); ++d) {
    t.beta.row(d) = s.beta.row(perm[d]);
    t.tau2[d] = s.tau2[perm[d]];
    if (s.has_w()) t.w.row(d) = s.w.row(perm[d]);
  }
  const auto [pD2, DIC2] = dic(t, spec);
  const auto [G2, P2, D2] = predictive_loss(t, spec);
  CHECK(pD1 == doctest::Approx(pD2).epsilon(1e-12));
  CHECK(DIC1 == doctest::Approx(DIC2).epsilon(1e-12));
  CHECK(G1 == doctest::Approx(G2).epsilon(1e-12));
  CHECK(P1 == doctest::Approx(P2).epsilon(1e-12));
  CHECK(D1 == doctest::Approx(D2).epsilon(1e-12));
}

TEST_CASE("predictive loss: exact-fit limit and noise expectation") {
  ModelSpec spec = regression_spec(50, 0.0, 1.0, 0.2, 54);
  // Replicates centered exactly on y with zero variance: G = P = D = 0.
  PosteriorSamples s = degenerate_posterior(
      spec, 10, (vec_t(2) << 0.0, 1.0).finished(), 0.0);
  // Force y to equal x'beta exactly.
  for (index_t i = 0; i < spec.ref.size(); ++i) {
    spec.y[i] = spec.X(i, 1);
  }
  // tau2 = 0 in every draw: the replicate law is a point mass at x'beta.
  const auto [G, P, D] = predictive_loss(s, spec);
  CHECK(G == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(P == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(D == doctest::Approx(0.0).epsilon(1e-12));

  // Pure-noise model: E[G] ~ n tau2_true.
  const double tau2_true = 0.49;
  const index_t n = 400;
  ModelSpec noise = regression_spec(n, 0.0, 0.0, std::sqrt(tau2_true), 55);
  const PosteriorSamples sn = degenerate_posterior(
      noise, 10, vec_t::Zero(2), tau2_true);
  const auto [Gn, Pn, Dn] = predictive_loss(sn, noise);
  // G ~ sum of squared noise: mean n tau2, sd tau2 sqrt(2n).
  CHECK(std::abs(Gn - n * tau2_true) <
        3.0 * tau2_true * std::sqrt(2.0 * n));
  CHECK(Pn == doctest::Approx(n * tau2_true).epsilon(1e-10));
  CHECK(Dn == doctest::Approx(Gn + Pn).epsilon(1e-12));
}

TEST_CASE("predictive loss reacts correctly to inflated spread") {
  const ModelSpec spec = regression_spec(80, 0.3, -0.7, 0.5, 56);
  const vec_t beta = (vec_t(2) << 0.3, -0.7).finished();
  const auto [G1, P1, D1] =
      predictive_loss(degenerate_posterior(spec, 10, beta, 0.1), spec);
  const auto [G2, P2, D2] =
      predictive_loss(degenerate_posterior(spec, 10, beta, 1.0), spec);
  CHECK(G1 == doctest::Approx(G2).epsilon(1e-10));  // means unchanged
  CHECK(P2 > P1);                                   // penalty grows
}

TEST_CASE("rmspe closed cases") {
  vec_t truth(4);
  truth << 1.0, 2.0, 3.0, 4.0;
  CHECK(rmspe(truth, truth) == doctest::Approx(0.0));
  CHECK(rmspe(truth.array() + 0.5, truth) == doctest::Approx(0.5).epsilon(1e-12));
  vec_t pred(4);
  pred << 1.5, 1.0, 3.0, 6.0;
  // Hand value: sqrt((0.25 + 1 + 0 + 4) / 4).
  CHECK(rmspe(pred, truth) ==
        doctest::Approx(std::sqrt(5.25 / 4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(rmspe(vec_t(), vec_t()), invalid_input);
}

TEST_CASE("interval coverage counting") {
  vec_t lo(4), hi(4), truth(4);
  lo << 0, 0, 0, 0;
  hi << 1, 1, 1, 1;
  truth << 0.5, 0.0, 1.0, 2.0;  // closed intervals: 3 of 4 inside
  CHECK(ci_coverage(lo, hi, truth) == doctest::Approx(75.0));
  truth << 0.1, 0.2, 0.3, 0.4;
  CHECK(ci_coverage(lo, hi, truth) == doctest::Approx(100.0));
  truth << -1, -1, 2, 2;
  CHECK(ci_coverage(lo, hi, truth) == doctest::Approx(0.0));
  hi[0] = -0.5;
  CHECK_THROWS_AS(ci_coverage(lo, hi, truth), invalid_input);
}
