#include <doctest.h>

#include "dnngp/datagen.hpp"
#include "oracles.hpp"

using namespace dnngp;

TEST_CASE("simulation is reproducible and respects the cap") {
  SyntheticSpec spec;
  spec.sites_per_axis = 4;
  spec.n_times = 4;
  spec.n_holdout = 10;
  spec.seed = 17;
  const SyntheticData d1 = simulate_dataset(spec);
  const SyntheticData d2 = simulate_dataset(spec);
  CHECK((d1.y - d2.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d1.w_true - d2.w_true).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d1.y_hold - d2.y_hold).cwiseAbs().maxCoeff() == 0.0);

  spec.seed = 18;
  const SyntheticData d3 = simulate_dataset(spec);
  CHECK((d1.y - d3.y).cwiseAbs().maxCoeff() > 0.0);

  SyntheticSpec big;
  big.sites_per_axis = 40;  // 1600 sites x 8 times > 5000
  CHECK_THROWS_AS(simulate_dataset(big), invalid_input);
}

TEST_CASE("holdout points are strictly off-grid") {
  SyntheticSpec spec;
  spec.sites_per_axis = 5;
  spec.n_times = 5;
  spec.n_holdout = 50;
  spec.seed = 3;
  const SyntheticData d = simulate_dataset(spec);
  for (const auto& p : d.holdout) {
    CHECK(!d.ref.find(p).has_value());
    double min_dist = 1e9;
    for (index_t i = 0; i < d.ref.size(); ++i) {
      const SpaceTimePoint q = d.ref.point(i);
      min_dist = std::min(min_dist, spatial_lag(p, q) + temporal_lag(p, q));
    }
    CHECK(min_dist > 0.0);
  }
}

TEST_CASE("degenerate single-point simulation") {
  SyntheticSpec spec;
  spec.sites_per_axis = 1;
  spec.n_times = 1;
  spec.beta = vec_t::Zero(1);
  spec.tau2 = 0.0;
  spec.theta = CovarianceParams::exponential(2.0, 1.0, 1.0, 0.5);
  spec.seed = 4;
  const SyntheticData d = simulate_dataset(spec);
  REQUIRE(d.y.size() == 1);
  CHECK(d.y[0] == d.w_true[0]);  // tau2 = 0, beta = 0: y is the field itself
}

TEST_CASE("simulated field moments match the kernel") {
  // Empirical covariance at 3 fixed points over repeated simulations.
  SyntheticSpec spec;
  spec.sites_per_axis = 3;
  spec.n_times = 2;
  spec.theta = CovarianceParams::exponential(1.0, 5.0, 2.0, 0.5);
  const index_t idx[3] = {0, 7, 16};
  const int n_rep = 2500;
  mat_t draws(n_rep, 3);
  for (int rep = 0; rep < n_rep; ++rep) {
    spec.seed = 9000 + rep;
    const SyntheticData d = simulate_dataset(spec);
    for (int k = 0; k < 3; ++k) draws(rep, k) = d.w_true[idx[k]];
  }
  SyntheticSpec probe = spec;
  probe.seed = 1;
  const SyntheticData d = simulate_dataset(probe);
  const vec_t mean = draws.colwise().mean().transpose();
  for (int p = 0; p < 3; ++p) {
    for (int q = p; q < 3; ++q) {
      double cov_pq = 0.0;
      for (int rep = 0; rep < n_rep; ++rep) {
        cov_pq += (draws(rep, p) - mean[p]) * (draws(rep, q) - mean[q]);
      }
      cov_pq /= n_rep - 1;
      const SpaceTimePoint pp = d.ref.point(idx[p]);
      const SpaceTimePoint pq = d.ref.point(idx[q]);
      const double truth =
          cov(spatial_lag(pp, pq), temporal_lag(pp, pq), spec.theta);
      const double vp = spec.theta.sigma2;
      const double se = std::sqrt((vp * vp + truth * truth) / n_rep);
      CHECK(std::abs(cov_pq - truth) < 3.0 * se);
    }
  }
}

TEST_CASE("dense log density closed forms") {
  // Single point at w = 0: -log(2 pi sigma2) / 2.
  std::vector<SpaceTimePoint> one(1);
  one[0].s << 0.5, 0.5, 0.0;
  one[0].t = 0.5;
  const CovarianceParams theta = CovarianceParams::exponential(2.0, 1.0, 1.0, 0.5);
  CHECK(dense_gp_logdensity(vec_t::Zero(1), one, theta) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI * 2.0)).epsilon(1e-14));

  // Two far-apart points under a short-range kernel: the joint density
  // splits into the sum of the univariate ones.
  std::vector<SpaceTimePoint> two(2);
  two[0].s << 0.0, 0.0, 0.0;
  two[0].t = 0.0;
  two[1].s << 500.0, 0.0, 0.0;
  two[1].t = 0.0;
  const CovarianceParams sharp = CovarianceParams::exponential(1.5, 1.0, 3.0, 0.2);
  vec_t w(2);
  w << 0.7, -1.1;
  const double joint = dense_gp_logdensity(w, two, sharp);
  const double uni = dense_gp_logdensity(w.head(1), {two[0]}, sharp) +
                     dense_gp_logdensity(w.tail(1), {two[1]}, sharp);
  CHECK(joint == doctest::Approx(uni).epsilon(1e-12));

  CHECK_THROWS_AS(dense_gp_logdensity(vec_t::Zero(3), two, sharp),
                  invalid_input);
}
