#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "dnngp/covariance.hpp"
#include "oracles.hpp"

using namespace dnngp;

namespace {
const CovarianceParams kDataset1 =
    CovarianceParams::exponential(1.0, 50.0, 25.0, 0.75);
const CovarianceParams kDataset2 =
    CovarianceParams::exponential(1.0, 500.0, 2.5, 0.5);
}  // namespace

TEST_CASE("zero-lag value is the marginal variance") {
  for (const double s2 : {0.3, 1.0, 4.2}) {
    CHECK(cov(0.0, 0.0, CovarianceParams::exponential(s2, 7.0, 2.0, 0.4)) ==
          doctest::Approx(s2).epsilon(1e-14));
    CHECK(cov(0.0, 0.0,
              CovarianceParams::matern(s2, 7.0, 2.0, 0.4, 0.8, 1.7, 0.2)) ==
          doctest::Approx(s2).epsilon(1e-14));
  }
}

TEST_CASE("temporal profile at h = 0 matches the closed form") {
  // sigma2 = 1, a = 50, kappa = 0.75: value is (50 u^2 + 1)^-0.75.
  double prev = 1.0;
  for (const double u : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
    const double expected = std::pow(50.0 * u * u + 1.0, -0.75);
    const double got = cov(0.0, u, kDataset1);
    CHECK(got == doctest::Approx(expected).epsilon(1e-14));
    CHECK(got <= prev + 1e-15);  // monotone decreasing in u at h = 0
    prev = got;
  }
}

TEST_CASE("separable case evaluated by hand") {
  // kappa = 0 makes the kernel exp(-c h) regardless of u; at c = h = 1
  // the value is e^-1.
  const CovarianceParams p = CovarianceParams::exponential(1.0, 1.0, 1.0, 0.0);
  CHECK(cov(1.0, 1.0, p) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  // Exact factorization: C(h,u) C(0,0) = C(h,0) C(0,u) at machine precision.
  for (const double h : {0.0, 0.3, 1.2}) {
    for (const double u : {0.0, 0.4, 2.0}) {
      CHECK(cov(h, u, p) * cov(0.0, 0.0, p) ==
            doctest::Approx(cov(h, 0.0, p) * cov(0.0, u, p)).epsilon(1e-15));
    }
  }
}

TEST_CASE("matern order 1/2 equals the exponential form") {
  const CovarianceParams me =
      CovarianceParams::matern(1.3, 20.0, 5.0, 0.6, 1.0, 0.5, 0.0);
  const CovarianceParams ex = CovarianceParams::exponential(1.3, 20.0, 5.0, 0.6);
  for (const double h : {0.0, 0.01, 0.1, 0.5, 1.0, 2.0}) {
    for (const double u : {0.0, 0.02, 0.2, 1.0}) {
      const double a = cov(h, u, me);
      const double b = cov(h, u, ex);
      CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }
  }
}

TEST_CASE("matern half-integer orders match their closed forms") {
  for (const double nu : {0.5, 1.5, 2.5}) {
    const CovarianceParams p =
        CovarianceParams::matern(2.0, 30.0, 8.0, 0.5, 0.9, nu, 0.1);
    for (const double h : {0.001, 0.05, 0.3, 1.0}) {
      for (const double u : {0.0, 0.1, 0.7}) {
        const double tden = 30.0 * std::pow(u, 1.8) + 1.0;
        const double x = 8.0 * h * std::pow(tden, -0.25);
        const double expected = 2.0 * std::pow(tden, -0.6) *
                                oracles::matern_closed_form(nu, x);
        CHECK(cov(h, u, p) == doctest::Approx(expected).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("kernel is bounded by the zero-lag value") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const CovarianceParams p = CovarianceParams::exponential(
        rng.uniform(0.2, 4.0), rng.uniform(0.5, 500.0), rng.uniform(0.2, 30.0),
        rng.uniform());
    for (int k = 0; k < 20; ++k) {
      const double h = rng.uniform(0.0, 3.0);
      const double u = rng.uniform(0.0, 3.0);
      CHECK(cov(h, u, p) <= p.sigma2 * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("parameter and argument validation") {
  CHECK_THROWS_AS(CovarianceParams::exponential(1.0, 1.0, 0.0, 0.5),
                  invalid_input);  // c > 0 enforced
  CHECK_THROWS_AS(CovarianceParams::exponential(-1.0, 1.0, 1.0, 0.5),
                  invalid_input);
  CHECK_THROWS_AS(CovarianceParams::exponential(1.0, 1.0, 1.0, 1.5),
                  invalid_input);
  CHECK_THROWS_AS(CovarianceParams::matern(1.0, 1.0, 1.0, 0.5, 2.0, 0.5, 0.0),
                  invalid_input);
  const CovarianceParams ok = CovarianceParams::exponential(1.0, 1.0, 1.0, 0.5);
  CHECK_THROWS_AS(cov(std::nan(""), 0.0, ok), invalid_input);
  CHECK_THROWS_AS(cov(-0.5, 0.0, ok), invalid_input);
}

TEST_CASE("cross covariance: shape, symmetry, positive definiteness") {
  std::vector<SpaceTimePoint> single(1);
  single[0].s << 0.2, 0.4, 0.0;
  single[0].t = 0.7;
  const mat_t one = cross_cov_matrix(single, single, kDataset1);
  REQUIRE(one.rows() == 1);
  CHECK(one(0, 0) == doctest::Approx(1.0));

  const ReferenceSet grid = oracles::unit_grid(3, 3);
  const auto pts = oracles::all_points(grid);
  const mat_t C = cross_cov_matrix(pts, pts, kDataset1);
  CHECK((C - C.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((C.diagonal().array() - kDataset1.sigma2).abs().maxCoeff() < 1e-14);
  const Eigen::SelfAdjointEigenSolver<mat_t> es(C);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  std::vector<SpaceTimePoint> sub(pts.begin(), pts.begin() + 5);
  const mat_t AB = cross_cov_matrix(sub, pts, kDataset1);
  const mat_t BA = cross_cov_matrix(pts, sub, kDataset1);
  CHECK((AB - BA.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("natural monotonicity over short-range grids") {
  const auto linspace = [](double lo, double hi, int n) {
    vec_t v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1.0);
    return v;
  };
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CovarianceParams p = CovarianceParams::exponential(
        rng.uniform(0.2, 4.0), rng.uniform(0.5, 500.0), rng.uniform(0.2, 30.0),
        rng.uniform());
    // Any valid parameter point is monotone while c h stays below 2.
    const vec_t h = linspace(0.0, exponential_monotone_h_max(p.c), 40);
    const vec_t u = linspace(0.0, 2.0, 40);
    CHECK(check_natural_monotonicity(p, h, u));
  }
  // Dataset-2 values: monotone over lags up to 2 / c = 0.8.
  CHECK(check_natural_monotonicity(kDataset2, linspace(0.0, 0.8, 50),
                                   linspace(0.0, 1.0, 50)));
}

TEST_CASE("monotonicity check detects the long-range rise in u") {
  // Beyond c h = 2 the exponential form rises with small temporal lags:
  // at h = 1, Dataset-2 values give C(1, 0.0632) > C(1, 0).
  const auto linspace = [](double lo, double hi, int n) {
    vec_t v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1.0);
    return v;
  };
  CHECK(cov(1.0, 0.0632, kDataset2) > cov(1.0, 0.0, kDataset2));
  CHECK(!check_natural_monotonicity(kDataset2, linspace(0.0, 1.4, 60),
                                    linspace(0.0, 0.5, 60)));
}

TEST_CASE("monotonicity check validates its grids") {
  vec_t good(3), bad(3);
  good << 0.0, 0.5, 1.0;
  bad << 1.0, 0.5, 0.0;
  CHECK_THROWS_AS(check_natural_monotonicity(kDataset1, bad, good),
                  invalid_input);
}
