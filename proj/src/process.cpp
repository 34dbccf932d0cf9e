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
#include "dnngp/process.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "dnngp/rng.hpp"

namespace dnngp {

namespace {

constexpr double kJitterScale = 1e-10;

/*! Cholesky with the one-shot jitter policy shared by all factor solves. */
Eigen::LLT<mat_t> chol_with_jitter(mat_t& C, double sigma2,
                                   const char* where) {
  Eigen::LLT<mat_t> llt(C);
  if (llt.info() == Eigen::Success) return llt;
  C.diagonal().array() += kJitterScale * sigma2;
  llt.compute(C);
  if (llt.info() != Eigen::Success) {
    throw numeric_error(std::string(where) +
                        ": neighbor covariance not positive definite after "
                        "jitter retry");
  }
  return llt;
}

void factors_dense_path(SparseFactors& factors, const ReferenceSet& ref,
                        const NeighborTable& table,
                        const CovarianceParams& params) {
  const index_t r = ref.size();
  const RefCovEval eval(ref, params);
  mat_t C(r, r);
  for (index_t i = 0; i < r; ++i) {
    C(i, i) = params.sigma2;
    for (index_t j = i + 1; j < r; ++j) {
      const double v = eval(i, j);
      C(i, j) = v;
      C(j, i) = v;
    }
  }
  const Eigen::LLT<mat_t> llt = chol_with_jitter(C, params.sigma2, "factors");
  const mat_t L = llt.matrixL();

#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (index_t i = 0; i < r; ++i) {
    factors.f[i] = L(i, i) * L(i, i);
    if (i == 0) continue;
    // The i-th sequential conditional reads off the Cholesky factor:
    // a_i = L(0:i,0:i)^-T L(i,0:i)'.
    vec_t a = L.row(i).head(i).transpose();
    L.topLeftCorner(i, i)
        .transpose()
        .triangularView<Eigen::Upper>()
        .solveInPlace(a);
    std::copy(a.data(), a.data() + i, factors.a_flat.begin() + table.offsets[i]);
  }
}

}  // namespace

SparseFactors compute_factors(const ReferenceSet& ref,
                              const NeighborTable& table,
                              const CovarianceParams& params) {
  SparseFactors factors;
  factors.a_flat.resize(table.flat.size());
  factors.f.resize(ref.size());
  recompute_factors(factors, ref, table, params);
  return factors;
}

void recompute_factors(SparseFactors& factors, const ReferenceSet& ref,
                       const NeighborTable& table,
                       const CovarianceParams& params) {
  params.validate();
  const index_t r = ref.size();
  if (table.size() != r) {
    throw invalid_input("compute_factors: table size does not match "
                        "reference set");
  }
  if (factors.a_flat.size() != table.flat.size() || factors.f.size() != r) {
    factors.a_flat.resize(table.flat.size());
    factors.f.resize(r);
  }
  factors.theta = params;

  if (table.scheme == Scheme::dense) {
    factors_dense_path(factors, ref, table, params);
    return;
  }

  const RefCovEval eval(ref, params);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 32)
#endif
  for (index_t i = 0; i < r; ++i) {
    const auto nbrs = table.neighbors(i);
    const index_t n = static_cast<index_t>(nbrs.size());
    if (n == 0) {
      factors.f[i] = params.sigma2;
      continue;
    }
    thread_local mat_t C;
    thread_local vec_t rhs;
    C.resize(n, n);
    rhs.resize(n);
    for (index_t a = 0; a < n; ++a) {
      C(a, a) = params.sigma2;
      rhs[a] = eval(nbrs[a], i);
      for (index_t b = a + 1; b < n; ++b) {
        const double v = eval(nbrs[a], nbrs[b]);
        C(a, b) = v;
        C(b, a) = v;
      }
    }
    Eigen::LLT<mat_t> llt(C);
    bool jittered = false;
    if (llt.info() != Eigen::Success) {
      C.diagonal().array() += kJitterScale * params.sigma2;
      llt.compute(C);
      jittered = true;
      if (llt.info() != Eigen::Success) {
        throw numeric_error("compute_factors: neighbor covariance of point " +
                            std::to_string(i) +
                            " not positive definite after jitter retry");
      }
    }
    vec_t a = llt.solve(rhs);
    double f = params.sigma2 - rhs.dot(a);
    if (f <= 0.0 && !jittered) {
      C.diagonal().array() += kJitterScale * params.sigma2;
      llt.compute(C);
      a = llt.solve(rhs);
      f = params.sigma2 - rhs.dot(a);
    }
    if (f <= 0.0) {
      throw numeric_error("compute_factors: nonpositive conditional variance "
                          "at point " + std::to_string(i));
    }
    std::copy(a.data(), a.data() + n, factors.a_flat.begin() + table.offsets[i]);
    factors.f[i] = f;
  }
}

PointConditional point_conditional(const SpaceTimePoint& p,
                                   const std::vector<index_t>& neighbors,
                                   const ReferenceSet& ref,
                                   const CovarianceParams& params) {
  params.validate();
  PointConditional out;
  const index_t n = static_cast<index_t>(neighbors.size());
  if (n == 0) {
    out.f = params.sigma2;
    return out;
  }
  mat_t C(n, n);
  vec_t rhs(n);
  std::vector<SpaceTimePoint> pts(n);
  for (index_t a = 0; a < n; ++a) pts[a] = ref.point(neighbors[a]);
  for (index_t a = 0; a < n; ++a) {
    rhs[a] = cov(spatial_lag(pts[a], p), temporal_lag(pts[a], p), params);
    C(a, a) = params.sigma2;
    for (index_t b = a + 1; b < n; ++b) {
      const double v =
          cov(spatial_lag(pts[a], pts[b]), temporal_lag(pts[a], pts[b]), params);
      C(a, b) = v;
      C(b, a) = v;
    }
  }
  const Eigen::LLT<mat_t> llt =
      chol_with_jitter(C, params.sigma2, "point_conditional");
  out.a = llt.solve(rhs);
  out.f = params.sigma2 - rhs.dot(out.a);
  if (out.f <= 0.0) {
    throw numeric_error("point_conditional: nonpositive conditional variance");
  }
  return out;
}

double log_prior_density(const vec_t& w, const NeighborTable& table,
                         const SparseFactors& factors) {
  const index_t r = table.size();
  if (w.size() != r) {
    throw invalid_input("log_prior_density: w has length " +
                        std::to_string(w.size()) + ", expected " +
                        std::to_string(r));
  }
  vec_t terms(r);
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (index_t i = 0; i < r; ++i) {
    const auto nbrs = table.neighbors(i);
    double mean = 0.0;
    const double* a = factors.a_flat.data() + table.offsets[i];
    for (std::size_t k = 0; k < nbrs.size(); ++k) mean += a[k] * w[nbrs[k]];
    const double resid = w[i] - mean;
    terms[i] = -0.5 * (std::log(2.0 * M_PI * factors.f[i]) +
                       resid * resid / factors.f[i]);
  }
  // Fixed-order accumulation keeps the result identical for any worker count.
  double total = 0.0;
  for (index_t i = 0; i < r; ++i) total += terms[i];
  return total;
}

PrecisionView assemble_precision(const NeighborTable& table,
                                 const SparseFactors& factors) {
  const index_t r = table.size();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(table.flat.size() * 4 + r);
  double log_det_K = 0.0;
  for (index_t i = 0; i < r; ++i) {
    const auto nbrs = table.neighbors(i);
    const double* a = factors.a_flat.data() + table.offsets[i];
    const double inv_f = 1.0 / factors.f[i];
    log_det_K += std::log(factors.f[i]);
    trips.emplace_back(i, i, inv_f);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      trips.emplace_back(nbrs[k], i, -a[k] * inv_f);
      trips.emplace_back(i, nbrs[k], -a[k] * inv_f);
      for (std::size_t l = 0; l < nbrs.size(); ++l) {
        trips.emplace_back(nbrs[k], nbrs[l], a[k] * a[l] * inv_f);
      }
    }
  }
  PrecisionView view;
  view.matrix.resize(r, r);
  view.matrix.setFromTriplets(trips.begin(), trips.end());
  view.log_det_K = log_det_K;
  return view;
}

vec_t sample_prior(const NeighborTable& table, const SparseFactors& factors,
                   std::uint64_t seed) {
  Rng rng(seed);
  const index_t r = table.size();
  vec_t w(r);
  for (index_t i = 0; i < r; ++i) {
    const auto nbrs = table.neighbors(i);
    const double* a = factors.a_flat.data() + table.offsets[i];
    double mean = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) mean += a[k] * w[nbrs[k]];
    w[i] = mean + std::sqrt(factors.f[i]) * rng.normal();
  }
  return w;
}

namespace {

/*! Solves (I - A)' v = rhs by back substitution through the reverse lists. */
vec_t upper_unit_solve(const NeighborTable& table, const SparseFactors& factors,
                       const ReverseTable& rev, vec_t rhs) {
  for (index_t i = static_cast<index_t>(rhs.size()) - 1; i >= 0; --i) {
    double acc = rhs[i];
    const auto owners = rev.owners(i);
    const std::int32_t* pos = rev.pos.data() + rev.offsets[i];
    for (std::size_t k = 0; k < owners.size(); ++k) {
      const std::int32_t j = owners[k];
      acc += factors.a_flat[table.offsets[j] + pos[k]] * rhs[j];
    }
    rhs[i] = acc;
  }
  return rhs;
}

}  // namespace

double induced_cov(const SpaceTimePoint& la, const SpaceTimePoint& lb,
                   const ReferenceSet& ref, const NeighborTable& table,
                   const SparseFactors& factors) {
  const index_t r = ref.size();
  const auto ia = ref.find(la);
  const auto ib = ref.find(lb);
  const ReverseTable rev = build_reverse(table);
  const CovarianceParams& params = factors.theta;

  const auto scatter = [&](const SpaceTimePoint& p) {
    const std::vector<index_t> nbrs = prediction_neighbors(
        p, ref, table.scheme, table.m, &params);
    const PointConditional pc = point_conditional(p, nbrs, ref, params);
    vec_t v = vec_t::Zero(r);
    for (index_t k = 0; k < static_cast<index_t>(nbrs.size()); ++k) {
      v[nbrs[k]] = pc.a[k];
    }
    return std::make_pair(v, pc.f);
  };
  const auto basis = [&](index_t q) {
    vec_t v = vec_t::Zero(r);
    v[q] = 1.0;
    return v;
  };

  vec_t ra, rb;
  double extra = 0.0;
  if (ia && ib) {
    ra = basis(*ia);
    rb = basis(*ib);
  } else if (ia || ib) {
    // One point in R: a'(l) K_{*q}, symmetric in the two arguments.
    ra = scatter(ia ? lb : la).first;
    rb = basis(ia ? *ia : *ib);
  } else {
    auto pa = scatter(la);
    ra = std::move(pa.first);
    if ((la.s - lb.s).norm() == 0.0 && la.t == lb.t) {
      rb = ra;
      extra = pa.second;
    } else {
      rb = scatter(lb).first;
    }
  }
  const vec_t sa = upper_unit_solve(table, factors, rev, std::move(ra));
  const vec_t sb = upper_unit_solve(table, factors, rev, std::move(rb));
  return (sa.array() * factors.f.array() * sb.array()).sum() + extra;
}

}  // namespace dnngp
