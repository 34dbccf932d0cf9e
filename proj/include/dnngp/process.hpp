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
#ifndef DNNGP_PROCESS_HPP_
#define DNNGP_PROCESS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dnngp/covariance.hpp"
#include "dnngp/neighbors.hpp"
#include "dnngp/spacetime.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

/*! Per-point conditional weights a_i and variances f_i of the compressed
 *  factorization: w_i | w_{N(i)} ~ Normal(a_i' w_{N(i)}, f_i). The weight
 *  array is ragged, aligned with the owning table's flat neighbor list.
 *
 *  The implied joint precision of w over the reference set is
 *  (I - A)' F^-1 (I - A), where row i of A scatters a_i over N(i) and
 *  F = diag(f). */
struct SparseFactors {
  std::vector<double> a_flat;
  vec_t f;
  CovarianceParams theta;

  std::span<const double> weights(const NeighborTable& table, index_t i) const {
    return {a_flat.data() + table.offsets[i],
            static_cast<std::size_t>(table.offsets[i + 1] - table.offsets[i])};
  }
};

/*! Solves C_{N(i),N(i)} a_i = C_{N(i),i} and f_i = C(i,i) - C_{i,N(i)} a_i
 *  for every reference point; parallel over points.
 *
 *  A failed Cholesky gets one retry with 1e-10 * sigma2 added to the
 *  diagonal; a second failure (or a nonpositive f_i) raises numeric_error.
 *  Tables with the dense scheme take a single-factorization path that
 *  reads every a_i, f_i off one Cholesky of C_{R,R}. */
SparseFactors compute_factors(const ReferenceSet& ref,
                              const NeighborTable& table,
                              const CovarianceParams& params);

/*! In-place variant reusing the allocation; table shape must match. */
void recompute_factors(SparseFactors& factors, const ReferenceSet& ref,
                       const NeighborTable& table,
                       const CovarianceParams& params);

/*! Conditional weights and variance for one point given an arbitrary
 *  conditioning set in R (used for off-reference prediction). */
struct PointConditional {
  vec_t a;
  double f;
};
PointConditional point_conditional(const SpaceTimePoint& p,
                                   const std::vector<index_t>& neighbors,
                                   const ReferenceSet& ref,
                                   const CovarianceParams& params);

/*! Joint log density sum_i log Normal(w_i | a_i' w_{N(i)}, f_i); equals the
 *  dense Normal(0, K) log density of the induced process. */
double log_prior_density(const vec_t& w, const NeighborTable& table,
                         const SparseFactors& factors);

/*! Sparse K^-1 = (I - A)' F^-1 (I - A) with at most (m+1)^2 r stored
 *  nonzeros, plus log det K = sum_i log f_i. Intended for tests and
 *  diagnostics; the sampler consumes a_i, f_i directly. */
struct PrecisionView {
  sp_mat_t matrix;
  double log_det_K = 0.0;
};
PrecisionView assemble_precision(const NeighborTable& table,
                                 const SparseFactors& factors);

/*! Ancestral draw w_i = a_i' w_{N(i)} + sqrt(f_i) z_i in enumeration
 *  order; deterministic given the seed. */
vec_t sample_prior(const NeighborTable& table, const SparseFactors& factors,
                   std::uint64_t seed);

/*! Covariance of the induced process between two arbitrary points: the K
 *  entry when both lie in R, a'(la) K_{*q} when one does, and
 *  a'(la) K a(lb) + 1{la = lb} f_la when neither does. */
double induced_cov(const SpaceTimePoint& la, const SpaceTimePoint& lb,
                   const ReferenceSet& ref, const NeighborTable& table,
                   const SparseFactors& factors);

}  // namespace dnngp

#endif  // DNNGP_PROCESS_HPP_
