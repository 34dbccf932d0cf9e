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
#ifndef DNNGP_NEIGHBORS_HPP_
#define DNNGP_NEIGHBORS_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dnngp/covariance.hpp"
#include "dnngp/spacetime.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

enum class Scheme { simple, adaptive, dense };

/*! Parameter-free candidate sets for adaptive selection.
 *
 * A history point p is eligible for i when the number of history points
 * guaranteed to be at least as correlated with i as p -- under every
 * kernel that is non-increasing in each lag -- is at most m - 1. The
 * guaranteed-better points are those whose lag pair (h, u) dominates
 * p's with at least one strict inequality, plus exact lag ties that win
 * the smaller-index tie break. Lags equal within 1e-12 relative are
 * treated as tied.
 *
 * For every naturally monotone kernel the m most correlated history
 * points of i are then contained in E(i), so one scan of E(i) per
 * parameter update recovers the exact nearest-neighbor set.
 */
struct EligibleSets {
  int m = 0;
  std::vector<std::int32_t> offsets;  // r+1
  std::vector<std::int32_t> flat;     // ascending indices per point

  index_t size() const { return static_cast<index_t>(offsets.size()) - 1; }
  std::span<const std::int32_t> at(index_t i) const {
    return {flat.data() + offsets[i],
            static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }
  double mean_size() const {
    return size() > 0 ? static_cast<double>(flat.size()) / size() : 0.0;
  }
};

/*! Per-point conditioning sets N(i), each a subset of the history of i,
 *  stored ascending. |N(i)| <= m and N(0) is empty. */
struct NeighborTable {
  Scheme scheme = Scheme::simple;
  int m = 0;
  std::vector<std::int32_t> offsets;  // r+1
  std::vector<std::int32_t> flat;     // ascending indices per point
  std::shared_ptr<const EligibleSets> eligible;  // adaptive scheme only

  index_t size() const { return static_cast<index_t>(offsets.size()) - 1; }
  index_t count(index_t i) const { return offsets[i + 1] - offsets[i]; }
  std::span<const std::int32_t> neighbors(index_t i) const {
    return {flat.data() + offsets[i],
            static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }
};

/*! Reverse adjacency U(i) = { j : i in N(j) } with the position of i
 *  inside each N(j); rebuilt whenever the table changes. */
struct ReverseTable {
  std::vector<std::int32_t> offsets;  // r+1
  std::vector<std::int32_t> owner;
  std::vector<std::int32_t> pos;

  std::span<const std::int32_t> owners(index_t i) const {
    return {owner.data() + offsets[i],
            static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
  }
};

ReverseTable build_reverse(const NeighborTable& table);

/*! Fixed neighbor sets of size m (a perfect square): the sqrt(m) nearest
 *  earlier-index sites at the same time, plus the sqrt(m) nearest other
 *  sites at each of the sqrt(m)-1 preceding times, truncated where the
 *  grid runs out. Independent of the kernel. */
NeighborTable simple_neighbors(const ReferenceSet& ref, int m);

/*! Builds E(i) for every reference point; parallel over points. */
EligibleSets build_eligible_sets(const ReferenceSet& ref, int m);

/*! Kernel-ranked selection of min(m, |E(i)|) neighbors from the eligible
 *  sets; ties in covariance broken by smaller index. */
NeighborTable adaptive_neighbors(const EligibleSets& eligible,
                                 const ReferenceSet& ref,
                                 const CovarianceParams& params, int m);

/*! Refreshes N(i) in place after a parameter update. Offsets never change
 *  (|N(i)| = min(m, |E(i)|) is theta-free), so this re-ranks and rewrites
 *  the flat array only; parallel over points. */
void reselect_adaptive(NeighborTable& table, const EligibleSets& eligible,
                       const ReferenceSet& ref, const CovarianceParams& params);

/*! Generic re-ranking used by reselect_adaptive; kernel(p, i) must return
 *  the covariance between reference points p and i. */
template <class Kernel>
void reselect_with_kernel(NeighborTable& table, const EligibleSets& eligible,
                          Kernel&& kernel);

/*! Saturated table with N(i) equal to the full history of i. */
NeighborTable dense_table(const ReferenceSet& ref);

/*! Theta-free eligible candidates in R for a point outside R, under the
 *  same dominance-count rule with the whole reference set as history. */
std::vector<index_t> eligible_for_point(const SpaceTimePoint& p,
                                        const ReferenceSet& ref, int m);

/*! Ranked selection for a point outside R given its eligible candidates. */
std::vector<index_t> select_point_neighbors(const SpaceTimePoint& p,
                                            const std::vector<index_t>& eligible,
                                            const ReferenceSet& ref,
                                            const CovarianceParams& params,
                                            int m);

/*! Neighbor set in R for a point outside R. Simple scheme: Cartesian
 *  product of the sqrt(m) nearest sites and sqrt(m) nearest times.
 *  Adaptive: the m most correlated points within eligible_for_point.
 *  Dense: all of R. Throws invalid_input when p coincides with a
 *  reference point (use the reference index instead). */
std::vector<index_t> prediction_neighbors(const SpaceTimePoint& p,
                                          const ReferenceSet& ref,
                                          Scheme scheme, int m,
                                          const CovarianceParams* params);

// ---------------------------------------------------------------------------

template <class Kernel>
void reselect_with_kernel(NeighborTable& table, const EligibleSets& eligible,
                          Kernel&& kernel) {
  const index_t r = table.size();
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 64)
#endif
  for (index_t i = 0; i < r; ++i) {
    const auto cand = eligible.at(i);
    const index_t take = table.offsets[i + 1] - table.offsets[i];
    if (take == 0) continue;
    std::vector<std::pair<double, std::int32_t>> scored;
    scored.reserve(cand.size());
    for (const std::int32_t p : cand) scored.emplace_back(kernel(p, i), p);
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                      [](const auto& x, const auto& y) {
                        if (x.first != y.first) return x.first > y.first;
                        return x.second < y.second;
                      });
    std::int32_t* out = table.flat.data() + table.offsets[i];
    for (index_t k = 0; k < take; ++k) out[k] = scored[k].second;
    std::sort(out, out + take);
  }
}

}  // namespace dnngp

#endif  // DNNGP_NEIGHBORS_HPP_
