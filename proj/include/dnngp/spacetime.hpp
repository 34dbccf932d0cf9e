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
#ifndef DNNGP_SPACETIME_HPP_
#define DNNGP_SPACETIME_HPP_

#include <optional>
#include <vector>

#include "dnngp/types.hpp"

namespace dnngp {

/*! One space-time coordinate. Spatial coordinates are stored zero-padded
 *  to three components so distances work for d = 1, 2, 3 alike. */
struct SpaceTimePoint {
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  double t = 0.0;
};

inline double spatial_lag(const SpaceTimePoint& a, const SpaceTimePoint& b) {
  return (a.s - b.s).norm();
}

inline double temporal_lag(const SpaceTimePoint& a, const SpaceTimePoint& b) {
  return std::abs(a.t - b.t);
}

/*! Time-major enumeration of a site x time grid.
 *
 * Index i in [0, r) maps to (site j, time level k) with i = k*N + j: all
 * sites at the first time, then all sites at the second time, and so on.
 * Within one time level, sites keep their input order. Under this
 * enumeration the history set of point i is exactly {0, ..., i-1}.
 *
 * Immutable after construction; safe for concurrent reads.
 */
class ReferenceSet {
public:
  /*! \param sites N x d matrix of distinct spatial sites, d in {1,2,3}
   *  \param times strictly increasing time points
   *  Throws invalid_input on duplicate sites, non-increasing times, or
   *  non-finite coordinates. */
  ReferenceSet(const mat_t& sites, const vec_t& times);

  index_t num_sites() const { return num_sites_; }
  index_t num_times() const { return times_.size(); }
  index_t size() const { return num_sites_ * times_.size(); }
  int spatial_dim() const { return dim_; }

  index_t index_of(index_t site, index_t level) const {
    return level * num_sites_ + site;
  }
  index_t site_of(index_t i) const { return i % num_sites_; }
  index_t level_of(index_t i) const { return i / num_sites_; }

  SpaceTimePoint point(index_t i) const {
    SpaceTimePoint p;
    p.s = sites_.row(site_of(i)).transpose();
    p.t = times_[level_of(i)];
    return p;
  }

  /*! Sites as an N x 3 zero-padded matrix. */
  const mat_t& sites() const { return sites_; }
  const vec_t& times() const { return times_; }

  double site_distance(index_t a, index_t b) const {
    if (site_dist_.size() > 0) return site_dist_(a, b);
    return (sites_.row(a) - sites_.row(b)).norm();
  }

  /*! Exact-match lookup; empty if the point is not a grid cell. */
  std::optional<index_t> find(const SpaceTimePoint& p) const;

  /*! True iff point i precedes point j in the enumeration (equivalently,
   *  i is in the history set of j). Throws on out-of-range indices. */
  bool in_history(index_t i, index_t j) const;

private:
  mat_t sites_;      // N x 3, zero-padded
  vec_t times_;      // M, strictly increasing
  index_t num_sites_ = 0;
  int dim_ = 0;
  mat_t site_dist_;  // N x N pairwise site distances (cached for small N)
};

/*! Builds the time-major enumeration; see ReferenceSet. */
ReferenceSet enumerate_reference(const mat_t& sites, const vec_t& times);

bool in_history(index_t i, index_t j, const ReferenceSet& ref);

}  // namespace dnngp

#endif  // DNNGP_SPACETIME_HPP_
