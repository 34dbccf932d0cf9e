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
#include "dnngp/spacetime.hpp"

#include <cmath>
#include <sstream>

namespace dnngp {

namespace {
constexpr index_t kSiteDistanceCacheCap = 2048;  // N above this: compute on the fly
}

ReferenceSet::ReferenceSet(const mat_t& sites, const vec_t& times) {
  if (sites.rows() == 0 || times.size() == 0) {
    throw invalid_input("reference set needs at least one site and one time");
  }
  if (sites.cols() < 1 || sites.cols() > 3) {
    throw invalid_input("spatial dimension must be 1, 2 or 3, got " +
                        std::to_string(sites.cols()));
  }
  if (!sites.allFinite() || !times.allFinite()) {
    throw invalid_input("non-finite coordinate in reference set");
  }
  dim_ = static_cast<int>(sites.cols());
  num_sites_ = sites.rows();
  sites_ = mat_t::Zero(num_sites_, 3);
  sites_.leftCols(dim_) = sites;
  times_ = times;

  for (index_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      std::ostringstream msg;
      msg << "times must be strictly increasing; times[" << k - 1 << "]="
          << times_[k - 1] << " >= times[" << k << "]=" << times_[k];
      throw invalid_input(msg.str());
    }
  }
  for (index_t a = 0; a < num_sites_; ++a) {
    for (index_t b = a + 1; b < num_sites_; ++b) {
      if ((sites_.row(a) - sites_.row(b)).norm() == 0.0) {
        std::ostringstream msg;
        msg << "duplicate spatial site: rows " << a << " and " << b
            << " have identical coordinates";
        throw invalid_input(msg.str());
      }
    }
  }

  if (num_sites_ <= kSiteDistanceCacheCap) {
    site_dist_.resize(num_sites_, num_sites_);
    for (index_t a = 0; a < num_sites_; ++a) {
      site_dist_(a, a) = 0.0;
      for (index_t b = a + 1; b < num_sites_; ++b) {
        const double d = (sites_.row(a) - sites_.row(b)).norm();
        site_dist_(a, b) = d;
        site_dist_(b, a) = d;
      }
    }
  }
}

std::optional<index_t> ReferenceSet::find(const SpaceTimePoint& p) const {
  index_t level = -1;
  for (index_t k = 0; k < times_.size(); ++k) {
    if (times_[k] == p.t) {
      level = k;
      break;
    }
  }
  if (level < 0) return std::nullopt;
  for (index_t j = 0; j < num_sites_; ++j) {
    if ((sites_.row(j).transpose() - p.s).norm() == 0.0) {
      return index_of(j, level);
    }
  }
  return std::nullopt;
}

bool ReferenceSet::in_history(index_t i, index_t j) const {
  if (i < 0 || i >= size() || j < 0 || j >= size()) {
    std::ostringstream msg;
    msg << "index out of range: i=" << i << ", j=" << j << ", r=" << size();
    throw invalid_input(msg.str());
  }
  return i < j;
}

ReferenceSet enumerate_reference(const mat_t& sites, const vec_t& times) {
  return ReferenceSet(sites, times);
}

bool in_history(index_t i, index_t j, const ReferenceSet& ref) {
  return ref.in_history(i, j);
}

}  // namespace dnngp
