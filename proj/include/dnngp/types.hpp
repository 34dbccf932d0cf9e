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
#ifndef DNNGP_TYPES_HPP_
#define DNNGP_TYPES_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace dnngp {

using vec_t = Eigen::VectorXd;
using mat_t = Eigen::MatrixXd;
using sp_mat_t = Eigen::SparseMatrix<double>;
using index_t = Eigen::Index;

/*! Thrown on contract violations (bad arguments, malformed inputs). */
class invalid_input : public std::invalid_argument {
public:
  explicit invalid_input(const std::string& msg) : std::invalid_argument(msg) {}
};

/*! Thrown when a numerical routine cannot proceed (non-PD matrix after
 *  the jitter retry, singular normal equations, NaN state). */
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dnngp

#endif  // DNNGP_TYPES_HPP_
