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
#ifndef DNNGP_IO_HPP_
#define DNNGP_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dnngp/datagen.hpp"
#include "dnngp/mcmc.hpp"
#include "dnngp/types.hpp"

namespace dnngp {

enum class Transform { none, sqrt };

/*! In-memory image of a dataset file: one row per (site, time) cell with
 *  header site_id, s1[, s2[, s3]], t, y, x1..xp. An empty y field marks a
 *  missing response; covariates must be present on every written row.
 *  Sites keep their first-appearance order, which fixes the enumeration. */
struct Dataset {
  std::vector<std::string> site_ids;
  mat_t site_coords;   // N x dim
  vec_t times;         // sorted ascending
  int dim = 0;
  index_t p_file = 0;  // covariate columns in the file
  mat_t X;             // r x p_file, time-major cell order; NaN on absent cells
  vec_t y;             // r, NaN where missing
  std::vector<std::uint8_t> observed;
  Transform transform = Transform::none;
};

/*! Parses and validates a dataset file. Cells absent from the file are an
 *  error listing the missing (site, time) pairs unless allow_missing_cells,
 *  in which case they become missing responses. The sqrt transform is
 *  applied to y here; predictions are squared back on output. */
Dataset load_dataset(const std::string& path, bool allow_missing_cells,
                     Transform transform);

void write_dataset_csv(const std::string& path, const ReferenceSet& ref,
                       const std::vector<std::string>& site_ids,
                       const mat_t& X_model, const vec_t& y,
                       const std::vector<std::uint8_t>& observed);

/*! Rows of arbitrary space-time points (prediction targets or holdout
 *  truths): header s1[, s2[, s3]], t, [y,] x1..xp with an optional leading
 *  site_id column; blank site_id rows are off-grid points. */
struct PointRows {
  std::vector<std::string> site_id;
  std::vector<SpaceTimePoint> points;
  int dim = 0;
  mat_t X;  // rows x p_file
  vec_t y;  // NaN where absent
};

PointRows load_points(const std::string& path, Transform transform);
void write_points_csv(const std::string& path, const PointRows& rows);

struct HoldoutPolicy {
  enum class Kind { none, random_fraction, block_days };
  Kind kind = Kind::none;
  double fraction = 0.0;
  int days = 0;
};

/*! Reference cells withheld from fitting under the policy; deterministic
 *  in the seed. block_days picks one random run of consecutive time levels
 *  per site; random_fraction withholds that share of the observed cells. */
std::vector<index_t> select_holdout(const Dataset& data,
                                    const HoldoutPolicy& policy,
                                    std::uint64_t seed);

/*! Flat JSON fitting configuration; unknown keys are rejected. */
struct RunConfig {
  Scheme scheme = Scheme::adaptive;
  int m = 25;
  CovForm form = CovForm::exponential;
  double nu = 0.5, alpha = 1.0, delta = 0.0;
  ParamBox sigma2{0.1, 10.0};
  ParamBox a{1.0, 100.0};
  ParamBox c{0.0, 50.0};
  ParamBox kappa{0.0, 1.0};
  double a_tau = 2.0, b_tau = 0.1;
  bool beta_flat = true;
  vec_t beta_mean;
  mat_t beta_cov;
  int n_iter = 5000, n_burn = 2000, n_chains = 3, thin = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  Transform transform = Transform::none;
  HoldoutPolicy holdout;
  vec_t thresholds;
  bool store_w = true;
  bool fix_w_zero = false;
};

RunConfig parse_run_config(const std::string& path);
std::string run_config_json(const RunConfig& config);  // canonical form

/*! FNV-1a over the canonical JSON; equal iff the semantic fields agree. */
std::string config_hash(const RunConfig& config);

/*! Simulation configuration for the CLI (flat JSON, whitelisted keys). */
struct SimulateConfig {
  SyntheticSpec spec;
};
SimulateConfig parse_simulate_config(const std::string& path);

/*! Assembles the model from a loaded dataset and a run configuration; an
 *  intercept column is prepended to the file covariates. Cells listed in
 *  holdout are masked to missing. */
ModelSpec make_model_spec(const Dataset& data, const RunConfig& config,
                          const std::vector<index_t>& holdout = {});

SamplerConfig make_sampler_config(const RunConfig& config);

/*! Posterior CSV: one row per stored draw with columns chain, iter,
 *  beta0.., tau2, sigma2, a, c, kappa and optionally w0..; values are
 *  printed with 17 significant digits so a round trip is exact. Writing
 *  an empty sample set produces a header-only file and returns false. */
bool write_posterior(const PosteriorSamples& samples, const std::string& path);
PosteriorSamples read_posterior(const std::string& path);

/*! Per-chain Metropolis acceptance rates as a JSON sidecar. */
void write_posterior_meta(const PosteriorSamples& samples,
                          const std::string& path);

void write_manifest(const std::string& path, const RunConfig& config,
                    index_t r, index_t n_obs);

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

/*! Inverse response transform applied entrywise (sqrt fits predict on the
 *  root scale and report on the original scale). */
double inverse_transform_value(double v, Transform t);

/*! Neighbor/eligible table dump: one row per (i, rank, j). */
void write_neighbor_csv(const std::string& path, const NeighborTable& table);

}  // namespace dnngp

#endif  // DNNGP_IO_HPP_
