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
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnngp/io.hpp"
#include "dnngp/metrics.hpp"
#include "dnngp/predict.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct PredictionTask {
  std::vector<dnngp::index_t> ref_targets;     // cells of R
  std::vector<std::size_t> ref_rows;           // rows they came from
  std::vector<dnngp::SpaceTimePoint> new_pts;  // off-grid points
  std::vector<std::size_t> new_rows;
  dnngp::mat_t X_new;
};

/*! Splits point rows into reference-cell targets and off-grid targets. */
PredictionTask split_targets(const dnngp::PointRows& rows,
                             const dnngp::ModelSpec& spec) {
  PredictionTask task;
  std::vector<dnngp::index_t> new_idx;
  for (std::size_t i = 0; i < rows.points.size(); ++i) {
    const auto cell = spec.ref.find(rows.points[i]);
    if (cell) {
      task.ref_targets.push_back(*cell);
      task.ref_rows.push_back(i);
    } else {
      task.new_pts.push_back(rows.points[i]);
      task.new_rows.push_back(i);
      new_idx.push_back(static_cast<dnngp::index_t>(i));
    }
  }
  task.X_new.resize(static_cast<dnngp::index_t>(new_idx.size()),
                    rows.X.cols() + 1);
  for (std::size_t k = 0; k < new_idx.size(); ++k) {
    task.X_new(k, 0) = 1.0;
    task.X_new.row(k).tail(rows.X.cols()) = rows.X.row(new_idx[k]);
  }
  return task;
}

/*! Predicts every row of a points file and returns per-row summaries on
 *  the original response scale. */
std::vector<dnngp::PredictionSummary> predict_rows(
    const dnngp::PointRows& rows, const dnngp::ModelSpec& spec,
    const dnngp::PosteriorSamples& samples, const dnngp::RunConfig& config) {
  const PredictionTask task = split_targets(rows, spec);
  std::vector<dnngp::PredictionSummary> out(rows.points.size());

  const auto summarize_on_response_scale = [&](dnngp::mat_t draws) {
    for (dnngp::index_t i = 0; i < draws.size(); ++i) {
      draws.data()[i] =
          dnngp::inverse_transform_value(draws.data()[i], config.transform);
    }
    return dnngp::summarize_draws(draws, config.thresholds);
  };

  if (!task.ref_targets.empty()) {
    const auto draws = dnngp::predict_reference_missing(
        samples, spec, task.ref_targets, config.thresholds, config.seed + 101);
    const auto sums = summarize_on_response_scale(draws.y);
    for (std::size_t k = 0; k < task.ref_rows.size(); ++k) {
      out[task.ref_rows[k]] = sums[k];
    }
  }
  if (!task.new_pts.empty()) {
    const auto draws = dnngp::predict_new_points(
        task.new_pts, task.X_new, samples, spec, config.thresholds,
        config.seed + 202);
    const auto sums = summarize_on_response_scale(draws.y);
    for (std::size_t k = 0; k < task.new_rows.size(); ++k) {
      out[task.new_rows[k]] = sums[k];
    }
  }
  return out;
}

void write_prediction_csv(const std::string& path,
                          const dnngp::PointRows& rows,
                          const std::vector<dnngp::PredictionSummary>& sums,
                          const dnngp::vec_t& thresholds) {
  std::ofstream out(path);
  if (!out) throw dnngp::invalid_input("cannot write " + path);
  out << "id";
  for (int d = 0; d < rows.dim; ++d) out << ",s" << d + 1;
  out << ",t,median,mean,q2.5,q97.5";
  for (dnngp::index_t k = 0; k < thresholds.size(); ++k) {
    out << ",p_exceed_" << thresholds[k];
  }
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out << (rows.site_id[i].empty() ? std::to_string(i) : rows.site_id[i]);
    for (int d = 0; d < rows.dim; ++d) out << ',' << rows.points[i].s[d];
    out << ',' << rows.points[i].t << ',' << sums[i].median << ','
        << sums[i].mean << ',' << sums[i].q025 << ',' << sums[i].q975;
    for (const double e : sums[i].exceed) out << ',' << e;
    out << "\n";
  }
}

dnngp::RunConfig load_run_config_from_fit(const std::string& fit_dir) {
  return dnngp::parse_run_config(fit_dir + "/config.json");
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const dnngp::SimulateConfig cfg = dnngp::parse_simulate_config(config_path);
  const dnngp::SyntheticData data = dnngp::simulate_dataset(cfg.spec);
  fs::create_directories(out_dir);

  std::vector<std::string> site_ids(data.ref.num_sites());
  for (std::size_t j = 0; j < site_ids.size(); ++j) {
    site_ids[j] = "site" + std::to_string(j);
  }
  std::vector<std::uint8_t> observed(data.ref.size(), 1);
  dnngp::write_dataset_csv(out_dir + "/data.csv", data.ref, site_ids, data.X,
                           data.y, observed);

  dnngp::PointRows hold;
  hold.dim = cfg.spec.spatial_dim;
  hold.points = data.holdout;
  hold.site_id.assign(data.holdout.size(), "");
  hold.X = data.X_hold.rightCols(data.X_hold.cols() - 1);
  hold.y = data.y_hold;
  dnngp::write_points_csv(out_dir + "/holdout.csv", hold);

  json truth;
  truth["sigma2"] = cfg.spec.theta.sigma2;
  truth["a"] = cfg.spec.theta.a;
  truth["c"] = cfg.spec.theta.c;
  truth["kappa"] = cfg.spec.theta.kappa;
  truth["tau2"] = cfg.spec.tau2;
  truth["beta"] = std::vector<double>(
      cfg.spec.beta.data(), cfg.spec.beta.data() + cfg.spec.beta.size());
  truth["seed"] = cfg.spec.seed;
  std::ofstream tf(out_dir + "/truth.json");
  tf << truth.dump(2) << "\n";

  std::cout << "simulated " << data.ref.size() << " grid cells and "
            << data.holdout.size() << " holdout points into " << out_dir
            << "\n";
  return 0;
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const std::string& out_dir, bool allow_missing_cells) {
  const dnngp::RunConfig config = dnngp::parse_run_config(config_path);
  const dnngp::Dataset data =
      dnngp::load_dataset(data_path, allow_missing_cells, config.transform);
  const std::vector<dnngp::index_t> held =
      dnngp::select_holdout(data, config.holdout, config.seed);
  const dnngp::ModelSpec spec = dnngp::make_model_spec(data, config, held);

  fs::create_directories(out_dir);
  if (!held.empty()) {
    dnngp::PointRows hrows;
    hrows.dim = data.dim;
    const dnngp::index_t N = static_cast<dnngp::index_t>(data.site_ids.size());
    hrows.X.resize(static_cast<dnngp::index_t>(held.size()), data.p_file);
    hrows.y.resize(static_cast<dnngp::index_t>(held.size()));
    for (std::size_t k = 0; k < held.size(); ++k) {
      const dnngp::index_t cell = held[k];
      hrows.site_id.push_back(data.site_ids[cell % N]);
      hrows.points.push_back(spec.ref.point(cell));
      hrows.X.row(k) = data.X.row(cell);
      // Stored on the original scale; reload applies the transform again.
      hrows.y[k] =
          dnngp::inverse_transform_value(data.y[cell], config.transform);
    }
    dnngp::write_points_csv(out_dir + "/holdout.csv", hrows);
  }

  const dnngp::PosteriorSamples samples =
      dnngp::run_sampler(spec, dnngp::make_sampler_config(config));
  if (!dnngp::write_posterior(samples, out_dir + "/posterior.csv")) {
    std::cerr << "warning: zero stored draws (n_iter == n_burn?); wrote a "
                 "header-only posterior\n";
  }
  dnngp::write_posterior_meta(samples, out_dir + "/posterior_meta.json");
  {
    std::ofstream cf(out_dir + "/config.json");
    cf << dnngp::run_config_json(config) << "\n";
  }
  dnngp::write_manifest(out_dir + "/manifest.json", config, spec.ref.size(),
                        spec.n_obs());
  if (samples.n_draws() >= 2) {
    const dnngp::FitMetrics fm = dnngp::fit_metrics(samples, spec);
    json mj;
    mj["pD"] = fm.pD;
    mj["DIC"] = fm.DIC;
    mj["G"] = fm.G;
    mj["P"] = fm.P;
    mj["D"] = fm.D;
    std::ofstream mf(out_dir + "/metrics.json");
    mf << mj.dump(2) << "\n";
  }
  std::cout << "fit complete: " << samples.n_draws() << " stored draws, "
            << "acceptance";
  for (const double r : samples.accept_rate) std::cout << ' ' << r;
  std::cout << "\n";
  return 0;
}

int cmd_predict(const std::string& data_path, const std::string& fit_dir,
                const std::string& targets_path, const std::string& out_path,
                bool allow_missing_cells) {
  const dnngp::RunConfig config = load_run_config_from_fit(fit_dir);
  const dnngp::Dataset data =
      dnngp::load_dataset(data_path, allow_missing_cells, config.transform);
  const std::vector<dnngp::index_t> held =
      dnngp::select_holdout(data, config.holdout, config.seed);
  const dnngp::ModelSpec spec = dnngp::make_model_spec(data, config, held);
  const dnngp::PosteriorSamples samples =
      dnngp::read_posterior(fit_dir + "/posterior.csv");
  const dnngp::PointRows rows =
      dnngp::load_points(targets_path, config.transform);
  const auto sums = predict_rows(rows, spec, samples, config);
  write_prediction_csv(out_path, rows, sums, config.thresholds);
  std::cout << "wrote predictions for " << rows.points.size() << " points to "
            << out_path << "\n";
  return 0;
}

int cmd_validate(const std::string& data_path, const std::string& fit_dir,
                 const std::string& holdout_path, const std::string& out_path,
                 bool allow_missing_cells) {
  const dnngp::RunConfig config = load_run_config_from_fit(fit_dir);
  const dnngp::Dataset data =
      dnngp::load_dataset(data_path, allow_missing_cells, config.transform);
  const std::vector<dnngp::index_t> held =
      dnngp::select_holdout(data, config.holdout, config.seed);
  const dnngp::ModelSpec spec = dnngp::make_model_spec(data, config, held);
  const dnngp::PosteriorSamples samples =
      dnngp::read_posterior(fit_dir + "/posterior.csv");
  // Truths compare on the original scale, so load without the transform.
  const dnngp::PointRows rows =
      dnngp::load_points(holdout_path, dnngp::Transform::none);
  for (dnngp::index_t i = 0; i < rows.y.size(); ++i) {
    if (std::isnan(rows.y[i])) {
      throw dnngp::invalid_input("holdout row " + std::to_string(i) +
                                 " has no response to validate against");
    }
  }
  const auto sums = predict_rows(rows, spec, samples, config);

  dnngp::vec_t med(rows.y.size()), lo(rows.y.size()), hi(rows.y.size());
  for (dnngp::index_t i = 0; i < rows.y.size(); ++i) {
    med[i] = sums[i].median;
    lo[i] = sums[i].q025;
    hi[i] = sums[i].q975;
  }
  const double rmspe = dnngp::rmspe(med, rows.y);
  const double coverage = dnngp::ci_coverage(lo, hi, rows.y);
  const double bias = (med - rows.y).mean();
  const double sst = (rows.y.array() - rows.y.mean()).square().sum();
  const double sse = (med - rows.y).squaredNorm();
  const double r2 = sst > 0.0 ? 1.0 - sse / sst : std::nan("");

  json j;
  j["rmspe"] = rmspe;
  j["coverage95"] = coverage;
  j["bias"] = bias;
  j["r2"] = r2;
  j["n_holdout"] = rows.y.size();
  std::ofstream out(out_path);
  if (!out) throw dnngp::invalid_input("cannot write " + out_path);
  out << j.dump(2) << "\n";
  std::cout << "rmspe=" << rmspe << " coverage95=" << coverage
            << " bias=" << bias << " r2=" << r2 << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalable Bayesian spatio-temporal regression with "
               "nearest-neighbor Gaussian processes"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, fit_dir, targets_path,
      holdout_path;
  bool allow_missing_cells = false;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--config", config_path, "simulation config JSON")->required();
  sim->add_option("--out", out_path, "output directory")->required();

  auto* fit = app.add_subcommand("fit", "Run the MCMC sampler");
  fit->add_option("--data", data_path, "dataset CSV")->required();
  fit->add_option("--config", config_path, "run config JSON")->required();
  fit->add_option("--out", out_path, "output directory")->required();
  fit->add_flag("--allow-missing-cells", allow_missing_cells,
                "treat absent (site, time) cells as missing responses");

  auto* pred = app.add_subcommand("predict", "Posterior predictive summaries");
  pred->add_option("--data", data_path, "dataset CSV")->required();
  pred->add_option("--posterior", fit_dir, "fit output directory")->required();
  pred->add_option("--targets", targets_path, "targets CSV")->required();
  pred->add_option("--out", out_path, "output CSV")->required();
  pred->add_flag("--allow-missing-cells", allow_missing_cells,
                 "treat absent (site, time) cells as missing responses");

  auto* val = app.add_subcommand("validate", "Holdout validation metrics");
  val->add_option("--data", data_path, "dataset CSV")->required();
  val->add_option("--posterior", fit_dir, "fit output directory")->required();
  val->add_option("--holdout", holdout_path, "holdout CSV with y")->required();
  val->add_option("--out", out_path, "output JSON")->required();
  val->add_flag("--allow-missing-cells", allow_missing_cells,
                "treat absent (site, time) cells as missing responses");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_path);
    if (fit->parsed()) {
      return cmd_fit(data_path, config_path, out_path, allow_missing_cells);
    }
    if (pred->parsed()) {
      return cmd_predict(data_path, fit_dir, targets_path, out_path,
                         allow_missing_cells);
    }
    if (val->parsed()) {
      return cmd_validate(data_path, fit_dir, holdout_path, out_path,
                          allow_missing_cells);
    }
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
