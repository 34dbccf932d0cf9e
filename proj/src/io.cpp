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
#include "dnngp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dnngp/rng.hpp"

namespace dnngp {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_double(const std::string& field, std::size_t line_no,
                    const std::string& col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw invalid_input("line " + std::to_string(line_no) + ": cannot parse '" +
                        field + "' in column " + col);
  }
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct HeaderLayout {
  int dim = 0;
  int col_site = -1;
  int col_s[3] = {-1, -1, -1};
  int col_t = -1;
  int col_y = -1;
  std::vector<int> col_x;
};

HeaderLayout parse_header(const std::vector<std::string>& fields,
                          bool require_site, bool require_y) {
  HeaderLayout lay;
  for (int k = 0; k < static_cast<int>(fields.size()); ++k) {
    const std::string& f = fields[k];
    if (f == "site_id") {
      lay.col_site = k;
    } else if (f == "s1" || f == "s2" || f == "s3") {
      lay.col_s[f[1] - '1'] = k;
    } else if (f == "t") {
      lay.col_t = k;
    } else if (f == "y") {
      lay.col_y = k;
    } else if (f.size() >= 2 && f[0] == 'x') {
      lay.col_x.push_back(k);
    } else {
      throw invalid_input("unrecognized column '" + f + "' in header");
    }
  }
  for (int d = 0; d < 3; ++d) {
    if (lay.col_s[d] >= 0) lay.dim = d + 1;
  }
  for (int d = 0; d < lay.dim; ++d) {
    if (lay.col_s[d] < 0) {
      throw invalid_input("header is missing column s" + std::to_string(d + 1));
    }
  }
  if (lay.dim == 0) throw invalid_input("header needs at least column s1");
  if (lay.col_t < 0) throw invalid_input("header is missing column t");
  if (require_site && lay.col_site < 0) {
    throw invalid_input("header is missing column site_id");
  }
  if (require_y && lay.col_y < 0) {
    throw invalid_input("header is missing column y");
  }
  return lay;
}

double apply_transform(double y, Transform t, std::size_t line_no) {
  if (std::isnan(y) || t == Transform::none) return y;
  if (y < 0.0) {
    throw invalid_input("line " + std::to_string(line_no) +
                        ": negative response under sqrt transform");
  }
  return std::sqrt(y);
}

void box_to_json(json& j, const std::string& name, const ParamBox& b) {
  if (b.fixed) {
    j[name + "_fixed"] = b.value;
  } else {
    j[name + "_lo"] = b.lo;
    j[name + "_hi"] = b.hi;
  }
}

void read_box(const json& j, const std::string& name, ParamBox* box) {
  const std::string lo = name + "_lo", hi = name + "_hi",
                    fixed = name + "_fixed";
  if (j.contains(fixed) && !j[fixed].is_null()) {
    box->fixed = true;
    box->value = j[fixed].get<double>();
  }
  if (j.contains(lo)) box->lo = j[lo].get<double>();
  if (j.contains(hi)) box->hi = j[hi].get<double>();
}

const std::vector<std::string> kRunConfigKeys = {
    "scheme", "m", "covariance_form", "nu", "alpha", "delta",
    "sigma2_lo", "sigma2_hi", "sigma2_fixed",
    "a_lo", "a_hi", "a_fixed",
    "c_lo", "c_hi", "c_fixed",
    "kappa_lo", "kappa_hi", "kappa_fixed",
    "a_tau", "b_tau",
    "beta_prior", "beta_prior_mean", "beta_prior_cov",
    "n_iter", "n_burn", "n_chains", "thin", "seed", "threads",
    "response_transform", "holdout_policy", "holdout_fraction",
    "holdout_days", "thresholds", "store_w", "fix_w_zero"};

const std::vector<std::string> kSimulateConfigKeys = {
    "sites_per_axis", "n_times", "spatial_dim", "n_holdout", "seed",
    "sigma2", "a", "c", "kappa", "covariance_form", "nu", "alpha", "delta",
    "beta", "tau2", "dense_cap"};

json load_json_checked(const std::string& path,
                       const std::vector<std::string>& allowed) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw invalid_input("config " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw invalid_input("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw invalid_input("unknown config key '" + key + "'");
    }
  }
  return j;
}

Transform transform_from_name(const std::string& name) {
  if (name == "none") return Transform::none;
  if (name == "sqrt") return Transform::sqrt;
  throw invalid_input("unknown response_transform '" + name + "'");
}

CovForm form_from_name(const std::string& name) {
  if (name == "exponential") return CovForm::exponential;
  if (name == "matern") return CovForm::matern;
  throw invalid_input("unknown covariance_form '" + name + "'");
}

}  // namespace

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::simple: return "simple";
    case Scheme::adaptive: return "adaptive";
    case Scheme::dense: return "dense";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "simple") return Scheme::simple;
  if (name == "adaptive") return Scheme::adaptive;
  if (name == "dense") return Scheme::dense;
  throw invalid_input("unknown scheme '" + name + "'");
}

double inverse_transform_value(double v, Transform t) {
  return t == Transform::sqrt ? v * v : v;
}

Dataset load_dataset(const std::string& path, bool allow_missing_cells,
                     Transform transform) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open dataset file " + path);
  std::string line;
  if (!std::getline(in, line)) throw invalid_input("empty dataset file");
  const HeaderLayout lay = parse_header(split_csv_line(line), true, true);
  const index_t p = static_cast<index_t>(lay.col_x.size());

  struct Row {
    index_t site;
    double t;
    double y;
    vec_t x;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  std::map<std::string, index_t> site_index;
  std::vector<std::string> site_ids;
  std::vector<Eigen::Vector3d> coords;
  std::vector<double> time_values;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != static_cast<std::size_t>(lay.col_site >= 0) +
                             lay.dim + 2 + p) {
      throw invalid_input("line " + std::to_string(line_no) + ": expected " +
                          std::to_string(lay.dim + 2 + p + 1) + " fields, got " +
                          std::to_string(fields.size()));
    }
    Row row;
    row.line_no = line_no;
    const std::string& sid = fields[lay.col_site];
    if (sid.empty()) {
      throw invalid_input("line " + std::to_string(line_no) +
                          ": empty site_id");
    }
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int d = 0; d < lay.dim; ++d) {
      s[d] = parse_double(fields[lay.col_s[d]], line_no,
                          "s" + std::to_string(d + 1));
    }
    const auto it = site_index.find(sid);
    if (it == site_index.end()) {
      row.site = static_cast<index_t>(site_ids.size());
      site_index.emplace(sid, row.site);
      site_ids.push_back(sid);
      coords.push_back(s);
    } else {
      row.site = it->second;
      if ((coords[row.site] - s).norm() != 0.0) {
        throw invalid_input("line " + std::to_string(line_no) + ": site '" +
                            sid + "' has inconsistent coordinates");
      }
    }
    row.t = parse_double(fields[lay.col_t], line_no, "t");
    const std::string& yf = fields[lay.col_y];
    row.y = yf.empty() ? std::nan("")
                       : apply_transform(parse_double(yf, line_no, "y"),
                                         transform, line_no);
    row.x.resize(p);
    for (index_t k = 0; k < p; ++k) {
      const std::string& xf = fields[lay.col_x[k]];
      if (xf.empty()) {
        throw invalid_input("line " + std::to_string(line_no) +
                            ": empty covariate field x" + std::to_string(k + 1));
      }
      row.x[k] = parse_double(xf, line_no, "x" + std::to_string(k + 1));
    }
    time_values.push_back(row.t);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw invalid_input("dataset has no data rows");

  std::sort(time_values.begin(), time_values.end());
  time_values.erase(std::unique(time_values.begin(), time_values.end()),
                    time_values.end());
  std::map<double, index_t> time_index;
  for (std::size_t k = 0; k < time_values.size(); ++k) {
    time_index.emplace(time_values[k], static_cast<index_t>(k));
  }

  Dataset data;
  data.dim = lay.dim;
  data.transform = transform;
  data.site_ids = site_ids;
  data.p_file = p;
  const index_t N = static_cast<index_t>(site_ids.size());
  const index_t M = static_cast<index_t>(time_values.size());
  data.site_coords.resize(N, lay.dim);
  for (index_t j = 0; j < N; ++j) {
    data.site_coords.row(j) = coords[j].head(lay.dim).transpose();
  }
  data.times = Eigen::Map<const vec_t>(time_values.data(), M);

  const index_t r = N * M;
  data.X = mat_t::Constant(r, p, std::nan(""));
  data.y = vec_t::Constant(r, std::nan(""));
  data.observed.assign(r, 0);
  std::vector<std::size_t> seen(r, 0);
  for (const Row& row : rows) {
    const index_t cell = time_index.at(row.t) * N + row.site;
    if (seen[cell]) {
      throw invalid_input("line " + std::to_string(row.line_no) +
                          ": duplicate (site_id, t) pair, first seen at line " +
                          std::to_string(seen[cell]));
    }
    seen[cell] = row.line_no;
    data.X.row(cell) = row.x.transpose();
    data.y[cell] = row.y;
    data.observed[cell] = !std::isnan(row.y);
  }
  index_t absent = 0;
  std::ostringstream missing_list;
  for (index_t cell = 0; cell < r; ++cell) {
    if (seen[cell]) continue;
    ++absent;
    if (absent <= 10) {
      missing_list << (absent > 1 ? ", " : "") << "("
                   << site_ids[cell % N] << ", " << fmt_full(data.times[cell / N])
                   << ")";
    }
  }
  if (absent > 0 && !allow_missing_cells) {
    std::ostringstream msg;
    msg << "dataset is missing " << absent << " of " << r
        << " (site, time) cells, e.g. " << missing_list.str()
        << "; pass --allow-missing-cells to treat them as missing responses";
    throw invalid_input(msg.str());
  }
  return data;
}

void write_dataset_csv(const std::string& path, const ReferenceSet& ref,
                       const std::vector<std::string>& site_ids,
                       const mat_t& X_model, const vec_t& y,
                       const std::vector<std::uint8_t>& observed) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write dataset file " + path);
  const int dim = ref.spatial_dim();
  out << "site_id";
  for (int d = 0; d < dim; ++d) out << ",s" << d + 1;
  out << ",t,y";
  for (index_t k = 1; k < X_model.cols(); ++k) out << ",x" << k;
  out << "\n";
  for (index_t i = 0; i < ref.size(); ++i) {
    const index_t j = ref.site_of(i);
    out << site_ids[j];
    for (int d = 0; d < dim; ++d) out << ',' << fmt_full(ref.sites()(j, d));
    out << ',' << fmt_full(ref.times()[ref.level_of(i)]);
    out << ',' << (observed[i] ? fmt_full(y[i]) : std::string());
    for (index_t k = 1; k < X_model.cols(); ++k) {
      out << ',' << fmt_full(X_model(i, k));
    }
    out << "\n";
  }
}

PointRows load_points(const std::string& path, Transform transform) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open points file " + path);
  std::string line;
  if (!std::getline(in, line)) throw invalid_input("empty points file");
  const HeaderLayout lay = parse_header(split_csv_line(line), false, false);
  const index_t p = static_cast<index_t>(lay.col_x.size());

  PointRows rows;
  rows.dim = lay.dim;
  std::vector<vec_t> xs;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    SpaceTimePoint pt;
    for (int d = 0; d < lay.dim; ++d) {
      pt.s[d] = parse_double(fields.at(lay.col_s[d]), line_no,
                             "s" + std::to_string(d + 1));
    }
    pt.t = parse_double(fields.at(lay.col_t), line_no, "t");
    rows.points.push_back(pt);
    rows.site_id.push_back(lay.col_site >= 0 ? fields.at(lay.col_site)
                                             : std::string());
    double y = std::nan("");
    if (lay.col_y >= 0 && !fields.at(lay.col_y).empty()) {
      y = apply_transform(parse_double(fields[lay.col_y], line_no, "y"),
                          transform, line_no);
    }
    ys.push_back(y);
    vec_t x(p);
    for (index_t k = 0; k < p; ++k) {
      x[k] = parse_double(fields.at(lay.col_x[k]), line_no,
                          "x" + std::to_string(k + 1));
    }
    xs.push_back(std::move(x));
  }
  rows.X.resize(static_cast<index_t>(xs.size()), p);
  rows.y.resize(static_cast<index_t>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    rows.X.row(i) = xs[i].transpose();
    rows.y[i] = ys[i];
  }
  return rows;
}

void write_points_csv(const std::string& path, const PointRows& rows) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write points file " + path);
  out << "site_id";
  for (int d = 0; d < rows.dim; ++d) out << ",s" << d + 1;
  out << ",t,y";
  for (index_t k = 0; k < rows.X.cols(); ++k) out << ",x" << k + 1;
  out << "\n";
  for (std::size_t i = 0; i < rows.points.size(); ++i) {
    out << rows.site_id[i];
    for (int d = 0; d < rows.dim; ++d) {
      out << ',' << fmt_full(rows.points[i].s[d]);
    }
    out << ',' << fmt_full(rows.points[i].t);
    out << ','
        << (std::isnan(rows.y[i]) ? std::string() : fmt_full(rows.y[i]));
    for (index_t k = 0; k < rows.X.cols(); ++k) {
      out << ',' << fmt_full(rows.X(i, k));
    }
    out << "\n";
  }
}

std::vector<index_t> select_holdout(const Dataset& data,
                                    const HoldoutPolicy& policy,
                                    std::uint64_t seed) {
  std::vector<index_t> held;
  if (policy.kind == HoldoutPolicy::Kind::none) return held;
  Rng rng = Rng::for_stream(seed, 0x686f6c64ULL);
  const index_t N = static_cast<index_t>(data.site_ids.size());
  const index_t M = data.times.size();
  if (policy.kind == HoldoutPolicy::Kind::random_fraction) {
    std::vector<index_t> obs_cells;
    for (index_t i = 0; i < data.y.size(); ++i) {
      if (data.observed[i]) obs_cells.push_back(i);
    }
    // Fisher-Yates with our own uniform keeps the choice seed-stable.
    for (index_t i = static_cast<index_t>(obs_cells.size()) - 1; i > 0; --i) {
      const index_t j = static_cast<index_t>(rng.uniform() * (i + 1));
      std::swap(obs_cells[i], obs_cells[std::min(j, i)]);
    }
    const index_t take = static_cast<index_t>(
        policy.fraction * static_cast<double>(obs_cells.size()));
    held.assign(obs_cells.begin(), obs_cells.begin() + take);
  } else {
    const index_t k = std::min<index_t>(policy.days, M);
    for (index_t site = 0; site < N; ++site) {
      const index_t start =
          static_cast<index_t>(rng.uniform() * static_cast<double>(M - k + 1));
      for (index_t lvl = start; lvl < start + k; ++lvl) {
        const index_t cell = lvl * N + site;
        if (data.observed[cell]) held.push_back(cell);
      }
    }
  }
  std::sort(held.begin(), held.end());
  return held;
}

RunConfig parse_run_config(const std::string& path) {
  const json j = load_json_checked(path, kRunConfigKeys);
  RunConfig cfg;
  if (j.contains("scheme")) cfg.scheme = scheme_from_name(j["scheme"]);
  if (j.contains("m")) cfg.m = j["m"].get<int>();
  if (j.contains("covariance_form")) {
    cfg.form = form_from_name(j["covariance_form"]);
  }
  if (j.contains("nu")) cfg.nu = j["nu"].get<double>();
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("delta")) cfg.delta = j["delta"].get<double>();
  read_box(j, "sigma2", &cfg.sigma2);
  read_box(j, "a", &cfg.a);
  read_box(j, "c", &cfg.c);
  read_box(j, "kappa", &cfg.kappa);
  if (j.contains("a_tau")) cfg.a_tau = j["a_tau"].get<double>();
  if (j.contains("b_tau")) cfg.b_tau = j["b_tau"].get<double>();
  if (j.contains("beta_prior")) {
    const std::string bp = j["beta_prior"].get<std::string>();
    if (bp == "flat") {
      cfg.beta_flat = true;
    } else if (bp == "normal") {
      cfg.beta_flat = false;
      if (!j.contains("beta_prior_mean") || !j.contains("beta_prior_cov")) {
        throw invalid_input("beta_prior 'normal' needs beta_prior_mean and "
                            "beta_prior_cov");
      }
    } else {
      throw invalid_input("beta_prior must be 'flat' or 'normal'");
    }
  }
  if (j.contains("beta_prior_mean")) {
    const auto v = j["beta_prior_mean"].get<std::vector<double>>();
    cfg.beta_mean = Eigen::Map<const vec_t>(v.data(), v.size());
  }
  if (j.contains("beta_prior_cov")) {
    const auto rows = j["beta_prior_cov"].get<std::vector<std::vector<double>>>();
    cfg.beta_cov.resize(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != static_cast<std::size_t>(cfg.beta_cov.cols())) {
        throw invalid_input("beta_prior_cov rows have unequal lengths");
      }
      for (std::size_t c2 = 0; c2 < rows[i].size(); ++c2) {
        cfg.beta_cov(i, c2) = rows[i][c2];
      }
    }
  }
  if (j.contains("n_iter")) cfg.n_iter = j["n_iter"].get<int>();
  if (j.contains("n_burn")) cfg.n_burn = j["n_burn"].get<int>();
  if (j.contains("n_chains")) cfg.n_chains = j["n_chains"].get<int>();
  if (j.contains("thin")) cfg.thin = j["thin"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("response_transform")) {
    cfg.transform = transform_from_name(j["response_transform"]);
  }
  if (j.contains("holdout_policy")) {
    const std::string hp = j["holdout_policy"].get<std::string>();
    if (hp == "none") {
      cfg.holdout.kind = HoldoutPolicy::Kind::none;
    } else if (hp == "random_fraction") {
      cfg.holdout.kind = HoldoutPolicy::Kind::random_fraction;
    } else if (hp == "block_days") {
      cfg.holdout.kind = HoldoutPolicy::Kind::block_days;
    } else {
      throw invalid_input("unknown holdout_policy '" + hp + "'");
    }
  }
  if (j.contains("holdout_fraction")) {
    cfg.holdout.fraction = j["holdout_fraction"].get<double>();
  }
  if (j.contains("holdout_days")) {
    cfg.holdout.days = j["holdout_days"].get<int>();
  }
  if (j.contains("thresholds")) {
    const auto v = j["thresholds"].get<std::vector<double>>();
    cfg.thresholds = Eigen::Map<const vec_t>(v.data(), v.size());
  }
  if (j.contains("store_w")) cfg.store_w = j["store_w"].get<bool>();
  if (j.contains("fix_w_zero")) cfg.fix_w_zero = j["fix_w_zero"].get<bool>();

  if (cfg.n_iter < 0 || cfg.n_burn < 0 || cfg.n_burn > cfg.n_iter) {
    throw invalid_input("config: need 0 <= n_burn <= n_iter");
  }
  if (cfg.thin < 1) throw invalid_input("config: thin must be >= 1");
  if (cfg.n_chains < 1) throw invalid_input("config: n_chains must be >= 1");
  if (cfg.threads < 1) throw invalid_input("config: threads must be >= 1");
  if (cfg.fix_w_zero && cfg.m != 0) {
    throw invalid_input("config: fix_w_zero requires m = 0");
  }
  if (cfg.holdout.kind == HoldoutPolicy::Kind::random_fraction &&
      !(cfg.holdout.fraction > 0.0 && cfg.holdout.fraction < 1.0)) {
    throw invalid_input("config: holdout_fraction must be in (0, 1)");
  }
  if (cfg.holdout.kind == HoldoutPolicy::Kind::block_days &&
      cfg.holdout.days < 1) {
    throw invalid_input("config: holdout_days must be >= 1");
  }
  return cfg;
}

std::string run_config_json(const RunConfig& cfg) {
  json j;
  j["scheme"] = scheme_name(cfg.scheme);
  j["m"] = cfg.m;
  j["covariance_form"] =
      cfg.form == CovForm::exponential ? "exponential" : "matern";
  j["nu"] = cfg.nu;
  j["alpha"] = cfg.alpha;
  j["delta"] = cfg.delta;
  box_to_json(j, "sigma2", cfg.sigma2);
  box_to_json(j, "a", cfg.a);
  box_to_json(j, "c", cfg.c);
  box_to_json(j, "kappa", cfg.kappa);
  j["a_tau"] = cfg.a_tau;
  j["b_tau"] = cfg.b_tau;
  j["beta_prior"] = cfg.beta_flat ? "flat" : "normal";
  if (!cfg.beta_flat) {
    j["beta_prior_mean"] =
        std::vector<double>(cfg.beta_mean.data(),
                            cfg.beta_mean.data() + cfg.beta_mean.size());
    std::vector<std::vector<double>> cov(cfg.beta_cov.rows());
    for (index_t i = 0; i < cfg.beta_cov.rows(); ++i) {
      cov[i].assign(cfg.beta_cov.row(i).data(),
                    cfg.beta_cov.row(i).data() + cfg.beta_cov.cols());
    }
    j["beta_prior_cov"] = cov;
  }
  j["n_iter"] = cfg.n_iter;
  j["n_burn"] = cfg.n_burn;
  j["n_chains"] = cfg.n_chains;
  j["thin"] = cfg.thin;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["response_transform"] =
      cfg.transform == Transform::none ? "none" : "sqrt";
  switch (cfg.holdout.kind) {
    case HoldoutPolicy::Kind::none: j["holdout_policy"] = "none"; break;
    case HoldoutPolicy::Kind::random_fraction:
      j["holdout_policy"] = "random_fraction";
      j["holdout_fraction"] = cfg.holdout.fraction;
      break;
    case HoldoutPolicy::Kind::block_days:
      j["holdout_policy"] = "block_days";
      j["holdout_days"] = cfg.holdout.days;
      break;
  }
  j["thresholds"] = std::vector<double>(
      cfg.thresholds.data(), cfg.thresholds.data() + cfg.thresholds.size());
  j["store_w"] = cfg.store_w;
  j["fix_w_zero"] = cfg.fix_w_zero;
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string s = run_config_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

SimulateConfig parse_simulate_config(const std::string& path) {
  const json j = load_json_checked(path, kSimulateConfigKeys);
  SimulateConfig cfg;
  SyntheticSpec& s = cfg.spec;
  if (j.contains("sites_per_axis")) s.sites_per_axis = j["sites_per_axis"];
  if (j.contains("n_times")) s.n_times = j["n_times"];
  if (j.contains("spatial_dim")) s.spatial_dim = j["spatial_dim"];
  if (j.contains("n_holdout")) s.n_holdout = j["n_holdout"];
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("dense_cap")) s.dense_cap = j["dense_cap"].get<index_t>();
  if (j.contains("tau2")) s.tau2 = j["tau2"];
  double sigma2 = 1.0, a = 50.0, c = 25.0, kappa = 0.75;
  if (j.contains("sigma2")) sigma2 = j["sigma2"];
  if (j.contains("a")) a = j["a"];
  if (j.contains("c")) c = j["c"];
  if (j.contains("kappa")) kappa = j["kappa"];
  std::string form = "exponential";
  if (j.contains("covariance_form")) form = j["covariance_form"];
  if (form_from_name(form) == CovForm::exponential) {
    s.theta = CovarianceParams::exponential(sigma2, a, c, kappa);
  } else {
    s.theta = CovarianceParams::matern(
        sigma2, a, c, kappa, j.value("alpha", 1.0), j.value("nu", 0.5),
        j.value("delta", 0.0));
  }
  if (j.contains("beta")) {
    const auto v = j["beta"].get<std::vector<double>>();
    if (v.empty()) throw invalid_input("config: beta must be nonempty");
    s.beta = Eigen::Map<const vec_t>(v.data(), v.size());
  }
  return cfg;
}

ModelSpec make_model_spec(const Dataset& data, const RunConfig& config,
                          const std::vector<index_t>& holdout) {
  ModelSpec spec{ReferenceSet(data.site_coords, data.times)};
  const index_t r = spec.ref.size();
  spec.X.resize(r, data.p_file + 1);
  spec.X.col(0).setOnes();
  spec.X.rightCols(data.p_file) = data.X;
  for (index_t i = 0; i < r; ++i) {
    // Absent cells have NaN covariates; keep the intercept NaN there too so
    // prediction at such cells fails loudly instead of silently using 1.
    if (!data.X.row(i).allFinite() && data.p_file > 0) {
      spec.X(i, 0) = std::nan("");
    }
  }
  spec.y = data.y;
  spec.observed = data.observed;
  for (const index_t i : holdout) {
    if (i < 0 || i >= r) throw invalid_input("holdout index out of range");
    spec.observed[i] = 0;
  }
  spec.beta_prior.flat = config.beta_flat;
  if (!config.beta_flat) {
    spec.beta_prior.mean = config.beta_mean;
    spec.beta_prior.cov = config.beta_cov;
  }
  spec.a_tau = config.a_tau;
  spec.b_tau = config.b_tau;
  spec.theta_prior = {config.sigma2, config.a, config.c, config.kappa};
  spec.form = config.form;
  spec.nu = config.nu;
  spec.alpha = config.alpha;
  spec.delta = config.delta;
  spec.scheme = config.scheme;
  spec.m = config.m;
  spec.fix_w_zero = config.fix_w_zero;
  spec.validate();
  return spec;
}

SamplerConfig make_sampler_config(const RunConfig& config) {
  SamplerConfig out;
  out.n_iter = config.n_iter;
  out.n_burn = config.n_burn;
  out.n_chains = config.n_chains;
  out.thin = config.thin;
  out.seed = config.seed;
  out.threads = config.threads;
  out.store_w = config.store_w;
  return out;
}

bool write_posterior(const PosteriorSamples& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write posterior file " + path);
  out << "chain,iter";
  for (index_t k = 0; k < samples.p; ++k) out << ",beta" << k;
  out << ",tau2,sigma2,a,c,kappa";
  if (samples.has_w()) {
    for (index_t k = 0; k < samples.r; ++k) out << ",w" << k;
  }
  out << "\n";
  for (index_t d = 0; d < samples.n_draws(); ++d) {
    out << samples.chain[d] << ',' << samples.iter[d];
    for (index_t k = 0; k < samples.p; ++k) {
      out << ',' << fmt_full(samples.beta(d, k));
    }
    out << ',' << fmt_full(samples.tau2[d]) << ',' << fmt_full(samples.sigma2[d])
        << ',' << fmt_full(samples.a[d]) << ',' << fmt_full(samples.c[d]) << ','
        << fmt_full(samples.kappa[d]);
    if (samples.has_w()) {
      for (index_t k = 0; k < samples.r; ++k) {
        out << ',' << fmt_full(samples.w(d, k));
      }
    }
    out << "\n";
  }
  return samples.n_draws() > 0;
}

PosteriorSamples read_posterior(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open posterior file " + path);
  std::string line;
  if (!std::getline(in, line)) throw invalid_input("empty posterior file");
  const auto header = split_csv_line(line);
  index_t p = 0, r = 0;
  for (const auto& h : header) {
    if (h.rfind("beta", 0) == 0) ++p;
    if (h.rfind("w", 0) == 0 && h != "w" && std::isdigit(h[1])) ++r;
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> chains, iters;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw invalid_input("posterior line " + std::to_string(line_no) +
                          ": wrong field count");
    }
    chains.push_back(static_cast<int>(parse_double(fields[0], line_no, "chain")));
    iters.push_back(static_cast<int>(parse_double(fields[1], line_no, "iter")));
    std::vector<double> vals(fields.size() - 2);
    for (std::size_t k = 2; k < fields.size(); ++k) {
      vals[k - 2] = parse_double(fields[k], line_no, header[k]);
    }
    rows.push_back(std::move(vals));
  }
  PosteriorSamples s;
  s.p = p;
  s.r = r;
  const index_t n = static_cast<index_t>(rows.size());
  s.chain = chains;
  s.iter = iters;
  s.beta.resize(n, p);
  s.tau2.resize(n);
  s.sigma2.resize(n);
  s.a.resize(n);
  s.c.resize(n);
  s.kappa.resize(n);
  if (r > 0) s.w.resize(n, r);
  for (index_t d = 0; d < n; ++d) {
    const auto& v = rows[d];
    index_t k = 0;
    for (index_t b = 0; b < p; ++b) s.beta(d, b) = v[k++];
    s.tau2[d] = v[k++];
    s.sigma2[d] = v[k++];
    s.a[d] = v[k++];
    s.c[d] = v[k++];
    s.kappa[d] = v[k++];
    for (index_t b = 0; b < r; ++b) s.w(d, b) = v[k++];
  }
  int max_chain = -1;
  for (const int ch : s.chain) max_chain = std::max(max_chain, ch);
  s.accept_rate.assign(max_chain + 1, std::nan(""));
  return s;
}

void write_posterior_meta(const PosteriorSamples& samples,
                          const std::string& path) {
  json j;
  j["n_draws"] = samples.n_draws();
  j["accept_rate"] = samples.accept_rate;
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_manifest(const std::string& path, const RunConfig& config,
                    index_t r, index_t n_obs) {
  json j;
  j["config_hash"] = config_hash(config);
  j["seed"] = config.seed;
  j["n_chains"] = config.n_chains;
  j["reference_size"] = r;
  j["n_observed"] = n_obs;
  j["version"] = "0.1.0";
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_neighbor_csv(const std::string& path, const NeighborTable& table) {
  std::ofstream out(path);
  if (!out) throw invalid_input("cannot write " + path);
  out << "i,rank,j\n";
  for (index_t i = 0; i < table.size(); ++i) {
    const auto nbrs = table.neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      out << i << ',' << k << ',' << nbrs[k] << "\n";
    }
  }
}

}  // namespace dnngp
