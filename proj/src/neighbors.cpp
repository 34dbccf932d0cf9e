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
#include "dnngp/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dnngp {

namespace {

int isqrt_exact(int m) {
  const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
  if (s * s != m) {
    throw invalid_input("neighbor budget m must be a perfect square, got " +
                        std::to_string(m));
  }
  return s;
}

bool lag_tied(double x, double y) {
  return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
}

/*! Nearest selection among candidate sites, ties by smaller site index. */
std::vector<std::int32_t> nearest_sites(const ReferenceSet& ref, index_t target,
                                        const std::vector<std::int32_t>& cands,
                                        index_t take) {
  std::vector<std::pair<double, std::int32_t>> scored;
  scored.reserve(cands.size());
  for (const std::int32_t j : cands) {
    scored.emplace_back(ref.site_distance(target, j), j);
  }
  take = std::min<index_t>(take, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end());
  std::vector<std::int32_t> out(take);
  for (index_t k = 0; k < take; ++k) out[k] = scored[k].second;
  return out;
}

}  // namespace

ReverseTable build_reverse(const NeighborTable& table) {
  const index_t r = table.size();
  ReverseTable rev;
  rev.offsets.assign(r + 1, 0);
  for (const std::int32_t p : table.flat) rev.offsets[p + 1]++;
  for (index_t i = 0; i < r; ++i) rev.offsets[i + 1] += rev.offsets[i];
  rev.owner.resize(table.flat.size());
  rev.pos.resize(table.flat.size());
  std::vector<std::int32_t> cursor(rev.offsets.begin(), rev.offsets.end() - 1);
  for (index_t j = 0; j < r; ++j) {
    const auto nbrs = table.neighbors(j);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const std::int32_t i = nbrs[k];
      const std::int32_t slot = cursor[i]++;
      rev.owner[slot] = static_cast<std::int32_t>(j);
      rev.pos[slot] = static_cast<std::int32_t>(k);
    }
  }
  return rev;
}

NeighborTable simple_neighbors(const ReferenceSet& ref, int m) {
  const int s = isqrt_exact(m);
  const index_t r = ref.size();
  if (m >= r) {
    throw invalid_input("simple_neighbors: m must be smaller than the "
                        "reference-set size");
  }
  const index_t N = ref.num_sites();
  const index_t M = ref.num_times();

  // Theta-free site rankings, shared across time levels.
  std::vector<std::vector<std::int32_t>> other_nn(N), earlier_nn(N);
  std::vector<std::int32_t> all_sites(N);
  std::iota(all_sites.begin(), all_sites.end(), 0);
  for (index_t j = 0; j < N; ++j) {
    std::vector<std::int32_t> others;
    others.reserve(N - 1);
    for (index_t q = 0; q < N; ++q) {
      if (q != j) others.push_back(static_cast<std::int32_t>(q));
    }
    other_nn[j] = nearest_sites(ref, j, others, s);
    std::vector<std::int32_t> earlier(all_sites.begin(), all_sites.begin() + j);
    earlier_nn[j] = nearest_sites(ref, j, earlier, s);
  }

  NeighborTable table;
  table.scheme = Scheme::simple;
  table.m = m;
  table.offsets.assign(r + 1, 0);
  std::vector<std::int32_t> scratch;
  for (index_t k = 0; k < M; ++k) {
    for (index_t j = 0; j < N; ++j) {
      scratch.clear();
      for (const std::int32_t q : earlier_nn[j]) {
        scratch.push_back(static_cast<std::int32_t>(ref.index_of(q, k)));
      }
      for (index_t lag = 1; lag < s && lag <= k; ++lag) {
        for (const std::int32_t q : other_nn[j]) {
          scratch.push_back(static_cast<std::int32_t>(ref.index_of(q, k - lag)));
        }
      }
      std::sort(scratch.begin(), scratch.end());
      const index_t i = ref.index_of(j, k);
      table.offsets[i + 1] = static_cast<std::int32_t>(scratch.size());
      table.flat.insert(table.flat.end(), scratch.begin(), scratch.end());
    }
  }
  for (index_t i = 0; i < r; ++i) table.offsets[i + 1] += table.offsets[i];
  return table;
}

EligibleSets build_eligible_sets(const ReferenceSet& ref, int m) {
  if (m < 1) throw invalid_input("build_eligible_sets: m must be >= 1");
  const index_t r = ref.size();
  const index_t N = ref.num_sites();
  EligibleSets out;
  out.m = m;
  out.offsets.assign(r + 1, 0);

  std::vector<std::vector<std::int32_t>> per_point(r);

#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 16)
#endif
  for (index_t i = 0; i < r; ++i) {
    const index_t ji = ref.site_of(i);
    const index_t k = ref.level_of(i);
    if (i == 0) continue;

    // Distance classes around site ji, merging near-equal values so exact
    // grid ties are counted as ties.
    std::vector<double> dist(N);
    for (index_t q = 0; q < N; ++q) dist[q] = ref.site_distance(ji, q);
    std::vector<std::int32_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
      return dist[a] < dist[b];
    });
    std::vector<std::int32_t> cls(N);
    std::vector<std::int32_t> class_start;  // into class_sites
    std::vector<std::int32_t> class_sites(N);
    std::int32_t n_classes = 0;
    for (index_t q = 0; q < N; ++q) {
      if (q == 0 || !lag_tied(dist[order[q]], dist[order[q - 1]])) {
        class_start.push_back(static_cast<std::int32_t>(q));
        ++n_classes;
      }
      cls[order[q]] = n_classes - 1;
    }
    class_start.push_back(static_cast<std::int32_t>(N));
    // Sites within each class, ascending by site index.
    {
      std::vector<std::int32_t> cursor(class_start.begin(),
                                       class_start.end() - 1);
      for (index_t q = 0; q < N; ++q) class_sites[cursor[cls[q]]++] = q;
      for (std::int32_t cidx = 0; cidx < n_classes; ++cidx) {
        std::sort(class_sites.begin() + class_start[cidx],
                  class_sites.begin() + class_start[cidx + 1]);
      }
    }
    const auto class_count_before = [&](std::int32_t cidx, index_t site) {
      const auto b = class_sites.begin() + class_start[cidx];
      const auto e = class_sites.begin() + class_start[cidx + 1];
      return static_cast<std::int32_t>(
          std::lower_bound(b, e, static_cast<std::int32_t>(site)) - b);
    };
    // Within a merged class only bitwise-equal lags give bitwise-equal
    // covariances, so only those ties are guaranteed to resolve by index.
    const auto exact_ties_before = [&](std::int32_t cidx, index_t site) {
      std::int32_t count = 0;
      for (std::int32_t s = class_start[cidx]; s < class_start[cidx + 1]; ++s) {
        const std::int32_t q = class_sites[s];
        if (q >= static_cast<std::int32_t>(site)) break;
        count += dist[q] == dist[site];
      }
      return count;
    };

    // Cumulative counts: all sites, and the same-time candidates (site < ji).
    std::vector<std::int32_t> ltA(n_classes + 1, 0), lt0(n_classes + 1, 0);
    for (std::int32_t cidx = 0; cidx < n_classes; ++cidx) {
      ltA[cidx + 1] = ltA[cidx] + (class_start[cidx + 1] - class_start[cidx]);
      lt0[cidx + 1] = lt0[cidx] + class_count_before(cidx, ji);
    }

    std::vector<std::int32_t>& elig = per_point[i];
    // Earliest levels first keeps the output ascending in index.
    for (index_t lag = k; lag >= 1; --lag) {
      const index_t level = k - lag;
      for (index_t jp = 0; jp < N; ++jp) {
        const std::int32_t cp = cls[jp];
        std::int32_t guaranteed_better =
            lt0[cp + 1]                                        // same time, u < u_p
            + static_cast<std::int32_t>(lag - 1) * ltA[cp + 1] // strictly earlier u
            + ltA[cp] + exact_ties_before(cp, jp);             // own level
        if (guaranteed_better <= m - 1) {
          elig.push_back(static_cast<std::int32_t>(ref.index_of(jp, level)));
        }
      }
    }
    for (index_t jp = 0; jp < ji; ++jp) {
      const std::int32_t cp = cls[jp];
      const std::int32_t guaranteed_better =
          lt0[cp] + exact_ties_before(cp, jp);
      if (guaranteed_better <= m - 1) {
        elig.push_back(static_cast<std::int32_t>(ref.index_of(jp, k)));
      }
    }
  }

  for (index_t i = 0; i < r; ++i) {
    out.offsets[i + 1] =
        out.offsets[i] + static_cast<std::int32_t>(per_point[i].size());
  }
  out.flat.resize(out.offsets[r]);
  for (index_t i = 0; i < r; ++i) {
    std::copy(per_point[i].begin(), per_point[i].end(),
              out.flat.begin() + out.offsets[i]);
  }
  return out;
}

NeighborTable adaptive_neighbors(const EligibleSets& eligible,
                                 const ReferenceSet& ref,
                                 const CovarianceParams& params, int m) {
  if (eligible.m != m) {
    throw invalid_input("adaptive_neighbors: eligible sets were built for m=" +
                        std::to_string(eligible.m));
  }
  if (eligible.size() != ref.size()) {
    throw invalid_input("adaptive_neighbors: eligible sets and reference set "
                        "have different sizes");
  }
  NeighborTable table;
  table.scheme = Scheme::adaptive;
  table.m = m;
  const index_t r = ref.size();
  table.offsets.assign(r + 1, 0);
  for (index_t i = 0; i < r; ++i) {
    const auto cand = eligible.at(i);
    table.offsets[i + 1] =
        table.offsets[i] +
        static_cast<std::int32_t>(std::min<std::size_t>(m, cand.size()));
  }
  table.flat.resize(table.offsets[r]);
  reselect_adaptive(table, eligible, ref, params);
  return table;
}

void reselect_adaptive(NeighborTable& table, const EligibleSets& eligible,
                       const ReferenceSet& ref,
                       const CovarianceParams& params) {
  const RefCovEval eval(ref, params);
  reselect_with_kernel(table, eligible,
                       [&](index_t p, index_t i) { return eval(p, i); });
}

NeighborTable dense_table(const ReferenceSet& ref) {
  const index_t r = ref.size();
  NeighborTable table;
  table.scheme = Scheme::dense;
  table.m = static_cast<int>(r - 1);
  table.offsets.resize(r + 1);
  table.offsets[0] = 0;
  for (index_t i = 0; i < r; ++i) {
    table.offsets[i + 1] = table.offsets[i] + static_cast<std::int32_t>(i);
  }
  table.flat.resize(table.offsets[r]);
  for (index_t i = 0; i < r; ++i) {
    std::iota(table.flat.begin() + table.offsets[i],
              table.flat.begin() + table.offsets[i + 1], 0);
  }
  return table;
}

std::vector<index_t> eligible_for_point(const SpaceTimePoint& p,
                                        const ReferenceSet& ref, int m) {
  if (m < 1) throw invalid_input("eligible_for_point: m must be >= 1");
  const index_t r = ref.size();
  const index_t N = ref.num_sites();
  const index_t M = ref.num_times();
  std::vector<double> hs(N), us(M);
  for (index_t j = 0; j < N; ++j) {
    hs[j] = (ref.sites().row(j).transpose() - p.s).norm();
  }
  for (index_t k = 0; k < M; ++k) us[k] = std::abs(ref.times()[k] - p.t);

  std::vector<index_t> out;
  for (index_t cand = 0; cand < r; ++cand) {
    const double hp = hs[ref.site_of(cand)];
    const double up = us[ref.level_of(cand)];
    std::int32_t better = 0;
    bool eligible = true;
    for (index_t q = 0; q < r && eligible; ++q) {
      if (q == cand) continue;
      const double hq = hs[ref.site_of(q)];
      const double uq = us[ref.level_of(q)];
      const bool h_eq = lag_tied(hq, hp);
      const bool u_eq = lag_tied(uq, up);
      bool counts = false;
      if (!h_eq && hq < hp) {
        counts = u_eq || uq < up;
      } else if (h_eq) {
        if (!u_eq && uq < up) {
          counts = true;
        } else if (hq == hp && uq == up) {
          // Bitwise-equal lags give bitwise-equal covariances, so the
          // index tie break is guaranteed; near-ties can rank either way.
          counts = q < cand;
        }
      }
      if (counts && ++better > m - 1) eligible = false;
    }
    if (eligible) out.push_back(cand);
  }
  return out;
}

std::vector<index_t> select_point_neighbors(const SpaceTimePoint& p,
                                            const std::vector<index_t>& eligible,
                                            const ReferenceSet& ref,
                                            const CovarianceParams& params,
                                            int m) {
  std::vector<std::pair<double, index_t>> scored;
  scored.reserve(eligible.size());
  for (const index_t q : eligible) {
    const SpaceTimePoint rq = ref.point(q);
    scored.emplace_back(cov(spatial_lag(p, rq), temporal_lag(p, rq), params), q);
  }
  const index_t take = std::min<index_t>(m, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end(),
                    [](const auto& x, const auto& y) {
                      if (x.first != y.first) return x.first > y.first;
                      return x.second < y.second;
                    });
  std::vector<index_t> out(take);
  for (index_t k = 0; k < take; ++k) out[k] = scored[k].second;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<index_t> prediction_neighbors(const SpaceTimePoint& p,
                                          const ReferenceSet& ref,
                                          Scheme scheme, int m,
                                          const CovarianceParams* params) {
  if (ref.find(p).has_value()) {
    throw invalid_input("prediction_neighbors: point coincides with a "
                        "reference point; use its reference index instead");
  }
  const index_t r = ref.size();
  if (scheme == Scheme::dense) {
    std::vector<index_t> all(r);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  if (scheme == Scheme::adaptive) {
    if (params == nullptr) {
      throw invalid_input("prediction_neighbors: adaptive scheme needs "
                          "covariance parameters");
    }
    if (m >= r) {
      std::vector<index_t> all(r);
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    return select_point_neighbors(p, eligible_for_point(p, ref, m), ref,
                                  *params, m);
  }

  const int s = isqrt_exact(m);
  std::vector<std::pair<double, index_t>> site_rank, time_rank;
  for (index_t j = 0; j < ref.num_sites(); ++j) {
    site_rank.emplace_back((ref.sites().row(j).transpose() - p.s).norm(), j);
  }
  for (index_t k = 0; k < ref.num_times(); ++k) {
    time_rank.emplace_back(std::abs(ref.times()[k] - p.t), k);
  }
  const index_t ns = std::min<index_t>(s, site_rank.size());
  const index_t nt = std::min<index_t>(s, time_rank.size());
  std::partial_sort(site_rank.begin(), site_rank.begin() + ns, site_rank.end());
  std::partial_sort(time_rank.begin(), time_rank.begin() + nt, time_rank.end());
  std::vector<index_t> out;
  out.reserve(ns * nt);
  for (index_t b = 0; b < nt; ++b) {
    for (index_t a = 0; a < ns; ++a) {
      out.push_back(ref.index_of(site_rank[a].second, time_rank[b].second));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dnngp
