/*
 * Copyright 2026 The setcal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Multi-view reliability score for sampled candidates.
//
// For a pool of K candidates the score combines three signals:
//   * self-uncertainty u_raw (larger = more reliable),
//   * consistency: mean similarity of a candidate to the rest of the pool,
//   * consensus: relative size of the candidate's mutual-entailment cluster.
// The first two are z-normalized within the pool and fed through a weighted
// logistic to give a base quality Q in (0, 1). The consensus strength
// CS = (n_j / n_max)^gamma scales it: F = CS * Q.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "setcal/errors.hpp"
#include "setcal/matrix.hpp"
#include "setcal/record.hpp"

namespace setcal {

struct ScoringConfig {
  double w_u = 0.5;
  double w_s = 0.5;
  double gamma_cons = 1.0;
  double epsilon = 1e-8;
  bool use_consensus = true;
  bool use_uncertainty = true;
  bool use_consistency = true;

  void validate() const {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
    if (!(gamma_cons > 0.0)) throw ArgumentError("gamma_cons must be > 0");
  }
};

// Partition of a pool into semantic clusters.
struct ClusterAssignment {
  // Cluster label of each candidate. Labels are 0, 1, 2, ... numbered in
  // order of each cluster's smallest member index.
  std::vector<int> labels;
  // Member count indexed by label.
  std::vector<std::size_t> sizes;
  std::size_t n_max = 0;

  std::size_t size_of_member(std::size_t j) const {
    return sizes[static_cast<std::size_t>(labels[j])];
  }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Mean off-diagonal similarity per row. A single-candidate pool has no
// peers and gets 0.
inline std::vector<double> avg_similarity(const SimilarityMatrix& sim) {
  const std::size_t k = sim.size();
  if (k == 0) throw ArgumentError("avg_similarity: empty matrix");
  std::vector<double> out(k, 0.0);
  if (k == 1) return out;
  for (std::size_t j = 0; j < k; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (i != j) sum += sim(j, i);
    }
    out[j] = sum / static_cast<double>(k - 1);
  }
  return out;
}

// (v - mean) / (population stddev + epsilon).
inline std::vector<double> z_normalize(std::span<const double> values,
                                       double epsilon) {
  const std::size_t k = values.size();
  std::vector<double> out(k, 0.0);
  if (k == 0) return out;
  const double n = static_cast<double>(k);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  for (std::size_t j = 0; j < k; ++j) out[j] = (values[j] - mean) / (sd + epsilon);
  return out;
}

inline std::vector<double> base_quality(std::span<const double> u_norm,
                                        std::span<const double> s_norm,
                                        const ScoringConfig& cfg) {
  if (u_norm.size() != s_norm.size()) {
    throw ArgumentError("base_quality: length mismatch");
  }
  std::vector<double> out(u_norm.size());
  for (std::size_t j = 0; j < u_norm.size(); ++j) {
    double logit = 0.0;
    if (cfg.use_uncertainty) logit += cfg.w_u * u_norm[j];
    if (cfg.use_consistency) logit += cfg.w_s * s_norm[j];
    out[j] = sigmoid(logit);
  }
  return out;
}

// Connected components of the mutual-entailment graph (edge j-k iff j
// entails k and k entails j).
inline ClusterAssignment cluster_candidates(const EntailmentMatrix& entail) {
  const std::size_t k = entail.size();
  std::vector<std::size_t> parent(k);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (entail(i, j) && entail(j, i)) {
        const std::size_t a = find(i);
        const std::size_t b = find(j);
        // Root is always the smaller index.
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  ClusterAssignment out;
  out.labels.assign(k, -1);
  std::vector<int> label_of_root(k, -1);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t root = find(j);
    if (label_of_root[root] < 0) {
      label_of_root[root] = static_cast<int>(out.sizes.size());
      out.sizes.push_back(0);
    }
    out.labels[j] = label_of_root[root];
    ++out.sizes[static_cast<std::size_t>(out.labels[j])];
  }
  for (std::size_t s : out.sizes) out.n_max = std::max(out.n_max, s);
  return out;
}

inline std::vector<double> consensus_strength(const ClusterAssignment& assign,
                                              double gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("consensus_strength: gamma must be > 0");
  std::vector<double> out(assign.labels.size());
  const double n_max = static_cast<double>(assign.n_max);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = std::pow(static_cast<double>(assign.size_of_member(j)) / n_max, gamma);
  }
  return out;
}

// Attaches f_score to every candidate (and cluster labels when an
// entailment matrix is available). Matrices are only required for the
// components that are enabled.
inline ScoredRecord score_record(const CandidateRecord& r,
                                 const ScoringConfig& cfg) {
  cfg.validate();
  const std::size_t k = r.budget();
  if (k == 0) throw ArgumentError("score_record: record '" + r.id + "' has no candidates");
  if (cfg.use_consistency && !r.sim_matrix) {
    throw FeatureMissingError(r.id, "sim_matrix");
  }
  if (cfg.use_consensus && !r.entail_matrix) {
    throw FeatureMissingError(r.id, "entail_matrix");
  }

  std::vector<double> u_norm(k, 0.0);
  if (cfg.use_uncertainty) {
    std::vector<double> u(k);
    for (std::size_t j = 0; j < k; ++j) u[j] = r.candidates[j].u_raw;
    u_norm = z_normalize(u, cfg.epsilon);
  }
  std::vector<double> s_norm(k, 0.0);
  if (cfg.use_consistency) {
    s_norm = z_normalize(avg_similarity(*r.sim_matrix), cfg.epsilon);
  }
  const std::vector<double> quality = base_quality(u_norm, s_norm, cfg);

  ScoredRecord out = r;
  std::vector<double> consensus(k, 1.0);
  if (r.entail_matrix) {
    const ClusterAssignment assign = cluster_candidates(*r.entail_matrix);
    if (cfg.use_consensus) consensus = consensus_strength(assign, cfg.gamma_cons);
    out.clusters = assign.labels;
  }
  for (std::size_t j = 0; j < k; ++j) {
    out.candidates[j].f_score = std::clamp(consensus[j] * quality[j], 0.0, 1.0);
  }
  return out;
}

}  // namespace setcal
