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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "setcal/errors.hpp"
#include "setcal/matrix.hpp"

namespace setcal {

// One sampled answer for a query.
struct Candidate {
  std::string text;
  // Per-candidate uncertainty feature, oriented so that larger means more
  // reliable.
  double u_raw = 0.0;
  // Similarity to the reference answer, in [0, 1]. Input to admission.
  double sim_to_gold = 0.0;
  // Reliability score in [0, 1]; absent until scored.
  std::optional<double> f_score;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// A query with its pool of K sampled candidates and the features computed
// over that pool.
struct CandidateRecord {
  std::string id;
  std::vector<Candidate> candidates;
  // sim_matrix(j, k): semantic similarity of candidates j and k.
  std::optional<SimilarityMatrix> sim_matrix;
  // entail_matrix(j, k): candidate j entails candidate k.
  std::optional<EntailmentMatrix> entail_matrix;
  // Most-likely-generation point prediction, used as a baseline.
  std::optional<Candidate> mlg;
  // Cluster label per candidate, attached by scoring.
  std::optional<std::vector<int>> clusters;

  std::size_t budget() const { return candidates.size(); }

  bool fully_scored() const {
    for (const auto& c : candidates) {
      if (!c.f_score) return false;
    }
    return !candidates.empty();
  }

  friend bool operator==(const CandidateRecord&,
                         const CandidateRecord&) = default;
};

// Records carrying f_score on every candidate. Same representation; the
// calibration routines check for the scores and raise FeatureMissingError.
using ScoredRecord = CandidateRecord;

// Admission threshold on sim_to_gold: a candidate is admissible, i.e.
// counted as semantically equivalent to the reference, iff
// sim_to_gold >= tau.
struct AdmissionRule {
  double tau = 0.7;
};

inline bool is_admissible(const Candidate& c, const AdmissionRule& rule) {
  return c.sim_to_gold >= rule.tau;
}

// True iff at least one candidate of the pool is admissible.
inline bool has_admissible(const CandidateRecord& r, const AdmissionRule& rule) {
  for (const auto& c : r.candidates) {
    if (is_admissible(c, rule)) return true;
  }
  return false;
}

// Keeps the first `k` candidates and the leading k x k blocks of the
// matrices. Cluster labels are dropped since they describe the full pool.
inline CandidateRecord truncate_budget(const CandidateRecord& r, std::size_t k) {
  if (k < 1 || k > r.budget()) {
    throw ArgumentError("truncate_budget: k=" + std::to_string(k) +
                        " outside [1, " + std::to_string(r.budget()) +
                        "] for record '" + r.id + "'");
  }
  if (k == r.budget()) return r;
  CandidateRecord out;
  out.id = r.id;
  out.candidates.assign(r.candidates.begin(), r.candidates.begin() + k);
  if (r.sim_matrix) out.sim_matrix = r.sim_matrix->leading_block(k);
  if (r.entail_matrix) out.entail_matrix = r.entail_matrix->leading_block(k);
  out.mlg = r.mlg;
  return out;
}

// (S + S^T) / 2 with the diagonal forced to 1.
inline void symmetrize(SimilarityMatrix& s) {
  const std::size_t k = s.size();
  for (std::size_t i = 0; i < k; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double mean = (s(i, j) + s(j, i)) / 2.0;
      s(i, j) = mean;
      s(j, i) = mean;
    }
  }
}

}  // namespace setcal
