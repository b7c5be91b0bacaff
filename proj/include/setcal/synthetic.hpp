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

// Synthetic exchangeable candidate pools with known admissibility, plus
// brute-force re-implementations of the calibration quantities used as test
// oracles.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "setcal/calibration.hpp"
#include "setcal/errors.hpp"
#include "setcal/record.hpp"

namespace setcal {

enum class ScoreModel {
  // f_score drawn from a Beta depending on the admissibility label; no
  // matrices emitted.
  kPrescoredBeta,
  // u_raw, sim_matrix and entail_matrix emitted; f_score left for scoring.
  kFullFeature,
};

struct BetaShape {
  double a = 1.0;
  double b = 1.0;
};

struct OracleConfig {
  std::size_t n_records = 100;
  std::size_t k = 20;
  double p_adm = 0.3;
  ScoreModel score_model = ScoreModel::kPrescoredBeta;
  BetaShape beta_adm{5.0, 2.0};
  BetaShape beta_inadm{2.0, 5.0};
  // Half-width of the uniform jitter added to similarities (full-feature).
  double noise = 0.1;
  // When > 0, each record draws its own admission probability from
  // Beta(p_adm * c, (1 - p_adm) * c) with c = difficulty_concentration.
  double difficulty_concentration = 0.0;
  std::uint64_t seed = 10;

  void validate() const {
    if (n_records < 1) throw ArgumentError("oracle: n_records must be >= 1");
    if (k < 1) throw ArgumentError("oracle: k must be >= 1");
    if (!(p_adm >= 0.0 && p_adm <= 1.0)) throw ArgumentError("oracle: p_adm must lie in [0, 1]");
    if (!(beta_adm.a > 0 && beta_adm.b > 0 && beta_inadm.a > 0 && beta_inadm.b > 0)) {
      throw ArgumentError("oracle: Beta shapes must be > 0");
    }
    if (!(noise >= 0.0)) throw ArgumentError("oracle: noise must be >= 0");
    if (!(difficulty_concentration >= 0.0)) {
      throw ArgumentError("oracle: difficulty concentration must be >= 0");
    }
  }
};

namespace detail {

inline double draw_beta(std::mt19937_64& rng, BetaShape shape) {
  std::gamma_distribution<double> ga(shape.a, 1.0);
  std::gamma_distribution<double> gb(shape.b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace detail

// i.i.d. records, hence exchangeable. One generator stream in record order,
// so the output depends only on the config.
inline std::vector<CandidateRecord> generate(const OracleConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool vary_difficulty = cfg.difficulty_concentration > 0.0 &&
                               cfg.p_adm > 0.0 && cfg.p_adm < 1.0;

  std::vector<CandidateRecord> records;
  records.reserve(cfg.n_records);
  for (std::size_t i = 0; i < cfg.n_records; ++i) {
    double p = cfg.p_adm;
    if (vary_difficulty) {
      p = detail::draw_beta(rng, {cfg.p_adm * cfg.difficulty_concentration,
                                  (1.0 - cfg.p_adm) * cfg.difficulty_concentration});
    }
    CandidateRecord r;
    r.id = "q" + std::to_string(i);
    std::vector<bool> label(cfg.k);
    for (std::size_t j = 0; j < cfg.k; ++j) {
      label[j] = unit(rng) < p;
      Candidate c;
      c.text = r.id + "-c" + std::to_string(j);
      c.sim_to_gold = label[j] ? 1.0 : 0.0;
      if (cfg.score_model == ScoreModel::kPrescoredBeta) {
        c.f_score = detail::draw_beta(rng, label[j] ? cfg.beta_adm : cfg.beta_inadm);
      } else {
        c.u_raw = gauss(rng) + (label[j] ? 0.5 : -0.5);
      }
      r.candidates.push_back(std::move(c));
    }
    if (cfg.score_model == ScoreModel::kFullFeature) {
      SimilarityMatrix sim(cfg.k, 1.0);
      EntailmentMatrix entail(cfg.k, false);
      for (std::size_t a = 0; a < cfg.k; ++a) {
        entail(a, a) = true;
        for (std::size_t b = a + 1; b < cfg.k; ++b) {
          const bool same = label[a] == label[b];
          double s = (same ? 1.0 : 0.0) + (2.0 * unit(rng) - 1.0) * cfg.noise;
          s = std::clamp(s, 0.0, 1.0);
          sim(a, b) = s;
          sim(b, a) = s;
          entail(a, b) = same;
          entail(b, a) = same;
        }
      }
      r.sim_matrix = std::move(sim);
      r.entail_matrix = std::move(entail);
    }
    Candidate mlg = r.candidates.front();
    mlg.f_score.reset();
    r.mlg = std::move(mlg);
    records.push_back(std::move(r));
  }
  return records;
}

// Independent recomputation of alpha_l by a direct double loop.
inline double brute_force_mrl(std::span<const CandidateRecord> records,
                              const AdmissionRule& rule) {
  std::size_t failures = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    bool any = false;
    for (std::size_t j = 0; j < records[i].candidates.size(); ++j) {
      if (records[i].candidates[j].sim_to_gold >= rule.tau) any = true;
    }
    if (!any) ++failures;
  }
  return static_cast<double>(failures) / static_cast<double>(records.size() + 1);
}

// Exhaustive grid scan that rebuilds every prediction set from scratch.
inline std::optional<double> brute_force_lambda(std::span<const CandidateRecord> records,
                                                double alpha, const LambdaGrid& grid,
                                                const AdmissionRule& rule) {
  const double n = static_cast<double>(records.size());
  for (double lambda : grid.values()) {
    double total_loss = 0.0;
    for (const auto& r : records) {
      std::vector<std::size_t> kept;
      for (std::size_t j = 0; j < r.candidates.size(); ++j) {
        if (*r.candidates[j].f_score + kScoreTolerance >= 1.0 - lambda) kept.push_back(j);
      }
      bool hit = false;
      for (std::size_t j : kept) {
        if (r.candidates[j].sim_to_gold >= rule.tau) hit = true;
      }
      total_loss += hit ? 0.0 : 1.0;
    }
    const double loss = total_loss / n;
    if (loss <= alpha - (1.0 - alpha) / n + kBudgetTolerance / n) return lambda;
  }
  return std::nullopt;
}

}  // namespace setcal
