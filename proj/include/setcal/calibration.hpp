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

// Feasibility bound and threshold calibration for set-valued prediction.
//
// A prediction set at threshold lambda keeps every candidate whose score
// satisfies f >= 1 - lambda, so sets grow with lambda and the full pool is
// reached at lambda = 1. Its miscoverage loss is 1 when no admissible
// candidate is kept.
//
// Even the full pool misses when sampling produced no admissible answer at
// all. With l_i that failure indicator on n calibration records, no rule can
// target a risk below
//
//     alpha_l = sum(l_i) / (n + 1).
//
// The threshold is the smallest grid lambda whose empirical loss satisfies
//
//     L_n(lambda) <= alpha - (1 - alpha) / n,
//
// which bounds the expected test loss by alpha for exchangeable data. At
// lambda = 1 the condition reads alpha >= (sum(l_i) + 1) / (n + 1), reported
// as alpha_feasible.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "setcal/errors.hpp"
#include "setcal/record.hpp"

namespace setcal {

// Slack on the f >= 1 - lambda comparison so that grid points such as
// 1 - 0.3 admit a score of exactly 0.7.
inline constexpr double kScoreTolerance = 1e-12;
// Slack on the loss budget, applied to the miss count.
inline constexpr double kBudgetTolerance = 1e-9;

// Ascending lambda values {0, step, 2 step, ..., 1}; always contains 0 and 1.
class LambdaGrid {
 public:
  explicit LambdaGrid(double step = 0.01) : step_(step) {
    if (!(step > 0.0 && step <= 1.0)) {
      throw ArgumentError("lambda grid step must lie in (0, 1]");
    }
    const double inverse = 1.0 / step;
    const double rounded = std::round(inverse);
    if (std::abs(inverse - rounded) < 1e-9) {
      // Exact divisor of 1: i / m is the correctly rounded grid point.
      const auto m = static_cast<std::size_t>(rounded);
      for (std::size_t i = 0; i <= m; ++i) {
        values_.push_back(static_cast<double>(i) / static_cast<double>(m));
      }
    } else {
      for (std::size_t i = 0;; ++i) {
        const double v = static_cast<double>(i) * step;
        if (v >= 1.0) break;
        values_.push_back(v);
      }
      values_.push_back(1.0);
    }
  }

  double step() const { return step_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  double step_;
  std::vector<double> values_;
};

struct PredictionSet {
  // Indices of the retained candidates, ascending.
  std::vector<std::size_t> indices;
  // True iff some retained candidate is admissible.
  bool covered = false;

  std::size_t size() const { return indices.size(); }
};

struct CalibrationOutcome {
  double alpha = 0.0;
  double alpha_l = 0.0;
  double alpha_feasible = 0.0;
  std::optional<double> lambda_hat;
  // (lambda, empirical loss) for every grid value, ascending in lambda.
  std::vector<std::pair<double, double>> loss_curve;
  std::size_t n = 0;

  bool feasible() const { return lambda_hat.has_value(); }
};

inline double score_of(const ScoredRecord& r, std::size_t j) {
  const auto& f = r.candidates[j].f_score;
  if (!f) throw FeatureMissingError(r.id, "f_score on candidate " + std::to_string(j));
  return *f;
}

inline bool passes_threshold(double f_score, double lambda) {
  return f_score + kScoreTolerance >= 1.0 - lambda;
}

// l_i: the whole pool contains no admissible candidate.
inline bool sampling_failure(const ScoredRecord& r, const AdmissionRule& rule) {
  return !has_admissible(r, rule);
}

// Returns (alpha_l, alpha_feasible).
inline std::pair<double, double> compute_mrl(std::span<const ScoredRecord> cal,
                                             const AdmissionRule& rule) {
  if (cal.empty()) throw ArgumentError("compute_mrl: empty calibration set");
  std::size_t failures = 0;
  for (const auto& r : cal) failures += sampling_failure(r, rule) ? 1 : 0;
  const double denom = static_cast<double>(cal.size() + 1);
  return {static_cast<double>(failures) / denom,
          static_cast<double>(failures + 1) / denom};
}

inline PredictionSet prediction_set(const ScoredRecord& r, double lambda,
                                    const AdmissionRule& rule) {
  PredictionSet out;
  for (std::size_t j = 0; j < r.budget(); ++j) {
    if (passes_threshold(score_of(r, j), lambda)) {
      out.indices.push_back(j);
      if (is_admissible(r.candidates[j], rule)) out.covered = true;
    }
  }
  return out;
}

inline int set_loss(const ScoredRecord& r, double lambda,
                    const AdmissionRule& rule) {
  return prediction_set(r, lambda, rule).covered ? 0 : 1;
}

inline double empirical_loss(std::span<const ScoredRecord> cal, double lambda,
                             const AdmissionRule& rule) {
  if (cal.empty()) throw ArgumentError("empirical_loss: empty calibration set");
  std::size_t misses = 0;
  for (const auto& r : cal) misses += static_cast<std::size_t>(set_loss(r, lambda, rule));
  return static_cast<double>(misses) / static_cast<double>(cal.size());
}

namespace detail {

// Highest score among admissible candidates; NaN-free sentinel -1 when the
// pool has none. A record is covered at lambda iff this passes the
// threshold, which turns the grid scan into one pass per record.
inline double best_admissible_score(const ScoredRecord& r,
                                    const AdmissionRule& rule) {
  double best = -1.0;
  for (std::size_t j = 0; j < r.budget(); ++j) {
    const double f = score_of(r, j);
    if (is_admissible(r.candidates[j], rule) && f > best) best = f;
  }
  return best;
}

}  // namespace detail

inline CalibrationOutcome calibrate_threshold(std::span<const ScoredRecord> cal,
                                              double alpha,
                                              const LambdaGrid& grid,
                                              const AdmissionRule& rule) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ArgumentError("calibrate_threshold: alpha must lie in (0, 1)");
  }
  if (cal.empty()) throw ArgumentError("calibrate_threshold: empty calibration set");

  CalibrationOutcome out;
  out.alpha = alpha;
  out.n = cal.size();
  std::tie(out.alpha_l, out.alpha_feasible) = compute_mrl(cal, rule);

  std::vector<double> best(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    best[i] = detail::best_admissible_score(cal[i], rule);
  }

  const double n = static_cast<double>(cal.size());
  // L_n <= alpha - (1 - alpha)/n  <=>  misses <= alpha (n + 1) - 1.
  const double max_misses = alpha * (n + 1.0) - 1.0 + kBudgetTolerance;
  out.loss_curve.reserve(grid.size());
  for (double lambda : grid.values()) {
    std::size_t misses = 0;
    for (double b : best) {
      if (b < 0.0 || !passes_threshold(b, lambda)) ++misses;
    }
    out.loss_curve.emplace_back(lambda, static_cast<double>(misses) / n);
    if (!out.lambda_hat && static_cast<double>(misses) <= max_misses) {
      out.lambda_hat = lambda;
    }
  }
  return out;
}

// alpha_l after truncating every pool to its first k candidates.
inline std::map<std::size_t, double> mrl_curve(std::span<const ScoredRecord> cal,
                                               const AdmissionRule& rule,
                                               std::span<const std::size_t> k_values) {
  std::map<std::size_t, double> out;
  for (std::size_t k : k_values) {
    std::vector<ScoredRecord> truncated;
    truncated.reserve(cal.size());
    for (const auto& r : cal) truncated.push_back(truncate_budget(r, k));
    out[k] = compute_mrl(truncated, rule).first;
  }
  return out;
}

inline nlohmann::json outcome_to_json(const CalibrationOutcome& o) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& [lambda, loss] : o.loss_curve) curve.push_back({lambda, loss});
  nlohmann::json obj = {{"alpha", o.alpha},
                        {"alpha_l", o.alpha_l},
                        {"alpha_feasible", o.alpha_feasible},
                        {"lambda_hat", nullptr},
                        {"feasible", o.feasible()},
                        {"loss_curve", std::move(curve)},
                        {"n", o.n}};
  if (o.lambda_hat) obj["lambda_hat"] = *o.lambda_hat;
  return obj;
}

}  // namespace setcal
