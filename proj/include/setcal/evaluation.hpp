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

// Repeated random-split evaluation: calibrate on one part, measure coverage
// and average prediction-set size (APSS) on the other, for every alpha of a
// grid. Also the budget sweep, the point-prediction baseline and semantic
// de-duplication of prediction sets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "setcal/calibration.hpp"
#include "setcal/errors.hpp"
#include "setcal/record.hpp"

namespace setcal {

struct EvalConfig {
  std::vector<double> alpha_grid;
  double split_ratio = 0.5;
  std::size_t trials = 100;
  std::uint64_t seed = 10;
  AdmissionRule admission{};
  // Similarity threshold for merging near-duplicates inside a set.
  std::optional<double> dedup_threshold;
  LambdaGrid lambda_grid{0.01};
  // Worker threads for trials; 0 picks hardware concurrency.
  std::size_t threads = 0;

  void validate() const {
    if (alpha_grid.empty()) throw ArgumentError("evaluate: empty alpha grid");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
      if (!(alpha_grid[i] > 0.0 && alpha_grid[i] < 1.0)) {
        throw ArgumentError("evaluate: alpha values must lie in (0, 1)");
      }
      if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1])) {
        throw ArgumentError("evaluate: alpha grid must be strictly ascending");
      }
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
      throw ArgumentError("evaluate: split ratio must lie in (0, 1)");
    }
    if (trials < 1) throw ArgumentError("evaluate: trials must be >= 1");
    if (dedup_threshold && !(*dedup_threshold > 0.0 && *dedup_threshold <= 1.0)) {
      throw ArgumentError("evaluate: dedup threshold must lie in (0, 1]");
    }
  }
};

// Result of one (alpha, trial) cell.
struct TrialResult {
  double alpha = 0.0;
  std::size_t trial = 0;
  double coverage = 0.0;
  double apss = 0.0;
  std::optional<double> apss_dedup;
  std::optional<double> coverage_dedup;
  double alpha_l = 0.0;
  double alpha_feasible = 0.0;
  bool feasible = false;
  std::optional<double> lambda_hat;
  // lambda_hat, or 1 when infeasible.
  double lambda_used = 1.0;
};

struct SummaryStat {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

struct AlphaSummary {
  double alpha = 0.0;
  SummaryStat coverage;
  SummaryStat coverage_feasible;  // over feasible trials only
  SummaryStat apss;
  std::optional<SummaryStat> apss_dedup;
  std::optional<SummaryStat> coverage_dedup;
  SummaryStat alpha_l;
  SummaryStat alpha_feasible;
  SummaryStat lambda_hat;  // over feasible trials only
  double feasible_fraction = 0.0;
};

struct EvaluationReport {
  // Ordered by (alpha, trial).
  std::vector<TrialResult> rows;
  std::vector<AlphaSummary> summary;
};

// Stable per-trial seed: splitmix64 finalizer applied to
// seed + 0x9E3779B97F4A7C15 * (trial + 1).
inline constexpr const char* kTrialSeedMixing =
    "splitmix64(seed + 0x9E3779B97F4A7C15 * (trial + 1))";

inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Random permutation of 0..n-1 cut into floor(ratio n) calibration indices
// and the rest.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("split: ratio must lie in (0, 1)");
  const auto n_cal = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  if (n_cal < 1 || n_cal >= n) {
    throw ArgumentError("split: " + std::to_string(n) + " records at ratio " +
                        std::to_string(ratio) + " leave one side empty");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return {std::vector<std::size_t>(perm.begin(), perm.begin() + n_cal),
          std::vector<std::size_t>(perm.begin() + n_cal, perm.end())};
}

template <class Record>
std::pair<std::vector<Record>, std::vector<Record>> split_records(
    std::span<const Record> records, double ratio, std::uint64_t seed) {
  auto [cal_idx, test_idx] = split_indices(records.size(), ratio, seed);
  std::pair<std::vector<Record>, std::vector<Record>> out;
  out.first.reserve(cal_idx.size());
  out.second.reserve(test_idx.size());
  for (std::size_t i : cal_idx) out.first.push_back(records[i]);
  for (std::size_t i : test_idx) out.second.push_back(records[i]);
  return out;
}

// Collapses each group of near-duplicates (connected under
// sim >= threshold, within the set) to its highest-scoring member; ties go
// to the lowest index. Output keeps candidate order.
inline std::vector<std::size_t> deduplicate_set(const ScoredRecord& r,
                                                std::span<const std::size_t> set_indices,
                                                double threshold) {
  if (!r.sim_matrix) throw FeatureMissingError(r.id, "sim_matrix");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ArgumentError("deduplicate_set: threshold must lie in (0, 1]");
  }
  const std::size_t m = set_indices.size();
  std::vector<std::size_t> component(m, m);
  std::vector<std::size_t> keep;
  for (std::size_t start = 0; start < m; ++start) {
    if (component[start] != m) continue;
    // Flood fill from `start`.
    std::vector<std::size_t> stack{start};
    component[start] = start;
    std::size_t best = start;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      const double fa = score_of(r, set_indices[a]);
      const double fb = score_of(r, set_indices[best]);
      if (fa > fb || (fa == fb && set_indices[a] < set_indices[best])) best = a;
      for (std::size_t b = 0; b < m; ++b) {
        if (component[b] == m &&
            (*r.sim_matrix)(set_indices[a], set_indices[b]) >= threshold) {
          component[b] = start;
          stack.push_back(b);
        }
      }
    }
    keep.push_back(set_indices[best]);
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

// Evaluates every alpha of the grid on one calibration/test split.
inline std::vector<TrialResult> evaluate_split(std::span<const ScoredRecord> cal,
                                               std::span<const ScoredRecord> test,
                                               const EvalConfig& cfg,
                                               std::size_t trial = 0) {
  if (test.empty()) throw ArgumentError("evaluate: empty test set");
  std::vector<TrialResult> out;
  out.reserve(cfg.alpha_grid.size());
  const double n_test = static_cast<double>(test.size());
  for (double alpha : cfg.alpha_grid) {
    const CalibrationOutcome outcome =
        calibrate_threshold(cal, alpha, cfg.lambda_grid, cfg.admission);
    TrialResult row;
    row.alpha = alpha;
    row.trial = trial;
    row.alpha_l = outcome.alpha_l;
    row.alpha_feasible = outcome.alpha_feasible;
    row.feasible = outcome.feasible();
    row.lambda_hat = outcome.lambda_hat;
    row.lambda_used = outcome.lambda_hat.value_or(1.0);

    std::size_t covered = 0;
    std::size_t total_size = 0;
    std::size_t covered_dedup = 0;
    std::size_t total_size_dedup = 0;
    for (const auto& r : test) {
      const PredictionSet set = prediction_set(r, row.lambda_used, cfg.admission);
      covered += set.covered ? 1 : 0;
      total_size += set.size();
      if (cfg.dedup_threshold) {
        const auto kept = deduplicate_set(r, set.indices, *cfg.dedup_threshold);
        total_size_dedup += kept.size();
        for (std::size_t j : kept) {
          if (is_admissible(r.candidates[j], cfg.admission)) {
            ++covered_dedup;
            break;
          }
        }
      }
    }
    row.coverage = static_cast<double>(covered) / n_test;
    row.apss = static_cast<double>(total_size) / n_test;
    if (cfg.dedup_threshold) {
      row.apss_dedup = static_cast<double>(total_size_dedup) / n_test;
      row.coverage_dedup = static_cast<double>(covered_dedup) / n_test;
    }
    out.push_back(row);
  }
  return out;
}

namespace detail {

// Arithmetic mean and population standard deviation.
inline SummaryStat summarize(const std::vector<double>& xs) {
  SummaryStat s;
  s.count = xs.size();
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / n);
  return s;
}

inline std::vector<AlphaSummary> summarize_rows(const std::vector<TrialResult>& rows,
                                                const EvalConfig& cfg) {
  std::vector<AlphaSummary> out;
  for (std::size_t a = 0; a < cfg.alpha_grid.size(); ++a) {
    std::vector<double> cov, cov_feas, apss, apss_d, cov_d, al, af, lam;
    std::size_t feasible = 0;
    for (const auto& row : rows) {
      if (row.alpha != cfg.alpha_grid[a]) continue;
      cov.push_back(row.coverage);
      apss.push_back(row.apss);
      al.push_back(row.alpha_l);
      af.push_back(row.alpha_feasible);
      if (row.apss_dedup) apss_d.push_back(*row.apss_dedup);
      if (row.coverage_dedup) cov_d.push_back(*row.coverage_dedup);
      if (row.feasible) {
        ++feasible;
        cov_feas.push_back(row.coverage);
        lam.push_back(*row.lambda_hat);
      }
    }
    AlphaSummary s;
    s.alpha = cfg.alpha_grid[a];
    s.coverage = summarize(cov);
    s.coverage_feasible = summarize(cov_feas);
    s.apss = summarize(apss);
    if (cfg.dedup_threshold) {
      s.apss_dedup = summarize(apss_d);
      s.coverage_dedup = summarize(cov_d);
    }
    s.alpha_l = summarize(al);
    s.alpha_feasible = summarize(af);
    s.lambda_hat = summarize(lam);
    s.feasible_fraction = cov.empty() ? 0.0 : static_cast<double>(feasible) / static_cast<double>(cov.size());
    out.push_back(s);
  }
  return out;
}

}  // namespace detail

// Runs cfg.trials random splits. Trials run in parallel; rows are stored by
// (alpha, trial) slot so the report does not depend on scheduling.
inline EvaluationReport evaluate(std::span<const ScoredRecord> records,
                                 const EvalConfig& cfg) {
  cfg.validate();
  if (records.size() < 4) throw ArgumentError("evaluate: need at least 4 records");
  for (const auto& r : records) {
    if (!r.fully_scored()) throw FeatureMissingError(r.id, "f_score");
  }

  const std::size_t n_alpha = cfg.alpha_grid.size();
  std::vector<TrialResult> rows(n_alpha * cfg.trials);
  auto run_trial = [&](std::size_t t) {
    auto [cal_idx, test_idx] = split_indices(records.size(), cfg.split_ratio,
                                             trial_seed(cfg.seed, t));
    std::vector<ScoredRecord> cal, test;
    cal.reserve(cal_idx.size());
    test.reserve(test_idx.size());
    for (std::size_t i : cal_idx) cal.push_back(records[i]);
    for (std::size_t i : test_idx) test.push_back(records[i]);
    const auto results = evaluate_split(cal, test, cfg, t);
    for (std::size_t a = 0; a < n_alpha; ++a) rows[a * cfg.trials + t] = results[a];
  };

  std::size_t workers = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, cfg.trials);
  if (workers == 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t) run_trial(t);
  } else {
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t t = w; t < cfg.trials; t += workers) run_trial(t);
      }));
    }
    for (auto& f : futures) f.get();
  }

  EvaluationReport report;
  report.rows = std::move(rows);
  report.summary = detail::summarize_rows(report.rows, cfg);
  return report;
}

struct BaselineResult {
  double mlg_accuracy = 0.0;
  double attainability = 0.0;
};

// Point-prediction accuracy of the MLG answer versus the fraction of pools
// containing any admissible candidate, both over all records.
inline BaselineResult mlg_baseline(std::span<const CandidateRecord> records,
                                   const AdmissionRule& rule) {
  if (records.empty()) throw ArgumentError("mlg_baseline: no records");
  std::size_t correct = 0;
  std::size_t attained = 0;
  for (const auto& r : records) {
    if (!r.mlg) throw FeatureMissingError(r.id, "mlg");
    correct += is_admissible(*r.mlg, rule) ? 1 : 0;
    attained += has_admissible(r, rule) ? 1 : 0;
  }
  const double n = static_cast<double>(records.size());
  return {static_cast<double>(correct) / n, static_cast<double>(attained) / n};
}

struct BudgetPoint {
  double alpha_l = 0.0;
  double attainability = 0.0;
};

// alpha_l and attainability of the whole dataset with pools truncated to k.
inline std::map<std::size_t, BudgetPoint> sweep_budget(std::span<const CandidateRecord> records,
                                                       const AdmissionRule& rule,
                                                       std::span<const std::size_t> k_values) {
  if (records.empty()) throw ArgumentError("sweep_budget: no records");
  std::map<std::size_t, BudgetPoint> out;
  const double n = static_cast<double>(records.size());
  for (std::size_t k : k_values) {
    std::size_t failures = 0;
    for (const auto& r : records) {
      failures += has_admissible(truncate_budget(r, k), rule) ? 0 : 1;
    }
    out[k] = {static_cast<double>(failures) / (n + 1.0),
              1.0 - static_cast<double>(failures) / n};
  }
  return out;
}

inline std::string format_fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

inline constexpr const char* kReportCsvHeader =
    "alpha,trial,coverage,apss,apss_dedup,alpha_l,alpha_feasible,feasible,lambda_hat";

inline void write_report_csv(std::ostream& out, const EvaluationReport& report) {
  out << kReportCsvHeader << '\n';
  for (const auto& row : report.rows) {
    out << format_fixed6(row.alpha) << ',' << row.trial << ','
        << format_fixed6(row.coverage) << ',' << format_fixed6(row.apss) << ','
        << (row.apss_dedup ? format_fixed6(*row.apss_dedup) : "") << ','
        << format_fixed6(row.alpha_l) << ',' << format_fixed6(row.alpha_feasible) << ','
        << (row.feasible ? "true" : "false") << ','
        << (row.lambda_hat ? format_fixed6(*row.lambda_hat) : "") << '\n';
  }
}

inline nlohmann::json report_summary_json(const EvaluationReport& report,
                                          const EvalConfig& cfg) {
  auto stat = [](const SummaryStat& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
  };
  nlohmann::json per_alpha = nlohmann::json::array();
  for (const auto& s : report.summary) {
    nlohmann::json obj = {{"alpha", s.alpha},
                          {"coverage", stat(s.coverage)},
                          {"coverage_feasible", stat(s.coverage_feasible)},
                          {"apss", stat(s.apss)},
                          {"alpha_l", stat(s.alpha_l)},
                          {"alpha_feasible", stat(s.alpha_feasible)},
                          {"lambda_hat", stat(s.lambda_hat)},
                          {"feasible_fraction", s.feasible_fraction}};
    if (s.apss_dedup) obj["apss_dedup"] = stat(*s.apss_dedup);
    if (s.coverage_dedup) obj["coverage_dedup"] = stat(*s.coverage_dedup);
    per_alpha.push_back(std::move(obj));
  }
  nlohmann::json config = {{"alpha_grid", cfg.alpha_grid},
                           {"split_ratio", cfg.split_ratio},
                           {"trials", cfg.trials},
                           {"seed", cfg.seed},
                           {"tau", cfg.admission.tau},
                           {"lambda_step", cfg.lambda_grid.step()},
                           {"dedup_threshold", nullptr},
                           {"trial_seed_mixing", kTrialSeedMixing}};
  if (cfg.dedup_threshold) config["dedup_threshold"] = *cfg.dedup_threshold;
  return {{"config", std::move(config)}, {"aggregates", std::move(per_alpha)}};
}

}  // namespace setcal
