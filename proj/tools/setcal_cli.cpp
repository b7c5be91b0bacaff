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

// Command-line front end: score, calibrate, evaluate, sweep-k, baseline and
// simulate over JSONL record files.
//
// Exit codes: 0 success (an infeasible calibration is a success), 1 usage
// error, 2 data or schema error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "setcal/setcal.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to `path` through a temporary file and a rename; "-" is stdout.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw setcal::DataError("cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw setcal::DataError("failed writing '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw setcal::DataError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

// "start:stop:step" inclusive of both ends (1e-9 tolerance), or one number.
std::vector<double> parse_alpha_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("invalid --alpha-grid '" + spec + "'");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    throw UsageError("--alpha-grid expects start:stop:step with step > 0");
  }
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    double v = parts[0] + static_cast<double>(i) * parts[2];
    if (v > parts[1] + 1e-9) break;
    v = std::round(v * 1e12) / 1e12;
    grid.push_back(v);
  }
  return grid;
}

std::vector<std::size_t> parse_k_list(const std::string& spec) {
  std::vector<std::size_t> ks;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      ks.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("invalid --k-list '" + spec + "'");
    }
  }
  if (ks.empty()) throw UsageError("--k-list is empty");
  return ks;
}

setcal::BetaShape parse_beta(const std::string& spec) {
  const auto comma = spec.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(spec);
    return {std::stod(spec.substr(0, comma)), std::stod(spec.substr(comma + 1))};
  } catch (const std::exception&) {
    throw UsageError("invalid Beta shape '" + spec + "', expected a,b");
  }
}

std::string dump_records(const std::vector<setcal::CandidateRecord>& records) {
  std::ostringstream out;
  setcal::write_records(out, records);
  return out.str();
}

std::string default_summary_path(const std::string& csv_path) {
  if (csv_path.empty() || csv_path == "-") return {};
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  if (p == std::filesystem::path(csv_path)) p += ".summary.json";
  return p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"setcal: feasibility-aware calibration of set-valued predictions over sampled candidate pools"};
  app.require_subcommand(1);

  // score
  std::string score_records, score_out = "-";
  setcal::ScoringConfig scoring;
  bool no_consensus = false, no_uncertainty = false, no_consistency = false;
  auto* score = app.add_subcommand("score", "Attach reliability scores f_score to every candidate");
  score->add_option("-r,--records", score_records, "Input record file (JSONL)")->required();
  score->add_option("-o,--output", score_out, "Output record file, '-' for stdout")->capture_default_str();
  score->add_option("--w-u", scoring.w_u, "Weight of the normalized uncertainty")->capture_default_str();
  score->add_option("--w-s", scoring.w_s, "Weight of the normalized consistency")->capture_default_str();
  score->add_option("--gamma", scoring.gamma_cons, "Consensus exponent (> 0)")->capture_default_str();
  score->add_option("--epsilon", scoring.epsilon, "Stabilizer of the z-score denominator")->capture_default_str();
  score->add_flag("--no-consensus", no_consensus, "Disable the consensus factor");
  score->add_flag("--no-uncertainty", no_uncertainty, "Disable the uncertainty term");
  score->add_flag("--no-consistency", no_consistency, "Disable the consistency term");

  // calibrate
  std::string cal_records, cal_out = "-";
  double cal_alpha = 0.0, cal_step = 0.01, cal_tau = 0.7;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the threshold for one target risk alpha");
  calibrate->add_option("-r,--records", cal_records, "Scored record file (JSONL)")->required();
  calibrate->add_option("--alpha", cal_alpha, "Target risk level in (0, 1)")->required();
  calibrate->add_option("--grid-step", cal_step, "Lambda grid step")->capture_default_str();
  calibrate->add_option("--tau", cal_tau, "Admission threshold on sim_to_gold")->capture_default_str();
  calibrate->add_option("-o,--output", cal_out, "Output JSON, '-' for stdout")->capture_default_str();

  // evaluate
  std::string ev_records, ev_out = "-", ev_summary, ev_alpha_grid = "0.05:0.95:0.05";
  std::size_t ev_splits = 100, ev_threads = 0;
  double ev_ratio = 0.5, ev_tau = 0.7, ev_step = 0.01;
  std::optional<double> ev_dedup;
  std::uint64_t ev_seed = 10;
  auto* evaluate = app.add_subcommand("evaluate", "Repeated random-split coverage and set-size evaluation");
  evaluate->add_option("-r,--records", ev_records, "Scored record file (JSONL)")->required();
  evaluate->add_option("--alpha-grid", ev_alpha_grid, "Alpha values as start:stop:step (inclusive)")->capture_default_str();
  evaluate->add_option("--splits", ev_splits, "Number of random splits")->capture_default_str();
  evaluate->add_option("--split-ratio", ev_ratio, "Calibration fraction")->capture_default_str();
  evaluate->add_option("--dedup-threshold", ev_dedup, "Merge near-duplicates with similarity >= this (e.g. 0.9)");
  evaluate->add_option("--tau", ev_tau, "Admission threshold on sim_to_gold")->capture_default_str();
  evaluate->add_option("--grid-step", ev_step, "Lambda grid step")->capture_default_str();
  evaluate->add_option("--seed", ev_seed, "Global random seed")->capture_default_str();
  evaluate->add_option("--threads", ev_threads, "Worker threads, 0 = all cores")->capture_default_str();
  evaluate->add_option("-o,--output", ev_out, "Per-trial CSV, '-' for stdout")->capture_default_str();
  evaluate->add_option("--summary", ev_summary, "Aggregate JSON (default: CSV path with .json extension)");

  // sweep-k
  std::string sw_records, sw_out = "-", sw_k_list;
  double sw_tau = 0.7;
  auto* sweep = app.add_subcommand("sweep-k", "alpha_l and attainability as a function of the sampling budget");
  sweep->add_option("-r,--records", sw_records, "Record file (JSONL)")->required();
  sweep->add_option("--k-list", sw_k_list, "Comma-separated budgets (default: 1..min K)");
  sweep->add_option("--tau", sw_tau, "Admission threshold on sim_to_gold")->capture_default_str();
  sweep->add_option("-o,--output", sw_out, "Output CSV, '-' for stdout")->capture_default_str();

  // baseline
  std::string bl_records, bl_out = "-";
  std::vector<double> bl_tau{0.7};
  auto* baseline = app.add_subcommand("baseline", "MLG point-prediction accuracy versus pool attainability");
  baseline->add_option("-r,--records", bl_records, "Record file with mlg answers (JSONL)")->required();
  baseline->add_option("--tau", bl_tau, "Admission threshold(s); repeat for several")->capture_default_str();
  baseline->add_option("-o,--output", bl_out, "Output JSON, '-' for stdout")->capture_default_str();

  // simulate
  setcal::OracleConfig sim;
  std::string sim_mode = "prescored-beta", sim_out = "-", sim_beta_adm = "5,2", sim_beta_inadm = "2,5";
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic exchangeable records");
  simulate->add_option("--n", sim.n_records, "Number of records")->capture_default_str();
  simulate->add_option("--k", sim.k, "Candidates per record")->capture_default_str();
  simulate->add_option("--p-adm", sim.p_adm, "Per-candidate admission probability")->capture_default_str();
  simulate->add_option("--mode", sim_mode, "prescored-beta or full-feature")
      ->check(CLI::IsMember({"prescored-beta", "full-feature"}))
      ->capture_default_str();
  simulate->add_option("--beta-adm", sim_beta_adm, "Beta shape a,b of admissible scores")->capture_default_str();
  simulate->add_option("--beta-inadm", sim_beta_inadm, "Beta shape a,b of inadmissible scores")->capture_default_str();
  simulate->add_option("--noise", sim.noise, "Similarity jitter half-width (full-feature)")->capture_default_str();
  simulate->add_option("--difficulty", sim.difficulty_concentration,
                       "Per-record admission probability ~ Beta with this concentration (0 = off)")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("-o,--out", sim_out, "Output record file, '-' for stdout")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*score) {
      scoring.use_consensus = !no_consensus;
      scoring.use_uncertainty = !no_uncertainty;
      scoring.use_consistency = !no_consistency;
      auto records = setcal::load_records(score_records);
      for (auto& r : records) {
        const bool prescored = r.fully_scored() && !r.sim_matrix && !r.entail_matrix;
        if (!prescored) r = setcal::score_record(r, scoring);
      }
      write_output(score_out, dump_records(records));
    } else if (*calibrate) {
      const auto records = setcal::load_records(cal_records);
      const setcal::LambdaGrid grid(cal_step);
      const auto outcome = setcal::calibrate_threshold(records, cal_alpha, grid, {cal_tau});
      write_output(cal_out, setcal::outcome_to_json(outcome).dump(2) + "\n");
    } else if (*evaluate) {
      const auto records = setcal::load_records(ev_records);
      setcal::EvalConfig cfg;
      cfg.alpha_grid = parse_alpha_grid(ev_alpha_grid);
      cfg.trials = ev_splits;
      cfg.split_ratio = ev_ratio;
      cfg.seed = ev_seed;
      cfg.admission.tau = ev_tau;
      cfg.dedup_threshold = ev_dedup;
      cfg.lambda_grid = setcal::LambdaGrid(ev_step);
      cfg.threads = ev_threads;
      const auto report = setcal::evaluate(records, cfg);
      std::ostringstream csv;
      setcal::write_report_csv(csv, report);
      write_output(ev_out, csv.str());
      const std::string summary = ev_summary.empty() ? default_summary_path(ev_out) : ev_summary;
      if (!summary.empty()) {
        write_output(summary, setcal::report_summary_json(report, cfg).dump(2) + "\n");
      }
    } else if (*sweep) {
      const auto records = setcal::load_records(sw_records);
      if (records.empty()) throw setcal::DataError("record file is empty");
      std::vector<std::size_t> ks;
      if (sw_k_list.empty()) {
        std::size_t min_k = records.front().budget();
        for (const auto& r : records) min_k = std::min(min_k, r.budget());
        for (std::size_t k = 1; k <= min_k; ++k) ks.push_back(k);
      } else {
        ks = parse_k_list(sw_k_list);
      }
      const auto curve = setcal::sweep_budget(records, {sw_tau}, ks);
      std::ostringstream csv;
      csv << "k,alpha_l,attainability\n";
      for (const auto& [k, point] : curve) {
        csv << k << ',' << setcal::format_fixed6(point.alpha_l) << ','
            << setcal::format_fixed6(point.attainability) << '\n';
      }
      write_output(sw_out, csv.str());
    } else if (*baseline) {
      const auto records = setcal::load_records(bl_records);
      nlohmann::json results = nlohmann::json::array();
      for (double tau : bl_tau) {
        const auto b = setcal::mlg_baseline(records, {tau});
        results.push_back({{"tau", tau},
                           {"mlg_accuracy", b.mlg_accuracy},
                           {"attainability", b.attainability}});
      }
      const nlohmann::json out = results.size() == 1 ? results[0] : results;
      write_output(bl_out, out.dump(2) + "\n");
    } else if (*simulate) {
      sim.score_model = sim_mode == "full-feature" ? setcal::ScoreModel::kFullFeature
                                                   : setcal::ScoreModel::kPrescoredBeta;
      sim.beta_adm = parse_beta(sim_beta_adm);
      sim.beta_inadm = parse_beta(sim_beta_inadm);
      write_output(sim_out, dump_records(setcal::generate(sim)));
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const setcal::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const setcal::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
