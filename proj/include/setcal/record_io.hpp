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

// Reading and writing the JSONL record format: one JSON object per line with
// fields `id`, `candidates`, and optional `sim_matrix`, `entail_matrix`,
// `mlg`, `clusters`. Unknown fields are ignored.

#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "setcal/errors.hpp"
#include "setcal/record.hpp"

namespace setcal {

// Values in [0, 1] may overshoot by this much (e.g. cross-encoder rounding)
// and are clamped back into range.
inline constexpr double kUnitIntervalSlack = 1e-9;

namespace detail {

inline double unit_value(const nlohmann::json& v, const std::string& what,
                         std::size_t line) {
  if (!v.is_number()) throw ParseError(what + " must be a number", line);
  const double x = v.get<double>();
  if (!(x >= -kUnitIntervalSlack && x <= 1.0 + kUnitIntervalSlack)) {
    throw RangeError(what + " = " + std::to_string(x) + " outside [0, 1]",
                     line);
  }
  return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

inline std::string string_field(const nlohmann::json& obj, const char* key,
                                std::size_t line, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw ParseError(std::string("missing field '") + key + "'", line);
    return {};
  }
  if (!it->is_string()) {
    throw ParseError(std::string("field '") + key + "' must be a string", line);
  }
  return it->get<std::string>();
}

inline Candidate parse_candidate(const nlohmann::json& obj,
                                 const std::string& where, std::size_t line,
                                 bool require_u_raw) {
  if (!obj.is_object()) throw ParseError(where + " must be an object", line);
  Candidate c;
  c.text = string_field(obj, "text", line, /*required=*/false);
  if (auto it = obj.find("u_raw"); it != obj.end()) {
    if (!it->is_number()) throw ParseError(where + ".u_raw must be a number", line);
    c.u_raw = it->get<double>();
  } else if (require_u_raw) {
    throw ParseError(where + " is missing 'u_raw'", line);
  }
  auto sim = obj.find("sim_to_gold");
  if (sim == obj.end()) throw ParseError(where + " is missing 'sim_to_gold'", line);
  c.sim_to_gold = unit_value(*sim, where + ".sim_to_gold", line);
  if (auto it = obj.find("f_score"); it != obj.end() && !it->is_null()) {
    c.f_score = unit_value(*it, where + ".f_score", line);
  }
  return c;
}

template <class T, class Convert>
SquareMatrix<T> parse_matrix(const nlohmann::json& v, const char* name,
                             std::size_t k, std::size_t line,
                             Convert convert) {
  if (!v.is_array()) {
    throw ParseError(std::string(name) + " must be an array of arrays", line);
  }
  if (v.size() != k) {
    throw SchemaError(std::string(name) + " has " + std::to_string(v.size()) +
                          " rows, expected " + std::to_string(k),
                      line);
  }
  SquareMatrix<T> m(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& row = v[i];
    if (!row.is_array()) {
      throw ParseError(std::string(name) + " rows must be arrays", line);
    }
    if (row.size() != k) {
      throw SchemaError(std::string(name) + " row " + std::to_string(i) +
                            " has " + std::to_string(row.size()) +
                            " entries, expected " + std::to_string(k),
                        line);
    }
    for (std::size_t j = 0; j < k; ++j) m(i, j) = convert(row[j]);
  }
  return m;
}

}  // namespace detail

// Parses one record from a JSON object. `line` is used only for messages.
inline CandidateRecord parse_record(const nlohmann::json& obj,
                                    std::size_t line = 0) {
  if (!obj.is_object()) throw ParseError("record must be a JSON object", line);
  CandidateRecord r;
  r.id = detail::string_field(obj, "id", line, /*required=*/true);

  auto cands = obj.find("candidates");
  if (cands == obj.end() || !cands->is_array()) {
    throw ParseError("'candidates' must be an array", line);
  }
  if (cands->empty()) throw SchemaError("'candidates' is empty", line);
  for (std::size_t j = 0; j < cands->size(); ++j) {
    const auto& c = (*cands)[j];
    const bool prescored = c.is_object() && c.contains("f_score");
    r.candidates.push_back(detail::parse_candidate(
        c, "candidates[" + std::to_string(j) + "]", line, !prescored));
  }
  const std::size_t k = r.candidates.size();

  if (auto it = obj.find("sim_matrix"); it != obj.end() && !it->is_null()) {
    r.sim_matrix = detail::parse_matrix<double>(
        *it, "sim_matrix", k, line, [line](const nlohmann::json& x) {
          return detail::unit_value(x, "sim_matrix entry", line);
        });
    symmetrize(*r.sim_matrix);
  }
  if (auto it = obj.find("entail_matrix"); it != obj.end() && !it->is_null()) {
    r.entail_matrix = detail::parse_matrix<bool>(
        *it, "entail_matrix", k, line, [line](const nlohmann::json& x) {
          if (!x.is_boolean()) {
            throw ParseError("entail_matrix entries must be booleans", line);
          }
          return x.get<bool>();
        });
    for (std::size_t i = 0; i < k; ++i) (*r.entail_matrix)(i, i) = true;
  }
  if (auto it = obj.find("mlg"); it != obj.end() && !it->is_null()) {
    r.mlg = detail::parse_candidate(*it, "mlg", line, /*require_u_raw=*/false);
  }
  if (auto it = obj.find("clusters"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != k) {
      throw SchemaError("'clusters' must be an array of length " +
                            std::to_string(k),
                        line);
    }
    std::vector<int> labels;
    for (const auto& x : *it) {
      if (!x.is_number_integer()) {
        throw ParseError("'clusters' entries must be integers", line);
      }
      labels.push_back(x.get<int>());
    }
    r.clusters = std::move(labels);
  }
  return r;
}

inline std::vector<CandidateRecord> load_records(std::istream& in) {
  std::vector<CandidateRecord> records;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    records.push_back(parse_record(obj, line));
  }
  return records;
}

inline std::vector<CandidateRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open record file '" + path + "'");
  return load_records(in);
}

inline nlohmann::json candidate_to_json(const Candidate& c) {
  nlohmann::json obj = {{"text", c.text},
                        {"u_raw", c.u_raw},
                        {"sim_to_gold", c.sim_to_gold}};
  if (c.f_score) obj["f_score"] = *c.f_score;
  return obj;
}

inline nlohmann::json record_to_json(const CandidateRecord& r) {
  nlohmann::json obj;
  obj["id"] = r.id;
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.candidates) cands.push_back(candidate_to_json(c));
  obj["candidates"] = std::move(cands);
  const std::size_t k = r.budget();
  if (r.sim_matrix) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < k; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < k; ++j) row.push_back((*r.sim_matrix)(i, j));
      rows.push_back(std::move(row));
    }
    obj["sim_matrix"] = std::move(rows);
  }
  if (r.entail_matrix) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < k; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < k; ++j) {
        row.push_back(static_cast<bool>((*r.entail_matrix)(i, j)));
      }
      rows.push_back(std::move(row));
    }
    obj["entail_matrix"] = std::move(rows);
  }
  if (r.mlg) obj["mlg"] = candidate_to_json(*r.mlg);
  if (r.clusters) obj["clusters"] = *r.clusters;
  return obj;
}

inline void write_records(std::ostream& out,
                          const std::vector<CandidateRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

}  // namespace setcal
