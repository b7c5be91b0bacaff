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

// Random fixtures shared by the property suites and the acceptance binary.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "setcal/record.hpp"

namespace setcal::testing {

// Scores mix grid-aligned values (to hit the closed f >= 1 - lambda
// boundary) and continuous draws.
inline double random_score(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (rng() % 2 == 0) return static_cast<double>(rng() % 101) / 100.0;
  return unit(rng);
}

inline CandidateRecord random_record(std::mt19937_64& rng, std::size_t k, std::string id = "f") {
  CandidateRecord r;
  r.id = std::move(id);
  for (std::size_t j = 0; j < k; ++j) {
    // Similarities on a 0.1 lattice so tau comparisons hit ties.
    r.candidates.push_back({"", 0.0, static_cast<double>(rng() % 11) / 10.0, random_score(rng)});
  }
  return r;
}

inline std::vector<CandidateRecord> random_records(std::mt19937_64& rng, std::size_t n,
                                                   std::size_t k) {
  std::vector<CandidateRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_record(rng, k, "f" + std::to_string(i)));
  return out;
}

}  // namespace setcal::testing
