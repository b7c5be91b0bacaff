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
#include <initializer_list>
#include <vector>

#include "setcal/errors.hpp"

namespace setcal {

// Dense row-major square matrix. Small (K <= a few dozen) in practice.
template <class T>
class SquareMatrix {
 public:
  using value_type = T;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size, const T& fill = T{})
      : size_(size), data_(size * size, fill) {}

  SquareMatrix(std::initializer_list<std::initializer_list<T>> rows)
      : size_(rows.size()), data_() {
    data_.reserve(size_ * size_);
    for (const auto& row : rows) {
      if (row.size() != size_) {
        throw ArgumentError("SquareMatrix: initializer rows must be square");
      }
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t size() const { return size_; }

  decltype(auto) operator()(std::size_t row, std::size_t col) {
    return data_[row * size_ + col];
  }
  decltype(auto) operator()(std::size_t row, std::size_t col) const {
    return data_[row * size_ + col];
  }

  // Leading `k` x `k` block.
  SquareMatrix leading_block(std::size_t k) const {
    SquareMatrix out(k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) out(i, j) = (*this)(i, j);
    }
    return out;
  }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<T> data_;
};

using SimilarityMatrix = SquareMatrix<double>;
using EntailmentMatrix = SquareMatrix<bool>;

}  // namespace setcal
