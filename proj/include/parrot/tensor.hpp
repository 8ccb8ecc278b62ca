// Copyright 2026 The parrot-fusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace parrot {

/// Dense row-major matrix of doubles. The only numeric container in the library.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  void fill(double value);
  bool all_finite() const noexcept;

  /// Throws NumericError naming `where` if any entry is NaN or Inf.
  void require_finite(std::string_view where) const;

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C = op(A) * op(B), op being identity or transpose.
Tensor2 matmul(const Tensor2& a, const Tensor2& b, bool transpose_a = false,
               bool transpose_b = false);

/// C += op(A) * op(B). C must already have the product's shape.
void matmul_accumulate(const Tensor2& a, const Tensor2& b, Tensor2& c, bool transpose_a = false,
                       bool transpose_b = false);

Tensor2 transpose(const Tensor2& a);
Tensor2 hadamard(const Tensor2& a, const Tensor2& b);

/// Horizontal concatenation; all parts must share a row count.
Tensor2 hconcat(std::initializer_list<const Tensor2*> parts);

/// Columns [begin, begin + count) of `a`.
Tensor2 column_block(const Tensor2& a, std::size_t begin, std::size_t count);

/// Rows of `a` picked by `indices`, in that order.
Tensor2 gather_rows(const Tensor2& a, std::span<const std::size_t> indices);

void add_inplace(Tensor2& dst, const Tensor2& src);
double max_abs(const Tensor2& a) noexcept;

}  // namespace parrot
