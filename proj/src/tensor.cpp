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

#include "parrot/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "parrot/errors.hpp"

namespace parrot {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

ConstMap view(const Tensor2& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

Map view(Tensor2& t) {
  return Map(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

std::string shape_of(const Tensor2& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::io: return "io";
    case FormatErrorKind::empty_file: return "empty_file";
    case FormatErrorKind::malformed_header: return "malformed_header";
    case FormatErrorKind::ragged_row: return "ragged_row";
    case FormatErrorKind::bad_number: return "bad_number";
    case FormatErrorKind::non_finite: return "non_finite";
    case FormatErrorKind::duplicate_id: return "duplicate_id";
    case FormatErrorKind::unknown_label: return "unknown_label";
    case FormatErrorKind::bad_magic: return "bad_magic";
    case FormatErrorKind::unsupported_version: return "unsupported_version";
    case FormatErrorKind::truncated: return "truncated";
  }
  return "unknown";
}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw ShapeError("ragged initializer rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor2(n, m, std::move(values));
}

void Tensor2::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor2::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor2::require_finite(std::string_view where) const {
  if (!all_finite()) throw NumericError("non-finite value produced by " + std::string(where));
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b, bool transpose_a, bool transpose_b) {
  const std::size_t rows = transpose_a ? a.cols() : a.rows();
  const std::size_t cols = transpose_b ? b.rows() : b.cols();
  Tensor2 c(rows, cols);
  matmul_accumulate(a, b, c, transpose_a, transpose_b);
  return c;
}

void matmul_accumulate(const Tensor2& a, const Tensor2& b, Tensor2& c, bool transpose_a,
                       bool transpose_b) {
  const std::size_t rows = transpose_a ? a.cols() : a.rows();
  const std::size_t inner_a = transpose_a ? a.rows() : a.cols();
  const std::size_t inner_b = transpose_b ? b.cols() : b.rows();
  const std::size_t cols = transpose_b ? b.rows() : b.cols();
  if (inner_a != inner_b || c.rows() != rows || c.cols() != cols) {
    throw ShapeError("matmul shape mismatch: " + shape_of(a) + (transpose_a ? "^T" : "") +
                     " * " + shape_of(b) + (transpose_b ? "^T" : "") + " -> " + shape_of(c));
  }
  if (rows == 0 || cols == 0 || inner_a == 0) return;
  auto out = view(c);
  const auto lhs = view(a);
  const auto rhs = view(b);
  if (transpose_a && transpose_b) {
    out.noalias() += lhs.transpose() * rhs.transpose();
  } else if (transpose_a) {
    out.noalias() += lhs.transpose() * rhs;
  } else if (transpose_b) {
    out.noalias() += lhs * rhs.transpose();
  } else {
    out.noalias() += lhs * rhs;
  }
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  }
  return t;
}

Tensor2 hadamard(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("hadamard shape mismatch: " + shape_of(a) + " vs " + shape_of(b));
  }
  Tensor2 out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

Tensor2 hconcat(std::initializer_list<const Tensor2*> parts) {
  if (parts.size() == 0) return {};
  const std::size_t rows = (*parts.begin())->rows();
  std::size_t cols = 0;
  for (const Tensor2* p : parts) {
    if (p->rows() != rows) throw ShapeError("hconcat row mismatch");
    cols += p->cols();
  }
  Tensor2 out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.row(r).data();
    for (const Tensor2* p : parts) {
      const auto src = p->row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

Tensor2 column_block(const Tensor2& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) throw ShapeError("column block out of range");
  Tensor2 out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto src = a.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Tensor2 gather_rows(const Tensor2& a, std::span<const std::size_t> indices) {
  Tensor2 out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) throw ShapeError("row index out of range");
    const auto src = a.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void add_inplace(Tensor2& dst, const Tensor2& src) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
    throw ShapeError("add shape mismatch: " + shape_of(dst) + " vs " + shape_of(src));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

double max_abs(const Tensor2& a) noexcept {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace parrot
