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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parrot/tensor.hpp"

namespace parrot::data {

/// Pooled embeddings of one PTM over one dataset. Row i belongs to ids[i].
struct FeatureTable {
  std::string ptm_name;
  std::vector<std::string> class_names;
  std::vector<std::string> ids;
  std::vector<int> labels;
  Tensor2 matrix;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t dim() const noexcept { return matrix.cols(); }
  std::size_t classes() const noexcept { return class_names.size(); }
};

/// Checks the table invariants; throws FormatError describing the first violation.
void validate(const FeatureTable& table);

// PFV v1 text format:
//   #PFV1,ptm=<name>,dim=<D>,labels=<name;name;...>
//   <utterance_id>,<label_name>,<v0>,...,<v{D-1}>
// Floats are written in shortest round-trip form.
FeatureTable parse_pfv(std::string_view text, std::string_view source = "<memory>");
FeatureTable load_feature_table(const std::filesystem::path& path);
std::string format_pfv(const FeatureTable& table);
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table);

/// Two tables over the same utterances, rows sorted by utterance id.
/// Class ids follow the class order of the first table.
struct PairedDataset {
  FeatureTable p;
  FeatureTable q;

  std::size_t size() const noexcept { return p.size(); }
  std::size_t classes() const noexcept { return p.classes(); }
  std::span<const int> labels() const noexcept { return p.labels; }
  std::span<const std::string> ids() const noexcept { return p.ids; }
};

/// Throws AlignmentError naming the first offending utterance id.
PairedDataset pair(FeatureTable p, FeatureTable q);

/// Rows `indices` of both tables, in the given order.
PairedDataset subset(const PairedDataset& data, std::span<const std::size_t> indices);

/// Fold index in [0, k) for every sample.
struct FoldPlan {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::vector<int> assignment;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Per-class shuffled round-robin; per-class fold counts differ by at most one.
/// Throws SplitError when a class has fewer than k samples.
FoldPlan stratified_kfold(std::span<const int> labels, std::size_t classes, std::size_t k,
                          std::uint64_t seed);

/// Picks round(fraction * n_c) samples of every class c from `pool` (at least one
/// overall when fraction > 0). Returns {kept, held_out}, both in ascending order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, std::span<const std::size_t> pool, double fraction,
    std::uint64_t seed);

struct SynthConfig {
  std::size_t classes = 6;
  std::size_t per_class = 100;
  std::size_t dim_p = 64;
  std::size_t dim_q = 96;
  double gap = 7.0;  // centroid separation in units of the noise sigma
  std::uint64_t seed = 0;
  /// Hide the parity cue behind a per-sample sign shared by both tables.
  bool interaction = true;
};

/// Class-conditional Gaussian embeddings with complementary views: the first
/// table tells apart class pairs {0,1},{2,3},... on its even coordinate
/// blocks, the second tells even from odd classes on its odd coordinate
/// blocks. Only the two together identify every class.
///
/// With `interaction`, every sample draws a sign z = +-1 that flips its first
/// table centroid. The second table keeps a quarter-strength parity centroid and
/// adds z * (+-1 for even/odd) along a third direction, so most of the parity
/// signal is readable only from the product of the two views.
std::pair<FeatureTable, FeatureTable> synth_generate(const SynthConfig& config);

struct Batch {
  std::vector<std::size_t> rows;
  Tensor2 xp;
  Tensor2 xq;
  std::vector<int> labels;
};

/// Splits `rows` into consecutive groups of `batch_size`, keeping the final
/// partial group. Training shuffles with a stream derived from (seed, epoch);
/// evaluation keeps the given order.
std::vector<std::vector<std::size_t>> batch_rows(std::span<const std::size_t> rows,
                                                 std::size_t batch_size, bool training,
                                                 std::uint64_t seed, std::size_t epoch);

Batch gather_batch(const PairedDataset& data, std::span<const std::size_t> rows);

}  // namespace parrot::data
