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
#include <vector>

#include "parrot/data.hpp"
#include "parrot/fusion.hpp"
#include "parrot/ot.hpp"

namespace parrot::train {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::size_t patience = 7;
  double min_delta = 1e-4;
  /// Share of the training folds held back as the early-stopping signal.
  double validation_fraction = 0.1;
  double dropout = 0.2;
  ot::SinkhornConfig sinkhorn;
  std::uint64_t seed = 0;
  fusion::FusionKind fusion = fusion::FusionKind::parrot;
};

/// Throws ParameterError for non-positive sizes or out-of-range rates.
void validate(const TrainConfig& config);

using Confusion = std::vector<std::vector<std::size_t>>;  // [truth][prediction]

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  Confusion confusion;
};

/// Accuracy, macro-F1 and confusion matrix. Classes with no true and no
/// predicted samples are left out of the macro average.
Metrics metrics(std::span<const int> truth, std::span<const int> predicted, std::size_t classes);

/// Tracks the best validation loss; stop once `patience` epochs pass without
/// improving on it by more than `min_delta`.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_delta);

  /// Returns true when `loss` is a new best.
  bool update(std::size_t epoch, double loss);
  bool should_stop() const noexcept { return patience_ > 0 && stale_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_loss_;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
};

struct EpochLog {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct FoldReport {
  std::size_t fold_index = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  Confusion confusion;
  std::size_t epochs_ran = 0;
  std::size_t best_epoch = 0;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
  std::size_t test_size = 0;
  std::vector<EpochLog> history;
};

struct FoldResult {
  fusion::FusionModel model;
  FoldReport report;
};

/// Seed of the fold assignment used by cross_validate.
std::uint64_t fold_split_seed(std::uint64_t seed);

/// Model config for a paired dataset under a training config.
fusion::ModelConfig model_config(const data::PairedDataset& data, const TrainConfig& config,
                                 std::uint64_t model_seed);

/// Trains on `train_rows` (minus an early-stopping holdout), restores the
/// best-validation parameters, and scores `test_rows`. Seeds derive from
/// (config.seed, fold_index). Empty `test_rows` yields a report without metrics.
FoldResult train_one_fold(const data::PairedDataset& data, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> test_rows, const TrainConfig& config,
                          std::size_t fold_index);

/// Batched inference over `rows` in the given order (OT plans are per batch).
struct Predictions {
  std::vector<int> labels;
  Tensor2 penultimate;
  double loss = 0.0;
};
Predictions predict(const fusion::FusionModel& model, const data::PairedDataset& data,
                    std::span<const std::size_t> rows, std::size_t batch_size);

struct ExperimentReport {
  TrainConfig config;
  std::size_t folds_requested = 0;
  std::string ptm_p;
  std::string ptm_q;
  std::size_t dim_p = 0;
  std::size_t dim_q = 0;
  std::size_t samples = 0;
  std::vector<std::string> class_names;
  std::vector<FoldReport> folds;
  double mean_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  Confusion confusion_total;
  std::size_t parameter_count = 0;
  double wall_seconds = 0.0;  // not serialized
};

/// Stratified k-fold training and evaluation. `jobs` > 1 runs folds on
/// worker threads; the report does not depend on it.
ExperimentReport cross_validate(const data::PairedDataset& data, const TrainConfig& config,
                                std::size_t k, std::size_t jobs = 1);

inline constexpr int kReportSchemaVersion = 1;

std::string report_json(const ExperimentReport& report);
std::string folds_csv(const ExperimentReport& report);
std::string confusion_csv(const ExperimentReport& report);

/// Writes report.json, folds.csv and confusion.csv into `dir` (created if needed).
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

}  // namespace parrot::train
