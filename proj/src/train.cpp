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

#include "parrot/train.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "parrot/errors.hpp"
#include "parrot/nn.hpp"
#include "parrot/seed.hpp"

namespace parrot::train {
namespace {

// Stream tags for derive_seed; fold-specific streams add the fold index.
constexpr std::uint64_t kFoldSplitStream = 0xf0;
constexpr std::uint64_t kModelStream = 100;
constexpr std::uint64_t kShuffleStream = 200;
constexpr std::uint64_t kHoldoutStream = 300;

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double max_abs_grad(const nn::ParamSet& params) {
  double m = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad.values()) m = std::max(m, std::isfinite(g) ? std::abs(g) : INFINITY);
  }
  return m;
}

int argmax_row(std::span<const double> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0)) throw ParameterError("learning rate must be > 0");
  if (c.batch_size == 0) throw ParameterError("batch size must be > 0");
  if (c.epochs == 0) throw ParameterError("epochs must be > 0");
  if (!(c.min_delta >= 0.0)) throw ParameterError("min_delta must be >= 0");
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
    throw ParameterError("validation fraction must be in [0, 1)");
  }
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ParameterError("dropout must be in [0, 1)");
  if (!(c.sinkhorn.epsilon > 0.0)) throw ParameterError("sinkhorn epsilon must be > 0");
  if (c.sinkhorn.max_iters < 0) throw ParameterError("sinkhorn iterations must be >= 0");
  if (!(c.sinkhorn.tol >= 0.0)) throw ParameterError("sinkhorn tol must be >= 0");
}

// ---------------------------------------------------------------------------
// Metrics

Metrics metrics(std::span<const int> truth, std::span<const int> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("metrics: " + std::to_string(truth.size()) + " truths vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  if (truth.empty()) throw ParameterError("metrics need at least one sample");
  Metrics m;
  m.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (truth[i] < 0 || predicted[i] < 0 || t >= classes || p >= classes) {
      throw ParameterError("metrics: label outside [0, " + std::to_string(classes) + ")");
    }
    ++m.confusion[t][p];
    if (t == p) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  double f1_sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t tp = m.confusion[c][c];
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t o = 0; o < classes; ++o) {
      row += m.confusion[c][o];
      col += m.confusion[o][c];
    }
    if (row == 0 && col == 0) continue;
    const double fp = static_cast<double>(col - tp);
    const double fn = static_cast<double>(row - tp);
    f1_sum += 2.0 * static_cast<double>(tp) / (2.0 * static_cast<double>(tp) + fp + fn);
    ++counted;
  }
  m.macro_f1 = f1_sum / static_cast<double>(counted);
  return m;
}

// ---------------------------------------------------------------------------
// Early stopping

EarlyStopping::EarlyStopping(std::size_t patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_loss_(std::numeric_limits<double>::infinity()) {}

bool EarlyStopping::update(std::size_t epoch, double loss) {
  if (loss < best_loss_ - min_delta_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

// ---------------------------------------------------------------------------
// Training

std::uint64_t fold_split_seed(std::uint64_t seed) { return derive_seed(seed, kFoldSplitStream); }

fusion::ModelConfig model_config(const data::PairedDataset& data, const TrainConfig& config,
                                 std::uint64_t model_seed) {
  fusion::ModelConfig mc;
  mc.kind = config.fusion;
  mc.dim_p = data.p.dim();
  mc.dim_q = data.q.dim();
  mc.classes = data.classes();
  mc.dropout = config.dropout;
  mc.sinkhorn = config.sinkhorn;
  mc.seed = model_seed;
  return mc;
}

Predictions predict(const fusion::FusionModel& model, const data::PairedDataset& data,
                    std::span<const std::size_t> rows, std::size_t batch_size) {
  Predictions out;
  out.penultimate = Tensor2(rows.size(), fusion::kHeadHidden);
  std::size_t next = 0;
  double loss_sum = 0.0;
  for (const auto& group : data::batch_rows(rows, batch_size, false, 0, 0)) {
    const data::Batch batch = data::gather_batch(data, group);
    const fusion::ForwardOutput fwd = model.infer(batch.xp, batch.xq);
    loss_sum += nn::softmax_xent(fwd.logits, batch.labels).loss * static_cast<double>(group.size());
    for (std::size_t r = 0; r < group.size(); ++r, ++next) {
      out.labels.push_back(argmax_row(fwd.logits.row(r)));
      const auto src = fwd.penultimate.row(r);
      std::copy(src.begin(), src.end(), out.penultimate.row(next).begin());
    }
  }
  out.loss = rows.empty() ? 0.0 : loss_sum / static_cast<double>(rows.size());
  return out;
}

FoldResult train_one_fold(const data::PairedDataset& data, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> test_rows, const TrainConfig& config,
                          std::size_t fold_index) {
  validate(config);
  if (train_rows.empty()) throw SplitError("fold " + std::to_string(fold_index) + " has no training rows");

  const auto [fit_rows, val_rows] =
      data::stratified_holdout(data.labels(), train_rows, config.validation_fraction,
                               derive_seed(config.seed, kHoldoutStream + fold_index));
  FoldResult result{
      fusion::FusionModel(model_config(data, config, derive_seed(config.seed, kModelStream + fold_index))),
      FoldReport{}};
  fusion::FusionModel& model = result.model;
  FoldReport& report = result.report;
  report.fold_index = fold_index;
  report.train_size = fit_rows.size();
  report.validation_size = val_rows.size();
  report.test_size = test_rows.size();

  const nn::AdamConfig adam{.lr = config.lr};
  EarlyStopping stopper(config.patience, config.min_delta);
  std::vector<Tensor2> best = model.params().snapshot();
  const std::uint64_t shuffle_seed = derive_seed(config.seed, kShuffleStream + fold_index);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto groups = data::batch_rows(fit_rows, config.batch_size, true, shuffle_seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < groups.size(); ++b) {
      const data::Batch batch = data::gather_batch(data, groups[b]);
      try {
        const fusion::ForwardOutput fwd =
            model.forward(batch.xp, batch.xq, fusion::ForwardOptions{.training = true});
        const nn::CrossEntropy ce = nn::softmax_xent(fwd.logits, batch.labels);
        model.backward(nn::softmax_xent_backward(ce.probs, batch.labels));
        loss_sum += ce.loss * static_cast<double>(groups[b].size());
        nn::adam_step(model.params(), adam);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + " (max |grad| = " +
                           num(max_abs_grad(model.params())) + "): " + e.what());
      }
    }
    report.epochs_ran = epoch;
    EpochLog log;
    log.train_loss = loss_sum / static_cast<double>(fit_rows.size());
    if (val_rows.empty()) {
      log.val_loss = std::numeric_limits<double>::quiet_NaN();
      report.history.push_back(log);
      report.best_epoch = epoch;
      best = model.params().snapshot();
      continue;
    }
    log.val_loss = predict(model, data, val_rows, config.batch_size).loss;
    report.history.push_back(log);
    if (stopper.update(epoch, log.val_loss)) {
      best = model.params().snapshot();
      report.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  model.params().restore(best);

  if (!test_rows.empty()) {
    const Predictions pred = predict(model, data, test_rows, config.batch_size);
    std::vector<int> truth;
    truth.reserve(test_rows.size());
    for (std::size_t i : test_rows) truth.push_back(data.labels()[i]);
    Metrics m = metrics(truth, pred.labels, data.classes());
    report.accuracy = m.accuracy;
    report.macro_f1 = m.macro_f1;
    report.confusion = std::move(m.confusion);
  }
  return result;
}

ExperimentReport cross_validate(const data::PairedDataset& data, const TrainConfig& config,
                                std::size_t k, std::size_t jobs) {
  validate(config);
  const data::FoldPlan plan =
      data::stratified_kfold(data.labels(), data.classes(), k, fold_split_seed(config.seed));

  ExperimentReport report;
  report.config = config;
  report.folds_requested = k;
  report.ptm_p = data.p.ptm_name;
  report.ptm_q = data.q.ptm_name;
  report.dim_p = data.p.dim();
  report.dim_q = data.q.dim();
  report.samples = data.size();
  report.class_names = data.p.class_names;
  report.parameter_count = fusion::parameter_count(model_config(data, config, 0));
  report.folds.resize(k);

  std::vector<std::exception_ptr> errors(k);
  auto run_fold = [&](std::size_t f) {
    try {
      const auto train_rows = plan.train_indices(f);
      const auto test_rows = plan.test_indices(f);
      report.folds[f] = train_one_fold(data, train_rows, test_rows, config, f).report;
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };
  if (jobs <= 1 || k == 1) {
    for (std::size_t f = 0; f < k; ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, k); ++w) {
      workers.emplace_back([&] {
        for (std::size_t f = next++; f < k; f = next++) run_fold(f);
      });
    }
    for (auto& t : workers) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::size_t classes = data.classes();
  report.confusion_total.assign(classes, std::vector<std::size_t>(classes, 0));
  for (const auto& fold : report.folds) {
    report.mean_accuracy += fold.accuracy;
    report.mean_macro_f1 += fold.macro_f1;
    for (std::size_t t = 0; t < classes; ++t) {
      for (std::size_t p = 0; p < classes; ++p) report.confusion_total[t][p] += fold.confusion[t][p];
    }
  }
  report.mean_accuracy /= static_cast<double>(k);
  report.mean_macro_f1 /= static_cast<double>(k);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

std::string report_json(const ExperimentReport& r) {
  using nlohmann::ordered_json;
  const TrainConfig& c = r.config;
  ordered_json j;
  j["schema"] = "parrot-experiment-report";
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = {
      {"fusion", fusion::to_string(c.fusion)},
      {"folds", r.folds_requested},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.lr},
      {"patience", c.patience},
      {"min_delta", c.min_delta},
      {"validation_fraction", c.validation_fraction},
      {"dropout", c.dropout},
      {"sinkhorn", {{"epsilon", c.sinkhorn.epsilon},
                    {"max_iters", c.sinkhorn.max_iters},
                    {"tol", c.sinkhorn.tol}}},
      {"seed", c.seed},
  };
  j["dataset"] = {
      {"ptm_a", r.ptm_p},   {"ptm_b", r.ptm_q},          {"dim_a", r.dim_p},
      {"dim_b", r.dim_q},   {"samples", r.samples},      {"classes", r.class_names},
  };
  j["parameter_count"] = r.parameter_count;
  ordered_json folds = ordered_json::array();
  for (const auto& f : r.folds) {
    ordered_json history = ordered_json::array();
    for (std::size_t e = 0; e < f.history.size(); ++e) {
      ordered_json h = {{"epoch", e + 1}, {"train_loss", f.history[e].train_loss}};
      h["val_loss"] = std::isfinite(f.history[e].val_loss) ? ordered_json(f.history[e].val_loss)
                                                           : ordered_json(nullptr);
      history.push_back(std::move(h));
    }
    folds.push_back({
        {"fold", f.fold_index},
        {"accuracy", f.accuracy},
        {"macro_f1", f.macro_f1},
        {"epochs_ran", f.epochs_ran},
        {"best_epoch", f.best_epoch},
        {"train_size", f.train_size},
        {"validation_size", f.validation_size},
        {"test_size", f.test_size},
        {"confusion", f.confusion},
        {"history", std::move(history)},
    });
  }
  j["folds"] = std::move(folds);
  j["mean_accuracy"] = r.mean_accuracy;
  j["mean_macro_f1"] = r.mean_macro_f1;
  j["confusion_total"] = r.confusion_total;
  return j.dump(2) + "\n";
}

std::string folds_csv(const ExperimentReport& r) {
  std::string out = "fold,accuracy,macro_f1,epochs_ran,best_epoch,test_size\n";
  for (const auto& f : r.folds) {
    out += std::to_string(f.fold_index) + "," + num(f.accuracy) + "," + num(f.macro_f1) + "," +
           std::to_string(f.epochs_ran) + "," + std::to_string(f.best_epoch) + "," +
           std::to_string(f.test_size) + "\n";
  }
  out += "mean," + num(r.mean_accuracy) + "," + num(r.mean_macro_f1) + ",,,\n";
  return out;
}

std::string confusion_csv(const ExperimentReport& r) {
  std::string out = "truth\\predicted";
  for (const auto& name : r.class_names) out += "," + name;
  out += "\n";
  for (std::size_t t = 0; t < r.confusion_total.size(); ++t) {
    out += r.class_names[t];
    for (std::size_t count : r.confusion_total[t]) out += "," + std::to_string(count);
    out += "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto write = [&](const char* name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrorKind::io, "cannot write " + path.string());
    out << text;
    if (!out) throw FormatError(FormatErrorKind::io, "write failed for " + path.string());
  };
  write("report.json", report_json(report));
  write("folds.csv", folds_csv(report));
  write("confusion.csv", confusion_csv(report));
}

}  // namespace parrot::train
