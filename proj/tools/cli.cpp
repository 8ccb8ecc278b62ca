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

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>
#include <json.hpp>

#include "parrot/data.hpp"
#include "parrot/errors.hpp"
#include "parrot/fusion.hpp"
#include "parrot/ot.hpp"
#include "parrot/train.hpp"

namespace parrot::cli {
namespace {

namespace fs = std::filesystem;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string percent(double fraction) { return fmt("%.2f", 100.0 * fraction); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw FormatError(FormatErrorKind::io, "write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError(FormatErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Flag groups

struct DataFlags {
  std::string ptm_a;
  std::string ptm_b;

  void attach(CLI::App& app) {
    app.add_option("--ptm-a", ptm_a, "PFV file of the first PTM")->required();
    app.add_option("--ptm-b", ptm_b, "PFV file of the second PTM")->required();
  }

  data::PairedDataset load() const {
    return data::pair(data::load_feature_table(ptm_a), data::load_feature_table(ptm_b));
  }
};

struct TrainFlags {
  std::string fusion = "parrot";
  std::size_t epochs = 50;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  int sinkhorn_iters = 100;
  std::size_t patience = 7;
  double dropout = 0.2;

  void attach(CLI::App& app) {
    app.add_option("--fusion", fusion, "Fusion head: parrot, concat, single-a or single-b")
        ->check(CLI::IsMember({"parrot", "concat", "single-a", "single-b"}))
        ->capture_default_str();
    app.add_option("--epochs", epochs, "Maximum training epochs")->capture_default_str();
    app.add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app.add_option("--batch", batch, "Mini-batch size (also the OT coupling size)")
        ->capture_default_str();
    app.add_option("--seed", seed, "Base seed for splits, init, shuffling and dropout")
        ->envname("PARROT_SEED")
        ->capture_default_str();
    app.add_option("--epsilon", epsilon, "Sinkhorn entropic regularization")->capture_default_str();
    app.add_option("--sinkhorn-iters", sinkhorn_iters, "Sinkhorn iteration cap")
        ->capture_default_str();
    app.add_option("--patience", patience, "Early-stopping patience in epochs (0 disables)")
        ->capture_default_str();
    app.add_option("--dropout", dropout, "Dropout rate")->capture_default_str();
  }

  train::TrainConfig config() const {
    train::TrainConfig c;
    c.fusion = *fusion::parse_fusion_kind(fusion);
    c.epochs = epochs;
    c.lr = lr;
    c.batch_size = batch;
    c.seed = seed;
    c.sinkhorn.epsilon = epsilon;
    c.sinkhorn.max_iters = sinkhorn_iters;
    c.patience = patience;
    c.dropout = dropout;
    train::validate(c);
    return c;
  }
};

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
  std::size_t classes = 6;
  std::size_t per_class = 100;
  std::vector<std::size_t> dims{64, 96};
  double gap = 7.0;
  bool additive = false;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  if (f.classes < 2) throw ParameterError("--classes must be at least 2");
  data::SynthConfig sc;
  sc.classes = f.classes;
  sc.per_class = f.per_class;
  sc.dim_p = f.dims.at(0);
  sc.dim_q = f.dims.at(1);
  sc.gap = f.gap;
  sc.interaction = !f.additive;
  sc.seed = f.seed;
  auto [p, q] = data::synth_generate(sc);

  make_dir(f.out);
  const fs::path path_p = fs::path(f.out) / "synth-a.pfv";
  const fs::path path_q = fs::path(f.out) / "synth-b.pfv";
  data::write_feature_table(path_p, p);
  data::write_feature_table(path_q, q);
  out << "wrote " << path_p.string() << " (" << p.size() << " x " << p.dim() << ")\n";
  out << "wrote " << path_q.string() << " (" << q.size() << " x " << q.dim() << ")\n";
  std::vector<std::size_t> counts(p.classes(), 0);
  for (int label : p.labels) ++counts[static_cast<std::size_t>(label)];
  for (std::size_t c = 0; c < counts.size(); ++c) out << p.class_names[c] << " " << counts[c] << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cv

struct CvFlags {
  std::size_t folds = 5;
  std::size_t jobs = 1;
  std::string out;
};

int cmd_cv(const DataFlags& d, const TrainFlags& t, const CvFlags& f, std::ostream& out) {
  const train::TrainConfig config = t.config();
  if (f.folds < 2) throw ParameterError("--folds must be at least 2");
  if (f.jobs < 1) throw ParameterError("--jobs must be at least 1");
  const data::PairedDataset data = d.load();

  const auto start = std::chrono::steady_clock::now();
  train::ExperimentReport report = train::cross_validate(data, config, f.folds, f.jobs);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!f.out.empty()) train::write_report(f.out, report);

  out << "fusion " << fusion::to_string(config.fusion) << ", " << data.size() << " samples, "
      << data.classes() << " classes, " << report.parameter_count << " parameters\n";
  out << "fold    Acc(%)   F1(%)  epochs  best\n";
  char line[128];
  for (const auto& fold : report.folds) {
    std::snprintf(line, sizeof(line), "%-6zu %7.2f %7.2f  %6zu  %4zu\n", fold.fold_index,
                  100.0 * fold.accuracy, 100.0 * fold.macro_f1, fold.epochs_ran, fold.best_epoch);
    out << line;
  }
  std::snprintf(line, sizeof(line), "mean   %7.2f %7.2f\n", 100.0 * report.mean_accuracy,
                100.0 * report.mean_macro_f1);
  out << line;
  out << "wall time " << fmt("%.1f", report.wall_seconds) << " s\n";
  if (!f.out.empty()) out << "reports in " << f.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainOnlyFlags {
  std::size_t folds = 5;
  int test_fold = -1;
  std::string out;
};

int cmd_train(const DataFlags& d, const TrainFlags& t, const TrainOnlyFlags& f, std::ostream& out) {
  const train::TrainConfig config = t.config();
  if (f.test_fold >= 0 && f.folds < 2) throw ParameterError("--folds must be at least 2");
  if (f.test_fold >= 0 && static_cast<std::size_t>(f.test_fold) >= f.folds) {
    throw ParameterError("--test-fold must be below --folds");
  }
  const data::PairedDataset data = d.load();
  make_dir(f.out);

  std::vector<std::size_t> train_rows(data.size());
  std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
  std::vector<std::size_t> test_rows;
  std::size_t fold_index = 0;
  if (f.test_fold >= 0) {
    fold_index = static_cast<std::size_t>(f.test_fold);
    const data::FoldPlan plan =
        data::stratified_kfold(data.labels(), data.classes(), f.folds, train::fold_split_seed(config.seed));
    train_rows = plan.train_indices(fold_index);
    test_rows = plan.test_indices(fold_index);
  }

  const train::FoldResult result = train::train_one_fold(data, train_rows, test_rows, config, fold_index);
  const fs::path ckpt = fs::path(f.out) / "model.ckpt";
  fusion::save_checkpoint(ckpt, result.model, data.p.class_names, data.p.ptm_name, data.q.ptm_name);
  out << "trained " << result.report.epochs_ran << " epochs, best epoch " << result.report.best_epoch
      << " on " << result.report.train_size << " samples (" << result.report.validation_size
      << " held for early stopping)\n";
  out << "wrote " << ckpt.string() << "\n";

  if (!test_rows.empty()) {
    const auto dump = [&](const std::vector<std::size_t>& rows, const char* tag) {
      const data::PairedDataset part = data::subset(data, rows);
      const fs::path a = fs::path(f.out) / (std::string(tag) + "-a.pfv");
      const fs::path b = fs::path(f.out) / (std::string(tag) + "-b.pfv");
      data::write_feature_table(a, part.p);
      data::write_feature_table(b, part.q);
      out << "wrote " << a.string() << " and " << b.string() << "\n";
    };
    dump(train_rows, "train");
    dump(test_rows, "test");
    out << "fold " << fold_index << " test Acc " << percent(result.report.accuracy) << "% F1 "
        << percent(result.report.macro_f1) << "%\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalFlags {
  std::string checkpoint;
  std::size_t batch = 32;
  std::string out;
  bool export_penultimate = false;
};

int cmd_eval(const DataFlags& d, const EvalFlags& f, std::ostream& out) {
  if (f.batch == 0) throw ParameterError("--batch must be positive");
  if (f.export_penultimate && f.out.empty()) {
    throw ParameterError("--export-penultimate needs --out");
  }
  const fusion::Checkpoint ckpt = fusion::read_checkpoint(f.checkpoint);
  const data::PairedDataset data = d.load();
  if (data.p.dim() != ckpt.config.dim_p) {
    throw ShapeError("dimension mismatch: checkpoint expects dim_a = " +
                     std::to_string(ckpt.config.dim_p) + ", --ptm-a has " + std::to_string(data.p.dim()));
  }
  if (data.q.dim() != ckpt.config.dim_q) {
    throw ShapeError("dimension mismatch: checkpoint expects dim_b = " +
                     std::to_string(ckpt.config.dim_q) + ", --ptm-b has " + std::to_string(data.q.dim()));
  }
  if (data.p.class_names != ckpt.class_names) {
    throw AlignmentError("class labels of --ptm-a differ from the checkpoint's");
  }
  const fusion::FusionModel model = fusion::model_from_checkpoint(ckpt);

  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const train::Predictions pred = train::predict(model, data, rows, f.batch);
  const std::vector<int> truth(data.labels().begin(), data.labels().end());
  const train::Metrics m = train::metrics(truth, pred.labels, data.classes());

  out << "samples " << data.size() << ", Acc " << percent(m.accuracy) << "%, F1 "
      << percent(m.macro_f1) << "%, loss " << fmt("%.4f", pred.loss) << "\n";
  if (f.out.empty()) return kExitOk;

  make_dir(f.out);
  nlohmann::ordered_json j;
  j["checkpoint"] = fs::path(f.checkpoint).filename().string();
  j["samples"] = data.size();
  j["accuracy"] = m.accuracy;
  j["macro_f1"] = m.macro_f1;
  j["loss"] = pred.loss;
  j["classes"] = data.p.class_names;
  j["confusion"] = m.confusion;
  write_text(fs::path(f.out) / "eval.json", j.dump(2) + "\n");
  out << "wrote " << (fs::path(f.out) / "eval.json").string() << "\n";

  if (f.export_penultimate) {
    std::string csv = "id,label";
    for (std::size_t c = 0; c < pred.penultimate.cols(); ++c) csv += ",h" + std::to_string(c);
    csv += "\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
      csv += data.ids()[r] + "," + data.p.class_names[static_cast<std::size_t>(data.labels()[r])];
      for (double v : pred.penultimate.row(r)) csv += "," + shortest(v);
      csv += "\n";
    }
    const fs::path path = fs::path(f.out) / "penultimate.csv";
    write_text(path, csv);
    out << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectFlags {
  std::string checkpoint;
  bool pairings = false;
  std::size_t classes = 6;
};

int cmd_inspect(const InspectFlags& f, std::ostream& out) {
  if (f.checkpoint.empty() && !f.pairings) {
    throw ParameterError("inspect needs --checkpoint or --pairings");
  }
  if (f.pairings) {
    if (f.classes < 2) throw ParameterError("--classes must be at least 2");
    struct Ptm {
      const char* name;
      std::size_t dim;
    };
    const Ptm mamba[] = {{"A(T)", 960}, {"A(S)", 1920}, {"A(B)", 3840}};
    const Ptm attention[] = {{"W", 768}, {"H", 768}, {"W2", 768}, {"U", 768}, {"M", 1280}};
    const auto row = [&](const Ptm& a, const Ptm& b) {
      fusion::ModelConfig mc;
      mc.dim_p = a.dim;
      mc.dim_q = b.dim;
      mc.classes = f.classes;
      const std::size_t parrot_count = fusion::parameter_count(mc);
      mc.kind = fusion::FusionKind::concat;
      char line[128];
      std::snprintf(line, sizeof(line), "%-5s %-5s %5zu %5zu %12zu %12zu\n", a.name, b.name, a.dim,
                    b.dim, parrot_count, fusion::parameter_count(mc));
      out << line;
    };
    out << "a     b      dim_a dim_b  parrot       concat\n";
    for (const auto& a : mamba) {
      for (const auto& b : attention) row(a, b);
    }
    for (std::size_t i = 0; i < std::size(attention); ++i) {
      for (std::size_t j = i + 1; j < std::size(attention); ++j) row(attention[i], attention[j]);
    }
  }
  if (!f.checkpoint.empty()) {
    const fusion::Checkpoint ckpt = fusion::read_checkpoint(f.checkpoint);
    const auto& c = ckpt.config;
    out << "fusion " << fusion::to_string(c.kind) << "\n";
    out << "ptm_a " << ckpt.ptm_p << " (dim " << c.dim_p << ")\n";
    out << "ptm_b " << ckpt.ptm_q << " (dim " << c.dim_q << ")\n";
    out << "classes";
    for (const auto& name : ckpt.class_names) out << " " << name;
    out << "\n";
    out << "dropout " << shortest(c.dropout) << ", sinkhorn epsilon " << shortest(c.sinkhorn.epsilon)
        << " iters " << c.sinkhorn.max_iters << " tol " << shortest(c.sinkhorn.tol) << ", seed " << c.seed
        << "\n";
    std::size_t total = 0;
    for (const auto& p : ckpt.params) {
      out << "  " << p.name << " " << p.value.rows() << "x" << p.value.cols() << "\n";
      total += p.value.size();
    }
    out << "parameters " << total << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sinkhorn

struct SinkhornFlags {
  std::string cost;
  double epsilon = 0.1;
  int iters = 100;
  double tol = 1e-6;
};

Tensor2 read_cost_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      std::string_view cell = rest.substr(0, comma);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw FormatError(FormatErrorKind::bad_number, path.string() + ":" + std::to_string(line_no) +
                                                           ": not a number: '" + std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        throw FormatError(FormatErrorKind::non_finite,
                          path.string() + ":" + std::to_string(line_no) + ": non-finite cost");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(FormatErrorKind::ragged_row,
                        path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(FormatErrorKind::empty_file, path.string() + " has no rows");
  std::vector<double> flat;
  for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
  return Tensor2(rows.size(), rows.front().size(), std::move(flat));
}

int cmd_sinkhorn(const SinkhornFlags& f, std::ostream& out, std::ostream& err) {
  ot::SinkhornConfig config{f.epsilon, f.iters, f.tol};
  if (!(config.epsilon > 0.0)) throw ParameterError("--epsilon must be > 0");
  if (config.max_iters < 0) throw ParameterError("--iters must be >= 0");
  if (!(config.tol >= 0.0)) throw ParameterError("--tol must be >= 0");
  const Tensor2 cost = read_cost_csv(f.cost);
  const ot::TransportPlan plan = ot::sinkhorn(cost, config);

  out << "gamma " << plan.gamma.rows() << "x" << plan.gamma.cols() << "\n";
  for (std::size_t r = 0; r < plan.gamma.rows(); ++r) {
    for (std::size_t c = 0; c < plan.gamma.cols(); ++c) {
      out << (c ? " " : "") << fmt("%.6g", plan.gamma(r, c));
    }
    out << "\n";
  }
  out << "iterations " << plan.iterations_used << "\n";
  out << "marginal error " << fmt("%.2g", plan.error.max()) << " (rows " << fmt("%.2g", plan.error.rows)
      << ", cols " << fmt("%.2g", plan.error.cols) << ")\n";
  out << "converged " << (plan.converged ? "yes" : "no") << "\n";
  if (!plan.converged) {
    err << "error: sinkhorn did not converge within " << config.max_iters << " iterations\n";
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fusion of paired speech-PTM embeddings with optimal transport and Hadamard product",
               args.empty() ? "parrot" : args.front()};
  app.require_subcommand(1);
  app.set_version_flag("--version", "parrot 0.1.0");

  SynthFlags synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a seeded pair of complementary synthetic PFV files");
  synth_cmd->add_option("--classes", synth.classes, "Number of classes (at least 2)")->capture_default_str();
  synth_cmd->add_option("--per-class", synth.per_class, "Samples per class")->capture_default_str();
  synth_cmd->add_option("--dims", synth.dims, "Embedding dims of the two tables, e.g. 64,96")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
  synth_cmd->add_option("--gap", synth.gap, "Class centroid separation in noise sigmas")
      ->capture_default_str();
  synth_cmd->add_flag("--additive", synth.additive,
                      "Put the whole parity cue in the second table (no cross-table sign)");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->envname("PARROT_SEED")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();

  DataFlags train_data;
  TrainFlags train_flags;
  TrainOnlyFlags train_only;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one model and write a checkpoint");
  train_data.attach(*train_cmd);
  train_flags.attach(*train_cmd);
  train_cmd->add_option("--folds", train_only.folds, "Fold count used with --test-fold")
      ->capture_default_str();
  train_cmd->add_option("--test-fold", train_only.test_fold,
                        "Hold out this fold and write train/test PFV subsets");
  train_cmd->add_option("--out", train_only.out, "Output directory")->required();

  DataFlags cv_data;
  TrainFlags cv_flags;
  CvFlags cv;
  CLI::App* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation with reports");
  cv_data.attach(*cv_cmd);
  cv_flags.attach(*cv_cmd);
  cv_cmd->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--jobs", cv.jobs, "Folds trained in parallel")->capture_default_str();
  cv_cmd->add_option("--out", cv.out, "Directory for report.json, folds.csv and confusion.csv");

  DataFlags eval_data;
  EvalFlags eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a PFV pair");
  eval_data.attach(*eval_cmd);
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint written by train")->required();
  eval_cmd->add_option("--batch", eval.batch, "Inference batch size (also the OT coupling size)")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Directory for eval.json and penultimate.csv");
  eval_cmd->add_flag("--export-penultimate", eval.export_penultimate,
                     "Also write the 128-unit penultimate activations as CSV");

  InspectFlags inspect;
  CLI::App* inspect_cmd = app.add_subcommand("inspect", "Describe a checkpoint or list parameter counts");
  inspect_cmd->add_option("--checkpoint", inspect.checkpoint, "Checkpoint to describe");
  inspect_cmd->add_flag("--pairings", inspect.pairings,
                        "Print trainable-parameter counts for the reference PTM pairings");
  inspect_cmd->add_option("--classes", inspect.classes, "Class count for --pairings")->capture_default_str();

  SinkhornFlags sink;
  CLI::App* sink_cmd = app.add_subcommand("sinkhorn", "Solve entropic OT for a cost matrix CSV");
  sink_cmd->add_option("--cost", sink.cost, "Cost matrix CSV, one row per line")->required();
  sink_cmd->add_option("--epsilon", sink.epsilon, "Entropic regularization")->capture_default_str();
  sink_cmd->add_option("--iters,--sinkhorn-iters", sink.iters, "Iteration cap")->capture_default_str();
  sink_cmd->add_option("--tol", sink.tol, "Marginal tolerance (0 runs every iteration)")
      ->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("parrot");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth, out);
    if (train_cmd->parsed()) return cmd_train(train_data, train_flags, train_only, out);
    if (cv_cmd->parsed()) return cmd_cv(cv_data, cv_flags, cv, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_data, eval, out);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect, out);
    if (sink_cmd->parsed()) return cmd_sinkhorn(sink, out, err);
  } catch (const ParameterError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace parrot::cli
