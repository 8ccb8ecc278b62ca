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

#include "parrot/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "parrot/errors.hpp"
#include "parrot/seed.hpp"

namespace parrot::data {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double parse_value(std::string_view token, std::string_view where) {
  std::string_view t = token;
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  const std::string low = lower(t.substr(t.empty() || t.front() != '-' ? 0 : 1));
  if (low.starts_with("nan") || low.starts_with("inf")) {
    throw FormatError(FormatErrorKind::non_finite,
                      std::string(where) + ": value '" + std::string(token) + "'");
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    if (ec == std::errc::result_out_of_range) {
      throw FormatError(FormatErrorKind::non_finite,
                        std::string(where) + ": value '" + std::string(token) + "' overflows");
    }
    throw FormatError(FormatErrorKind::bad_number,
                      std::string(where) + ": cannot parse '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) {
    throw FormatError(FormatErrorKind::non_finite,
                      std::string(where) + ": value '" + std::string(token) + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

bool valid_name(std::string_view s) {
  return !s.empty() && s.find_first_of(",;\n\r") == std::string_view::npos;
}

}  // namespace

void validate(const FeatureTable& t) {
  if (t.size() == 0) throw FormatError(FormatErrorKind::empty_file, "table has no rows");
  if (t.labels.size() != t.size() || t.matrix.rows() != t.size()) {
    throw FormatError(FormatErrorKind::ragged_row, "row counts of ids/labels/matrix differ");
  }
  if (t.dim() == 0) throw FormatError(FormatErrorKind::malformed_header, "dim must be >= 1");
  if (t.class_names.empty()) throw FormatError(FormatErrorKind::malformed_header, "no labels");
  std::set<std::string> names;
  for (const auto& n : t.class_names) {
    if (!valid_name(n) || !names.insert(n).second) {
      throw FormatError(FormatErrorKind::malformed_header, "bad or repeated label name '" + n + "'");
    }
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!valid_name(t.ids[i])) {
      throw FormatError(FormatErrorKind::malformed_header, "bad utterance id '" + t.ids[i] + "'");
    }
    if (!seen.insert(t.ids[i]).second) {
      throw FormatError(FormatErrorKind::duplicate_id, "utterance id '" + t.ids[i] + "' repeated");
    }
    if (t.labels[i] < 0 || static_cast<std::size_t>(t.labels[i]) >= t.classes()) {
      throw FormatError(FormatErrorKind::unknown_label, "label id out of range for " + t.ids[i]);
    }
  }
  if (!t.matrix.all_finite()) throw FormatError(FormatErrorKind::non_finite, "matrix has NaN/Inf");
}

FeatureTable parse_pfv(std::string_view text, std::string_view source) {
  const std::string src(source);
  std::vector<std::string_view> lines = split(text, '\n');
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw FormatError(FormatErrorKind::empty_file, src + " is empty");

  // Header.
  FeatureTable t;
  const auto fields = split(lines.front(), ',');
  const auto bad_header = [&](const std::string& why) {
    return FormatError(FormatErrorKind::malformed_header, src + ": " + why);
  };
  if (fields.size() != 4 || fields[0] != "#PFV1") throw bad_header("expected '#PFV1,ptm=..,dim=..,labels=..'");
  const auto value_of = [&](std::string_view field, std::string_view key) {
    if (!field.starts_with(key) || field.size() < key.size() + 1 || field[key.size()] != '=') {
      throw bad_header("expected field '" + std::string(key) + "='");
    }
    return field.substr(key.size() + 1);
  };
  t.ptm_name = std::string(value_of(fields[1], "ptm"));
  if (t.ptm_name.empty()) throw bad_header("empty ptm name");
  const std::string_view dim_text = value_of(fields[2], "dim");
  std::size_t dim = 0;
  const auto [dim_end, dim_ec] =
      std::from_chars(dim_text.data(), dim_text.data() + dim_text.size(), dim);
  if (dim_ec != std::errc() || dim_end != dim_text.data() + dim_text.size() || dim == 0) {
    throw bad_header("dim must be a positive integer");
  }
  std::unordered_map<std::string, int> label_index;
  for (const auto name : split(value_of(fields[3], "labels"), ';')) {
    if (name.empty()) throw bad_header("empty label name");
    if (!label_index.emplace(std::string(name), static_cast<int>(t.class_names.size())).second) {
      throw bad_header("label '" + std::string(name) + "' listed twice");
    }
    t.class_names.emplace_back(name);
  }

  // Rows.
  std::vector<double> values;
  std::unordered_set<std::string> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const std::string where = src + ":" + std::to_string(ln + 1);
    const auto cells = split(lines[ln], ',');
    if (cells.size() != dim + 2) {
      throw FormatError(FormatErrorKind::ragged_row,
                        where + ": expected " + std::to_string(dim + 2) + " cells, found " +
                            std::to_string(cells.size()));
    }
    std::string id(cells[0]);
    if (id.empty()) throw FormatError(FormatErrorKind::ragged_row, where + ": empty utterance id");
    if (!seen.insert(id).second) {
      throw FormatError(FormatErrorKind::duplicate_id, where + ": utterance id '" + id + "' repeated");
    }
    const auto label = label_index.find(std::string(cells[1]));
    if (label == label_index.end()) {
      throw FormatError(FormatErrorKind::unknown_label,
                        where + ": label '" + std::string(cells[1]) + "' not in header");
    }
    for (std::size_t c = 2; c < cells.size(); ++c) values.push_back(parse_value(cells[c], where));
    t.ids.push_back(std::move(id));
    t.labels.push_back(label->second);
  }
  if (t.ids.empty()) throw FormatError(FormatErrorKind::empty_file, src + " has no data rows");
  t.matrix = Tensor2(t.ids.size(), dim, std::move(values));
  return t;
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
  return parse_pfv(read_file(path), path.string());
}

std::string format_pfv(const FeatureTable& t) {
  validate(t);
  std::string out = "#PFV1,ptm=" + t.ptm_name + ",dim=" + std::to_string(t.dim()) + ",labels=";
  for (std::size_t i = 0; i < t.classes(); ++i) {
    if (i > 0) out += ';';
    out += t.class_names[i];
  }
  out += '\n';
  for (std::size_t r = 0; r < t.size(); ++r) {
    out += t.ids[r];
    out += ',';
    out += t.class_names[static_cast<std::size_t>(t.labels[r])];
    for (double v : t.matrix.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_feature_table(const std::filesystem::path& path, const FeatureTable& table) {
  const std::string text = format_pfv(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw FormatError(FormatErrorKind::io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Pairing

PairedDataset pair(FeatureTable p, FeatureTable q) {
  validate(p);
  validate(q);
  const std::set<std::string> names_p(p.class_names.begin(), p.class_names.end());
  const std::set<std::string> names_q(q.class_names.begin(), q.class_names.end());
  if (names_p != names_q) throw AlignmentError("the two tables declare different label sets");

  std::unordered_map<std::string, std::size_t> row_q;
  for (std::size_t i = 0; i < q.size(); ++i) row_q.emplace(q.ids[i], i);
  for (const auto& id : p.ids) {
    if (!row_q.contains(id)) {
      throw AlignmentError("utterance '" + id + "' is in " + p.ptm_name + " but not in " +
                           q.ptm_name);
    }
  }
  if (q.size() != p.size()) {
    const std::unordered_set<std::string> ids_p(p.ids.begin(), p.ids.end());
    for (const auto& id : q.ids) {
      if (!ids_p.contains(id)) {
        throw AlignmentError("utterance '" + id + "' is in " + q.ptm_name + " but not in " +
                             p.ptm_name);
      }
    }
  }

  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.ids[a] < p.ids[b]; });

  std::vector<std::size_t> order_q;
  order_q.reserve(order.size());
  for (std::size_t i : order) {
    const std::size_t j = row_q.at(p.ids[i]);
    if (p.class_names[static_cast<std::size_t>(p.labels[i])] !=
        q.class_names[static_cast<std::size_t>(q.labels[j])]) {
      throw AlignmentError("utterance '" + p.ids[i] + "' is labelled '" +
                           p.class_names[static_cast<std::size_t>(p.labels[i])] + "' in " +
                           p.ptm_name + " but '" +
                           q.class_names[static_cast<std::size_t>(q.labels[j])] + "' in " +
                           q.ptm_name);
    }
    order_q.push_back(j);
  }

  PairedDataset out;
  out.p.ptm_name = p.ptm_name;
  out.p.class_names = p.class_names;
  out.q.ptm_name = q.ptm_name;
  out.q.class_names = p.class_names;
  out.p.matrix = gather_rows(p.matrix, order);
  out.q.matrix = gather_rows(q.matrix, order_q);
  for (std::size_t i : order) {
    out.p.ids.push_back(p.ids[i]);
    out.p.labels.push_back(p.labels[i]);
  }
  out.q.ids = out.p.ids;
  out.q.labels = out.p.labels;
  return out;
}

PairedDataset subset(const PairedDataset& data, std::span<const std::size_t> indices) {
  PairedDataset out;
  for (auto [dst, src] : {std::pair{&out.p, &data.p}, std::pair{&out.q, &data.q}}) {
    dst->ptm_name = src->ptm_name;
    dst->class_names = src->class_names;
    dst->matrix = gather_rows(src->matrix, indices);
    for (std::size_t i : indices) {
      dst->ids.push_back(src->ids[i]);
      dst->labels.push_back(src->labels[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Folds

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (static_cast<std::size_t>(assignment[i]) == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (static_cast<std::size_t>(assignment[i]) != fold) out.push_back(i);
  }
  return out;
}

FoldPlan stratified_kfold(std::span<const int> labels, std::size_t classes, std::size_t k,
                          std::uint64_t seed) {
  if (k < 2) throw SplitError("k-fold needs k >= 2");
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw SplitError("label out of range in fold split");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (!by_class[c].empty() && by_class[c].size() < k) {
      throw SplitError("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                       " samples, fewer than k = " + std::to_string(k));
    }
  }
  FoldPlan plan{seed, k, std::vector<int>(labels.size(), -1)};
  std::mt19937_64 rng(derive_seed(seed, 0xf01d));
  // Rotating the starting fold per class keeps overall fold sizes balanced too.
  std::size_t offset = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t j = 0; j < members.size(); ++j) {
      plan.assignment[members[j]] = static_cast<int>((offset + j) % k);
    }
    offset = (offset + members.size()) % k;
  }
  return plan;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, std::span<const std::size_t> pool, double fraction,
    std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ParameterError("holdout fraction must be in [0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i : pool) by_class[labels[i]].push_back(i);
  std::mt19937_64 rng(derive_seed(seed, 0xba1));
  std::vector<std::size_t> kept;
  std::vector<std::size_t> held;
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
    take = std::min(take, members.size() > 1 ? members.size() - 1 : std::size_t{0});
    held.insert(held.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    kept.insert(kept.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  if (fraction > 0.0 && held.empty() && kept.size() > 1) {
    held.push_back(kept.back());
    kept.pop_back();
  }
  std::sort(kept.begin(), kept.end());
  std::sort(held.begin(), held.end());
  return {kept, held};
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

// Coordinates of blocks with the given parity (block width ~ dim / 8).
std::vector<std::size_t> block_support(std::size_t dim, std::size_t parity) {
  const std::size_t width = std::max<std::size_t>(1, dim / 8);
  std::vector<std::size_t> coords;
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i / width) % 2 == parity) coords.push_back(i);
  }
  return coords;
}

// `groups` centroids on `support`, pairwise distance exactly `gap` when the
// support is wide enough to hold orthonormal directions.
std::vector<std::vector<double>> centroids(std::size_t dim, std::span<const std::size_t> support,
                                           std::size_t groups, double gap,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<double> v(support.size());
    for (double& x : v) x = normal(rng);
    if (support.size() >= groups) {
      for (const auto& b : basis) {
        const double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<std::vector<double>> out(groups, std::vector<double>(dim, 0.0));
  const double scale = gap / std::sqrt(2.0);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < support.size(); ++i) out[g][support[i]] = scale * basis[g][i];
  }
  return out;
}

}  // namespace

std::pair<FeatureTable, FeatureTable> synth_generate(const SynthConfig& config) {
  if (config.classes < 2) throw ParameterError("synthetic data needs at least 2 classes");
  if (config.per_class == 0) throw ParameterError("per-class count must be positive");
  if (config.dim_p == 0 || config.dim_q == 0) throw ParameterError("dims must be positive");
  if (!(config.gap >= 0.0) || !std::isfinite(config.gap)) throw ParameterError("gap must be >= 0");

  const std::size_t k = config.classes;
  std::mt19937_64 rng(derive_seed(config.seed, 0x5e7));
  const auto support_p = block_support(config.dim_p, 0);
  auto support_q = block_support(config.dim_q, 1);
  if (support_q.empty()) support_q = block_support(config.dim_q, 0);
  const auto means_p = centroids(config.dim_p, support_p, (k + 1) / 2, config.gap, rng);
  const auto means_q = centroids(config.dim_q, support_q, config.interaction ? 3 : 2, config.gap, rng);

  const std::size_t n = k * config.per_class;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i / config.per_class);
  std::shuffle(labels.begin(), labels.end(), rng);

  FeatureTable p;
  FeatureTable q;
  p.ptm_name = "synth-a";
  q.ptm_name = "synth-b";
  for (std::size_t c = 0; c < k; ++c) p.class_names.push_back("class" + std::to_string(c));
  q.class_names = p.class_names;
  p.matrix = Tensor2(n, config.dim_p);
  q.matrix = Tensor2(n, config.dim_q);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution sign(0.5);
  const int width = static_cast<int>(std::to_string(n).size());
  for (std::size_t i = 0; i < n; ++i) {
    std::string digits = std::to_string(i);
    p.ids.push_back("utt" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
    p.labels.push_back(labels[i]);
    const auto c = static_cast<std::size_t>(labels[i]);
    if (!config.interaction) {
      for (std::size_t d = 0; d < config.dim_p; ++d) p.matrix(i, d) = means_p[c / 2][d] + noise(rng);
      for (std::size_t d = 0; d < config.dim_q; ++d) q.matrix(i, d) = means_q[c % 2][d] + noise(rng);
      continue;
    }
    // Quarter-strength direct parity cue plus the full-strength signed cue along
    // means_q[2] (length gap / sqrt(2), so the signed parities sit gap apart).
    const double z = sign(rng) ? 1.0 : -1.0;
    const double s = (c % 2 == 0 ? -1.0 : 1.0) * z * std::sqrt(0.5);
    for (std::size_t d = 0; d < config.dim_p; ++d) p.matrix(i, d) = z * means_p[c / 2][d] + noise(rng);
    for (std::size_t d = 0; d < config.dim_q; ++d) {
      q.matrix(i, d) = 0.25 * means_q[c % 2][d] + s * means_q[2][d] + noise(rng);
    }
  }
  q.ids = p.ids;
  q.labels = p.labels;
  return {std::move(p), std::move(q)};
}

// ---------------------------------------------------------------------------
// Batching

std::vector<std::vector<std::size_t>> batch_rows(std::span<const std::size_t> rows,
                                                 std::size_t batch_size, bool training,
                                                 std::uint64_t seed, std::size_t epoch) {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  std::vector<std::size_t> order(rows.begin(), rows.end());
  if (training) {
    std::mt19937_64 rng(derive_seed(seed, 0xe0c0000 + epoch));
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

Batch gather_batch(const PairedDataset& data, std::span<const std::size_t> rows) {
  Batch b;
  b.rows.assign(rows.begin(), rows.end());
  b.xp = gather_rows(data.p.matrix, rows);
  b.xq = gather_rows(data.q.matrix, rows);
  for (std::size_t i : rows) b.labels.push_back(data.p.labels[i]);
  return b;
}

}  // namespace parrot::data
