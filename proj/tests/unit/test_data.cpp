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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "parrot/data.hpp"
#include "parrot/errors.hpp"

using namespace parrot;

namespace {

namespace fs = std::filesystem;

const char* kThreeRows =
    "#PFV1,ptm=wavlm,dim=4,labels=ang;hap\n"
    "u2,hap,0.5,-1,2e-3,4\n"
    "u1,ang,1,2,3,4\n"
    "u3,ang,0,0,0,0.25\n";

data::FeatureTable table(const std::string& ptm, const std::vector<std::string>& ids, const std::vector<int>& labels,
                         std::size_t dim, const std::vector<std::string>& classes = {"a", "b"}) {
  data::FeatureTable t;
  t.ptm_name = ptm;
  t.class_names = classes;
  t.ids = ids;
  t.labels = labels;
  t.matrix = Tensor2(ids.size(), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) t.matrix(i, d) = static_cast<double>(i * 10 + d);
  }
  return t;
}

std::vector<int> balanced_labels(std::size_t n, int classes) {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  return out;
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("parse a small table") {
    const auto t = data::parse_pfv(kThreeRows);
    CHECK(t.ptm_name == "wavlm");
    CHECK(t.size() == 3);
    CHECK(t.dim() == 4);
    CHECK(t.class_names == std::vector<std::string>{"ang", "hap"});
    CHECK(t.labels == std::vector<int>{1, 0, 0});
    CHECK(t.matrix(0, 2) == 2e-3);
    CHECK(t.matrix(2, 3) == 0.25);
  }

  TEST_CASE("broken files are rejected with the right kind") {
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(PARROT_TEST_DATA_DIR "/pfv_bad")) {
      const std::string name = entry.path().filename().string();
      const std::string kind = name.substr(0, name.find("__"));
      CAPTURE(name);
      try {
        data::load_feature_table(entry.path());
        FAIL("accepted");
      } catch (const FormatError& e) {
        CHECK(to_string(e.kind()) == kind);
      }
      ++seen;
    }
    CHECK(seen >= 10);
    CHECK_THROWS_AS(data::load_feature_table(PARROT_TEST_DATA_DIR "/no_such_file.pfv"), FormatError);
  }

  TEST_CASE("errors point at the offending line") {
    CHECK_THROWS_WITH_AS(data::parse_pfv("#PFV1,ptm=w,dim=1,labels=a\nu1,a,1\nu2,a,x\n", "f.pfv"),
                         doctest::Contains("f.pfv:3"), FormatError);
  }

  TEST_CASE("format then parse is the identity, and so is parse then format") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    data::FeatureTable t = table("x", {"b", "a", "c"}, {0, 1, 1}, 7);
    for (double& v : t.matrix.values()) v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    t.matrix(0, 0) = 0.1;
    t.matrix(1, 0) = -0.0;
    t.matrix(2, 0) = 5e-324;
    const std::string text = data::format_pfv(t);
    const auto back = data::parse_pfv(text);
    CHECK(back.matrix == t.matrix);
    CHECK(back.ids == t.ids);
    CHECK(back.labels == t.labels);
    CHECK(data::format_pfv(back) == text);
    CHECK(data::format_pfv(data::parse_pfv(kThreeRows)).size() > 0);
  }

  TEST_CASE("file round trip is byte identical") {
    const fs::path dir = fs::temp_directory_path() / "parrot_data_test";
    fs::create_directories(dir);
    data::SynthConfig sc;
    sc.per_class = 5;
    auto [p, q] = data::synth_generate(sc);
    data::write_feature_table(dir / "p.pfv", p);
    const auto loaded = data::load_feature_table(dir / "p.pfv");
    data::write_feature_table(dir / "p2.pfv", loaded);
    CHECK(data::format_pfv(loaded) == data::format_pfv(p));
    CHECK(loaded.matrix == p.matrix);
  }

  TEST_CASE("pairing aligns shuffled tables") {
    auto p = table("p", {"u3", "u1", "u2"}, {1, 0, 1}, 3);
    auto q = table("q", {"u2", "u3", "u1"}, {1, 1, 0}, 2);
    const auto d = data::pair(p, q);
    CHECK(std::vector<std::string>(d.ids().begin(), d.ids().end()) == std::vector<std::string>{"u1", "u2", "u3"});
    CHECK(std::vector<int>(d.labels().begin(), d.labels().end()) == std::vector<int>{0, 1, 1});
    CHECK(d.p.matrix(0, 0) == 10.0);  // u1 was row 1 of p
    CHECK(d.q.matrix(0, 0) == 20.0);  // u1 was row 2 of q
    CHECK(d.q.labels == d.p.labels);
  }

  TEST_CASE("pairing remaps a different class order") {
    auto p = table("p", {"u1", "u2"}, {0, 1}, 2, {"ang", "sad"});
    auto q = table("q", {"u1", "u2"}, {1, 0}, 2, {"sad", "ang"});
    const auto d = data::pair(p, q);
    CHECK(d.q.labels == std::vector<int>{0, 1});
    CHECK(d.q.class_names == d.p.class_names);
  }

  TEST_CASE("pairing errors name the utterance") {
    CHECK_THROWS_WITH_AS(data::pair(table("p", {"u1", "u2", "extra"}, {0, 1, 0}, 2), table("q", {"u1", "u2"}, {0, 1}, 2)),
                         doctest::Contains("extra"), AlignmentError);
    CHECK_THROWS_WITH_AS(data::pair(table("p", {"u1", "u2"}, {0, 1}, 2), table("q", {"u1", "u2"}, {0, 0}, 2)),
                         doctest::Contains("u2"), AlignmentError);
    CHECK_THROWS_AS(data::pair(table("p", {"u1"}, {0}, 2), table("q", {"u1"}, {0}, 2, {"a", "c"})), AlignmentError);
  }

  TEST_CASE("subset keeps rows in the given order") {
    const auto d = data::pair(table("p", {"a", "b", "c"}, {0, 1, 0}, 2), table("q", {"a", "b", "c"}, {0, 1, 0}, 2));
    const std::size_t rows[] = {2, 0};
    const auto s = data::subset(d, rows);
    CHECK(s.p.ids == std::vector<std::string>{"c", "a"});
    CHECK(s.q.matrix(0, 0) == d.q.matrix(2, 0));
  }

  TEST_CASE("stratified k-fold on a balanced set") {
    const auto labels = balanced_labels(100, 2);
    const auto plan = data::stratified_kfold(labels, 2, 5, 1);
    std::set<std::size_t> all;
    for (std::size_t f = 0; f < 5; ++f) {
      const auto test = plan.test_indices(f);
      const auto train = plan.train_indices(f);
      CHECK(test.size() == 20);
      CHECK(train.size() == 80);
      CHECK(std::count_if(test.begin(), test.end(), [&](std::size_t i) { return labels[i] == 0; }) == 10);
      all.insert(test.begin(), test.end());
      for (std::size_t i : test) CHECK(std::find(train.begin(), train.end(), i) == train.end());
    }
    CHECK(all.size() == 100);
  }

  TEST_CASE("fold assignment is seeded") {
    const auto labels = balanced_labels(60, 3);
    CHECK(data::stratified_kfold(labels, 3, 5, 9).assignment == data::stratified_kfold(labels, 3, 5, 9).assignment);
    CHECK(data::stratified_kfold(labels, 3, 5, 9).assignment != data::stratified_kfold(labels, 3, 5, 10).assignment);
  }

  TEST_CASE("per-class fold counts differ by at most one on imbalanced data") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t classes = 2 + rng() % 5;
      const std::size_t k = 2 + rng() % 5;
      std::vector<int> labels;
      for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t n = k + rng() % 30;
        labels.insert(labels.end(), n, static_cast<int>(c));
      }
      std::shuffle(labels.begin(), labels.end(), rng);
      const auto plan = data::stratified_kfold(labels, classes, k, rng());
      for (std::size_t c = 0; c < classes; ++c) {
        std::vector<std::size_t> per_fold(k, 0);
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (labels[i] == static_cast<int>(c)) ++per_fold[static_cast<std::size_t>(plan.assignment[i])];
        }
        const auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
        CHECK(*hi - *lo <= 1);
      }
      std::vector<std::size_t> sizes(k, 0);
      for (int a : plan.assignment) ++sizes[static_cast<std::size_t>(a)];
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*hi - *lo <= classes);
    }
  }

  TEST_CASE("too few samples in a class is a split error") {
    const auto labels = balanced_labels(20, 6);
    CHECK_THROWS_AS(data::stratified_kfold(labels, 6, 5, 0), SplitError);
    CHECK_THROWS_AS(data::stratified_kfold(balanced_labels(20, 2), 2, 1, 0), SplitError);
  }

  TEST_CASE("stratified holdout") {
    const auto labels = balanced_labels(90, 3);
    std::vector<std::size_t> pool(72);
    std::iota(pool.begin(), pool.end(), std::size_t{10});
    const auto [kept, held] = data::stratified_holdout(labels, pool, 0.1, 4);
    CHECK(kept.size() + held.size() == pool.size());
    CHECK(held.size() >= 6);
    CHECK(held.size() <= 9);
    std::map<int, int> per;
    for (std::size_t i : held) ++per[labels[i]];
    for (const auto& [c, n] : per) CHECK(n >= 2);
    std::vector<std::size_t> all(kept);
    all.insert(all.end(), held.begin(), held.end());
    std::sort(all.begin(), all.end());
    CHECK(all == pool);
    CHECK(std::is_sorted(kept.begin(), kept.end()));
    const auto none = data::stratified_holdout(labels, pool, 0.0, 4);
    CHECK(none.second.empty());
  }

  TEST_CASE("synthetic tables") {
    data::SynthConfig sc;
    sc.classes = 6;
    sc.per_class = 50;
    sc.seed = 1;
    const auto [p, q] = data::synth_generate(sc);
    CHECK(p.size() == 300);
    CHECK(q.size() == 300);
    CHECK(p.dim() == 64);
    CHECK(q.dim() == 96);
    CHECK(p.ids == q.ids);
    CHECK(p.labels == q.labels);
    for (int c = 0; c < 6; ++c) CHECK(std::count(p.labels.begin(), p.labels.end(), c) == 50);
    // ids are sorted, but labels are not grouped by id
    CHECK(std::is_sorted(p.ids.begin(), p.ids.end()));
    CHECK_FALSE(std::is_sorted(p.labels.begin(), p.labels.end()));

    const auto again = data::synth_generate(sc);
    CHECK(data::format_pfv(again.first) == data::format_pfv(p));
    CHECK(data::format_pfv(again.second) == data::format_pfv(q));
    sc.seed = 2;
    CHECK_FALSE(data::synth_generate(sc).first.matrix == p.matrix);

    sc.classes = 1;
    CHECK_THROWS_AS(data::synth_generate(sc), ParameterError);
  }

  TEST_CASE("additive synthetic centroids sit gap apart on the right blocks") {
    data::SynthConfig sc;
    sc.interaction = false;
    sc.gap = 4.0;
    sc.per_class = 4000;
    sc.classes = 4;
    sc.dim_p = 32;
    sc.dim_q = 32;
    const auto [p, q] = data::synth_generate(sc);
    const auto mean_of = [](const data::FeatureTable& t, int c) {
      std::vector<double> m(t.dim(), 0.0);
      double n = 0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.labels[i] != c) continue;
        for (std::size_t d = 0; d < t.dim(); ++d) m[d] += t.matrix(i, d);
        ++n;
      }
      for (double& v : m) v /= n;
      return m;
    };
    const auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
      double s = 0;
      for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
      return std::sqrt(s);
    };
    // p separates pairs {0,1} vs {2,3}; q separates even vs odd.
    CHECK(dist(mean_of(p, 0), mean_of(p, 2)) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(dist(mean_of(p, 0), mean_of(p, 1)) < 0.4);
    CHECK(dist(mean_of(q, 0), mean_of(q, 1)) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(dist(mean_of(q, 0), mean_of(q, 2)) < 0.4);
  }

  TEST_CASE("zero gap carries no class signal") {
    data::SynthConfig sc;
    sc.gap = 0.0;
    sc.classes = 4;
    sc.per_class = 3000;
    sc.dim_p = 16;
    sc.dim_q = 16;
    const auto [p, q] = data::synth_generate(sc);
    for (const auto* t : {&p, &q}) {
      for (int c = 0; c < 4; ++c) {
        double s = 0;
        int n = 0;
        for (std::size_t i = 0; i < t->size(); ++i) {
          if (t->labels[i] != c) continue;
          for (std::size_t d = 0; d < t->dim(); ++d) s += t->matrix(i, d);
          ++n;
        }
        CHECK(std::abs(s / (n * 16.0)) < 0.02);
      }
    }
  }

  TEST_CASE("batches keep the tail and shuffle per epoch") {
    std::vector<std::size_t> rows(70);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto eval = data::batch_rows(rows, 32, false, 0, 0);
    REQUIRE(eval.size() == 3);
    CHECK(eval[0].size() == 32);
    CHECK(eval[1].size() == 32);
    CHECK(eval[2].size() == 6);
    CHECK(eval[0][0] == 0);
    CHECK(eval[2][5] == 69);

    const auto e1 = data::batch_rows(rows, 32, true, 7, 1);
    const auto e2 = data::batch_rows(rows, 32, true, 7, 2);
    CHECK(e1 != e2);
    CHECK(e1 == data::batch_rows(rows, 32, true, 7, 1));
    std::vector<std::size_t> seen;
    for (const auto& b : e1) seen.insert(seen.end(), b.begin(), b.end());
    std::sort(seen.begin(), seen.end());
    CHECK(seen == rows);
    CHECK_THROWS_AS(data::batch_rows(rows, 0, false, 0, 0), ParameterError);
  }

  TEST_CASE("gather_batch pulls matching rows from both tables") {
    const auto d = data::pair(table("p", {"a", "b", "c"}, {0, 1, 0}, 2), table("q", {"a", "b", "c"}, {0, 1, 0}, 3));
    const std::size_t rows[] = {1, 2};
    const auto b = data::gather_batch(d, rows);
    CHECK(b.xp.rows() == 2);
    CHECK(b.xq.cols() == 3);
    CHECK(b.labels == std::vector<int>{1, 0});
    CHECK(b.xq(0, 0) == d.q.matrix(1, 0));
  }
}
