// Copyright 2026 The SiamUDA Authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "siamuda/core/metrics.hpp"
#include "siamuda/core/rng.hpp"
#include "siamuda/core/types.hpp"

using namespace siamuda;

namespace {

LabelMap random_labels(Rng& rng, int h, int w, int num_classes, double ignore_prob = 0.0) {
  LabelMap m(h, w);
  for (int& v : m.data) {
    if (ignore_prob > 0.0 && bernoulli(rng, ignore_prob)) {
      v = kIgnoreLabel;
    } else {
      v = uniform_int(rng, 0, num_classes - 1);
    }
  }
  return m;
}

// Brute-force tally, deliberately structured differently from the engine:
// nested class loops instead of a single pixel pass.
std::vector<int64_t> tally_oracle(const LabelMap& pred, const LabelMap& ref, int C) {
  std::vector<int64_t> counts(size_t(C) * C, 0);
  for (int r = 0; r < C; ++r) {
    for (int p = 0; p < C; ++p) {
      int64_t n = 0;
      for (size_t i = 0; i < ref.data.size(); ++i) {
        if (ref.data[i] == r && pred.data[i] == p) ++n;
      }
      counts[size_t(r) * C + p] = n;
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("confusion update identity case") {
  ConfusionMatrix cm(2);
  LabelMap a(2, 2, 0);
  cm.update(a, a);
  CHECK(cm.at(0, 0) == 4);
  CHECK(cm.at(0, 1) == 0);
  CHECK(cm.at(1, 0) == 0);
  CHECK(cm.at(1, 1) == 0);
}

TEST_CASE("confusion update single pixel") {
  ConfusionMatrix cm(2);
  LabelMap ref(1, 1, 0);
  LabelMap pred(1, 1, 1);
  cm.update(pred, ref);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.total() == 1);
}

TEST_CASE("confusion update matches brute-force tally") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng = make_rng(7, "tally", trial);
    const int C = 3;
    LabelMap ref = random_labels(rng, 4, 4, C);
    LabelMap pred = random_labels(rng, 4, 4, C);
    ConfusionMatrix cm(C);
    cm.update(pred, ref);
    auto oracle = tally_oracle(pred, ref, C);
    for (int r = 0; r < C; ++r)
      for (int p = 0; p < C; ++p) CHECK(cm.at(r, p) == oracle[size_t(r) * C + p]);
  }
}

TEST_CASE("confusion update rejects shape mismatch and bad classes") {
  ConfusionMatrix cm(3);
  LabelMap a(2, 2, 0), b(2, 3, 0);
  CHECK_THROWS_AS(cm.update(a, b), ShapeError);

  LabelMap ref(1, 1, 0), pred(1, 1, 3);
  CHECK_THROWS_AS(cm.update(pred, ref), ValueError);
  LabelMap neg(1, 1, -1);
  CHECK_THROWS_AS(cm.update(neg, ref), ValueError);
  LabelMap bad_ref(1, 1, 7);
  CHECK_THROWS_AS(cm.update(ref, bad_ref), ValueError);
}

TEST_CASE("ignored reference pixels are skipped, prediction unchecked there") {
  ConfusionMatrix cm(2);
  LabelMap ref(2, 2, 0);
  ref.at(0, 0) = kIgnoreLabel;
  ref.at(1, 1) = kIgnoreLabel;
  LabelMap pred(2, 2, 1);
  pred.at(0, 0) = 99;  // would be rejected if the pixel were counted
  cm.update(pred, ref);
  CHECK(cm.total() == 2);
  CHECK(cm.at(0, 1) == 2);
}

TEST_CASE("matrix total equals non-ignored pixel count") {
  Rng rng = make_rng(11, "total");
  const int C = 4;
  LabelMap ref = random_labels(rng, 9, 7, C, 0.3);
  LabelMap pred = random_labels(rng, 9, 7, C);
  ConfusionMatrix cm(C);
  cm.update(pred, ref);
  int64_t expected = std::count_if(ref.data.begin(), ref.data.end(),
                                   [](int v) { return v != kIgnoreLabel; });
  CHECK(cm.total() == expected);
}

TEST_CASE("confusion accumulation is order independent") {
  Rng rng = make_rng(3, "order");
  const int C = 3;
  LabelMap ref1 = random_labels(rng, 5, 5, C), pred1 = random_labels(rng, 5, 5, C);
  LabelMap ref2 = random_labels(rng, 6, 4, C), pred2 = random_labels(rng, 6, 4, C);

  ConfusionMatrix ab(C), ba(C);
  ab.update(pred1, ref1);
  ab.update(pred2, ref2);
  ba.update(pred2, ref2);
  ba.update(pred1, ref1);
  for (int r = 0; r < C; ++r)
    for (int p = 0; p < C; ++p) CHECK(ab.at(r, p) == ba.at(r, p));

  ConfusionMatrix m1(C), m2(C);
  m1.update(pred1, ref1);
  m2.update(pred2, ref2);
  ConfusionMatrix merged = m1;
  merged.merge(m2);
  for (int r = 0; r < C; ++r)
    for (int p = 0; p < C; ++p) CHECK(merged.at(r, p) == ab.at(r, p));

  ConfusionMatrix other(4);
  CHECK_THROWS_AS(m1.merge(other), ShapeError);
}

TEST_CASE("iou from counts") {
  CHECK(iou_from_counts(5, 0, 0) == 1.0);
  CHECK(iou_from_counts(0, 3, 4) == 0.0);
  CHECK(iou_from_counts(2, 1, 1) == 0.5);
  CHECK_THROWS_AS(iou_from_counts(-1, 0, 0), ValueError);
}

TEST_CASE("f1 from counts") {
  CHECK(f1_from_counts(5, 0, 0) == 1.0);
  CHECK(f1_from_counts(0, 2, 2) == 0.0);
  CHECK(f1_from_counts(2, 1, 1) == doctest::Approx(0.6667).epsilon(1e-4));
}

TEST_CASE("f1 equals 2*iou/(1+iou) and dominates iou") {
  Rng rng = make_rng(13, "identity");
  for (int trial = 0; trial < 200; ++trial) {
    int64_t tp = uniform_int(rng, 0, 1000);
    int64_t fp = uniform_int(rng, 0, 1000);
    int64_t fn = uniform_int(rng, 0, 1000);
    if (tp + fp + fn == 0) continue;
    double iou = iou_from_counts(tp, fp, fn);
    double f1 = f1_from_counts(tp, fp, fn);
    CHECK(f1 == doctest::Approx(2.0 * iou / (1.0 + iou)).epsilon(1e-9));
    CHECK(f1 >= iou);
  }
}

TEST_CASE("summarize diagonal-only matrix") {
  const int C = 3;
  ConfusionMatrix cm(C);
  LabelMap m(2, 2);
  m.data = {0, 1, 2, 0};
  cm.update(m, m);
  MetricReport r = summarize(cm);
  for (int c = 0; c < C; ++c) {
    CHECK(r.has_support[c]);
    CHECK(r.per_class_iou[c] == 1.0);
    CHECK(r.per_class_f1[c] == 1.0);
  }
  CHECK(r.mean_iou == 1.0);
  CHECK(r.mean_f1 == 1.0);
  CHECK(r.pixel_count == 4);
}

TEST_CASE("summarize all-zero matrix") {
  MetricReport r = summarize(ConfusionMatrix(4));
  CHECK(r.pixel_count == 0);
  for (int c = 0; c < 4; ++c) CHECK_FALSE(r.has_support[c]);
  CHECK(r.mean_iou == 0.0);
  CHECK(r.mean_f1 == 0.0);
}

TEST_CASE("summarize matches set-intersection oracle") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng = make_rng(21, "sets", trial);
    const int C = 4;
    LabelMap ref = random_labels(rng, 8, 8, C, trial % 2 ? 0.2 : 0.0);
    LabelMap pred = random_labels(rng, 8, 8, C);
    ConfusionMatrix cm(C);
    cm.update(pred, ref);
    MetricReport r = summarize(cm);

    for (int c = 0; c < C; ++c) {
      // Pixel-set view over non-ignored pixels: IoU = |P∩R| / |P∪R|.
      int64_t inter = 0, uni = 0, pc = 0, rc = 0;
      for (size_t i = 0; i < ref.data.size(); ++i) {
        if (ref.data[i] == kIgnoreLabel) continue;
        const bool in_p = pred.data[i] == c;
        const bool in_r = ref.data[i] == c;
        inter += in_p && in_r;
        uni += in_p || in_r;
        pc += in_p;
        rc += in_r;
      }
      if (uni == 0) {
        CHECK_FALSE(r.has_support[c]);
        continue;
      }
      CHECK(r.has_support[c]);
      CHECK(r.per_class_iou[c] == doctest::Approx(double(inter) / double(uni)).epsilon(1e-12));
      CHECK(r.per_class_f1[c] ==
            doctest::Approx(2.0 * double(inter) / double(pc + rc)).epsilon(1e-12));
    }
  }
}

TEST_CASE("summarize commutes with class permutation") {
  Rng rng = make_rng(31, "perm");
  const int C = 5;
  LabelMap ref = random_labels(rng, 10, 10, C, 0.1);
  LabelMap pred = random_labels(rng, 10, 10, C);

  std::vector<int> perm(C);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  auto apply = [&](const LabelMap& m) {
    LabelMap out = m;
    for (int& v : out.data)
      if (v != kIgnoreLabel) v = perm[v];
    return out;
  };

  ConfusionMatrix cm(C), cm_p(C);
  cm.update(pred, ref);
  cm_p.update(apply(pred), apply(ref));
  MetricReport r = summarize(cm), rp = summarize(cm_p);

  for (int c = 0; c < C; ++c) {
    CHECK(rp.per_class_iou[perm[c]] == r.per_class_iou[c]);
    CHECK(rp.per_class_f1[perm[c]] == r.per_class_f1[c]);
    CHECK(rp.has_support[perm[c]] == r.has_support[c]);
  }
  CHECK(rp.mean_iou == doctest::Approx(r.mean_iou).epsilon(1e-12));
  CHECK(rp.mean_f1 == doctest::Approx(r.mean_f1).epsilon(1e-12));
  CHECK(rp.pixel_count == r.pixel_count);
}

TEST_CASE("metric report serialization format") {
  ConfusionMatrix cm(2);
  LabelMap ref(2, 2);
  ref.data = {0, 0, 1, kIgnoreLabel};
  LabelMap pred(2, 2);
  pred.data = {0, 1, 1, 0};
  cm.update(pred, ref);
  MetricReport r = summarize(cm);
  std::string j = metric_report_to_json(r, {"road", "car"});
  // road: tp=1 fp=0 fn=1 -> iou 0.5, f1 0.6667; car: tp=1 fp=1 fn=0.
  CHECK(j.find("\"iou.road\": \"0.5000\"") != std::string::npos);
  CHECK(j.find("\"iou.car\": \"0.5000\"") != std::string::npos);
  CHECK(j.find("\"f1.road\": \"0.6667\"") != std::string::npos);
  CHECK(j.find("\"miou\": \"0.5000\"") != std::string::npos);
  CHECK(j.find("\"mf1\": \"0.6667\"") != std::string::npos);
  CHECK(j.find("\"pixels\": \"3\"") != std::string::npos);

  MetricReport empty = summarize(ConfusionMatrix(2));
  std::string je = metric_report_to_json(empty, {"road", "car"});
  CHECK(je.find("\"iou.road\": \"nan\"") != std::string::npos);
  CHECK(je.find("\"f1.car\": \"nan\"") != std::string::npos);

  CHECK_THROWS_AS(metric_report_to_json(r, {"road"}), ValueError);
}

TEST_CASE("isprs class order") {
  const auto& names = isprs_class_names();
  REQUIRE(names.size() == 6);
  CHECK(names[0] == "clutter");
  CHECK(names[1] == "car");
  CHECK(names[2] == "tree");
  CHECK(names[3] == "low_vegetation");
  CHECK(names[4] == "building");
  CHECK(names[5] == "impervious_surface");
}

TEST_CASE("probability field validation") {
  ProbabilityField p(2, 2, 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      p.at(y, x, 0) = 0.5;
      p.at(y, x, 1) = 0.25;
      p.at(y, x, 2) = 0.25;
    }
  CHECK_NOTHROW(p.validate());

  p.at(0, 0, 0) = 0.6;  // sum 1.1
  CHECK_THROWS_AS(p.validate(), ValueError);

  p.at(0, 0, 0) = 1.1;
  p.at(0, 0, 1) = -0.05;
  p.at(0, 0, 2) = -0.05;
  CHECK_THROWS_AS(p.validate(), ValueError);
}

TEST_CASE("shape spec and domain sample validation") {
  ShapeSpec ok{64, 64, 3, 4};
  CHECK_NOTHROW(ok.validate());
  CHECK_THROWS_AS((ShapeSpec{0, 64, 3, 4}.validate()), ValueError);
  CHECK_THROWS_AS((ShapeSpec{64, 64, 3, 1}.validate()), ValueError);

  DomainSample s;
  s.image = Image(4, 4, 3);
  s.label = LabelMap(4, 4);
  s.id = "s0";
  CHECK_NOTHROW(s.validate());
  s.label = LabelMap(4, 5);
  CHECK_THROWS_AS(s.validate(), ShapeError);
}

TEST_CASE("seed derivation is stable and tag-sensitive") {
  CHECK(derive_seed(0, "a") == derive_seed(0, "a"));
  CHECK(derive_seed(0, "a") != derive_seed(0, "b"));
  CHECK(derive_seed(0, "a", 1) != derive_seed(0, "a", 2));
  CHECK(derive_seed(0, "a", 0, 1) != derive_seed(0, "a", 1, 0));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));

  Rng r1 = make_rng(5, "x", 3);
  Rng r2 = make_rng(5, "x", 3);
  for (int i = 0; i < 10; ++i) CHECK(r1() == r2());
}

TEST_CASE("bernoulli edge probabilities") {
  Rng rng = make_rng(1, "bern");
  for (int i = 0; i < 50; ++i) {
    CHECK_FALSE(bernoulli(rng, 0.0));
    CHECK(bernoulli(rng, 1.0));
  }
}
