#include <cmath>

#include "doctest.h"

#include "cmix/eval.hpp"
#include "cmix/rng.hpp"
#include "support/tempdir.hpp"

using namespace cmix;
using testsupport::TempDir;

namespace {

// Independent confusion-count reference.
EvalReport brute_force(const std::vector<int>& preds, const std::vector<int>& golds) {
  EvalReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == 1 && golds[i] == 1) r.tp++;
    if (preds[i] == 1 && golds[i] == 0) r.fp++;
    if (preds[i] == 0 && golds[i] == 1) r.fn++;
    if (preds[i] == 0 && golds[i] == 0) r.tn++;
  }
  r.precision = r.tp + r.fp == 0 ? 0.0 : double(r.tp) / double(r.tp + r.fp);
  r.recall = r.tp + r.fn == 0 ? 0.0 : double(r.tp) / double(r.tp + r.fn);
  r.f1 = r.precision + r.recall == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace

TEST_CASE("prf1 counts the positive class only") {
  const std::vector<int> preds = {1, 1, 0, 0, 1};
  const std::vector<int> golds = {1, 0, 1, 0, 1};
  const EvalReport r = prf1(preds, golds);
  CHECK(r.tp == 2);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.tn == 1);
  CHECK(r.precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("prf1 agrees with brute-force counting on random vectors") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<int> preds(n), golds(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] = static_cast<int>(rng.below(2));
      golds[i] = static_cast<int>(rng.below(2));
    }
    const EvalReport a = prf1(preds, golds);
    const EvalReport b = brute_force(preds, golds);
    CHECK(a.tp == b.tp);
    CHECK(a.fp == b.fp);
    CHECK(a.fn == b.fn);
    CHECK(a.tn == b.tn);
    CHECK(a.precision == doctest::Approx(b.precision).epsilon(1e-12));
    CHECK(a.recall == doctest::Approx(b.recall).epsilon(1e-12));
    CHECK(a.f1 == doctest::Approx(b.f1).epsilon(1e-12));
  }
}

TEST_CASE("degenerate predictions give zero not NaN") {
  const EvalReport none = prf1({0, 0, 0}, {1, 1, 0});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  // All-positive prediction on a 50/475 positive/negative test set.
  std::vector<int> preds(525, 1), golds(525, 0);
  for (int i = 0; i < 50; ++i) golds[i] = 1;
  const EvalReport all_pos = prf1(preds, golds);
  CHECK(all_pos.precision == doctest::Approx(50.0 / 525.0).epsilon(1e-9));
  CHECK(all_pos.recall == 1.0);
  CHECK(std::abs(all_pos.f1 - 0.1739) < 5e-4);
}

TEST_CASE("prf1 validates its inputs") {
  CHECK_THROWS_AS(prf1({1, 0}, {1}), ValidationError);
  CHECK_THROWS_AS(prf1({}, {}), ValidationError);
  CHECK_THROWS_AS(prf1({2}, {1}), ValidationError);
  CHECK_THROWS_AS(prf1({1}, {kIgnoreLabel}), ValidationError);
}

TEST_CASE("identical systems are never significantly different") {
  std::vector<int> preds(40, 1), golds(40, 1);
  for (int i = 0; i < 17; ++i) {
    preds[i] = 0;
    golds[(i * 7) % 40] = 0;
  }
  CHECK(significance(preds, preds, golds, 1000, 3) == 1.0);
}

TEST_CASE("clearly different systems get a small p-value") {
  // 200 balanced samples; system A is perfect, system B predicts all 1.
  std::vector<int> golds(200), all_one(200, 1);
  for (int i = 0; i < 200; ++i) golds[i] = i < 100 ? 1 : 0;
  const double p = significance(golds, all_one, golds, 2000, 5);
  CHECK(p < 0.05);
  CHECK(p > 0.0);
}

TEST_CASE("significance is deterministic per seed and bounded") {
  Rng rng(4);
  std::vector<int> a(60), b(60), g(60);
  for (int i = 0; i < 60; ++i) {
    a[i] = static_cast<int>(rng.below(2));
    b[i] = static_cast<int>(rng.below(2));
    g[i] = static_cast<int>(rng.below(2));
  }
  const double p1 = significance(a, b, g, 1000, 11);
  const double p2 = significance(a, b, g, 1000, 11);
  CHECK(p1 == p2);
  CHECK(p1 > 0.0);
  CHECK(p1 <= 1.0);

  CHECK_THROWS_AS(significance(a, b, g, 999, 1), ValidationError);
  std::vector<int> short_b(59, 0);
  CHECK_THROWS_AS(significance(a, short_b, g, 1000, 1), ValidationError);
}

TEST_CASE("prediction files round-trip") {
  TempDir dir;
  const std::vector<Prediction> preds = {{"a", Task::humor, 1, 0.9},
                                         {"b", Task::sarcasm, 0, 0.2}};
  const std::string path = dir.file("p.jsonl");
  save_predictions(preds, path);
  const auto back = load_predictions(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[0].task == Task::humor);
  CHECK(back[0].pred == 1);
  CHECK(back[0].prob == doctest::Approx(0.9));
  CHECK(back[1].task == Task::sarcasm);

  CHECK_THROWS_AS(load_predictions(dir.file("absent.jsonl")), ParseError);
}

TEST_CASE("report JSON carries the optional p-value") {
  EvalReport r = prf1({1, 0}, {1, 1});
  CHECK(to_json(r).find("p_value") == std::string::npos);
  r.p_value = 0.03;
  const std::string with_p = to_json(r);
  CHECK(with_p.find("p_value") != std::string::npos);
}
