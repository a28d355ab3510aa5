#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "cmix/ngram_nb.hpp"
#include "support/tempdir.hpp"

using namespace cmix;
using testsupport::TempDir;

namespace {

Sample doc(const std::string& id, const std::string& text, int label) {
  Sample s;
  s.id = id;
  s.text = text;
  s.task = Task::humor;
  s.label = label;
  s.origin = Origin::code_mixed;
  s.dataset = "t";
  return s;
}

// Two docs per class over vocab {x, y}.
std::vector<Sample> four_docs() {
  return {doc("a", "x x", 0), doc("b", "x y", 0), doc("c", "y y", 1),
          doc("d", "y x", 1)};
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("extract_ngrams emits every window for every order") {
  CHECK(sorted(extract_ngrams("a b c", {1})) ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(sorted(extract_ngrams("a b c", {1, 2})) ==
        std::vector<std::string>{"a", "a b", "b", "b c", "c"});
  CHECK(sorted(extract_ngrams("a b a b", {2})) ==
        std::vector<std::string>{"a b", "a b", "b a"});
  CHECK(extract_ngrams("a b", {3}) == std::vector<std::string>{});
  CHECK(extract_ngrams("", {1, 2, 3}) == std::vector<std::string>{});
}

TEST_CASE("unigram fit matches closed-form smoothed probabilities") {
  const NGramNB model = fit_nb(four_docs(), {1}, 1.0);
  // Class 0 counts: x=3, y=1, total 4, |V|=2.
  CHECK(model.cond_logprob(0, "x") == doctest::Approx(std::log(4.0 / 6.0)).epsilon(1e-12));
  CHECK(model.cond_logprob(0, "y") == doctest::Approx(std::log(2.0 / 6.0)).epsilon(1e-12));
  CHECK(model.cond_logprob(1, "x") == doctest::Approx(std::log(2.0 / 6.0)).epsilon(1e-12));
  CHECK(model.class_prior(0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(model.class_prior(1) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  // Unseen n-grams fall back to alpha / (total + alpha*|V|).
  CHECK(model.cond_logprob(0, "zzz") == doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-12));

  const auto [label, log_odds] = model.predict("x x");
  CHECK(label == 0);
  const double expected = (std::log(0.5) + 2 * std::log(2.0 / 6.0)) -
                          (std::log(0.5) + 2 * std::log(4.0 / 6.0));
  CHECK(log_odds == doctest::Approx(expected).epsilon(1e-12));
  CHECK(model.predict("y y").first == 1);
}

TEST_CASE("bigram features change the posterior as derived by hand") {
  const NGramNB model = fit_nb(four_docs(), {1, 2}, 1.0);
  // Union vocab: x, y, "x x", "x y", "y y", "y x" -> |V| = 6; class totals 6.
  CHECK(model.vocab().size() == 6);
  CHECK(model.cond_logprob(0, "x x") == doctest::Approx(std::log(2.0 / 12.0)).epsilon(1e-12));
  CHECK(model.cond_logprob(1, "x x") == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-12));

  const auto [label, log_odds] = model.predict("x x");
  CHECK(label == 0);
  CHECK(log_odds == doctest::Approx(-3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("a zero log-odds tie resolves to the negative class") {
  const auto [label, log_odds] = fit_nb(four_docs(), {1}, 1.0).predict("novel words only");
  CHECK(log_odds == 0.0);
  CHECK(label == 0);
}

TEST_CASE("fit_nb requires both classes and positive alpha") {
  const std::vector<Sample> one_class = {doc("a", "x", 1), doc("b", "y", 1)};
  CHECK_THROWS_AS(fit_nb(one_class, {1}, 1.0), ValidationError);
  CHECK_THROWS_AS(fit_nb(four_docs(), {1}, 0.0), ValidationError);
  CHECK_THROWS_AS(fit_nb(four_docs(), {}, 1.0), ValidationError);
  CHECK_THROWS_AS(fit_nb(four_docs(), {0}, 1.0), ValidationError);
}

TEST_CASE("saved models load back with identical behavior") {
  TempDir dir;
  const NGramNB model = fit_nb(four_docs(), {1, 2}, 0.5);
  const std::string path = dir.file("nb.json");
  model.save(path);
  const NGramNB back = NGramNB::load(path);

  CHECK(back.n_set() == model.n_set());
  CHECK(back.alpha() == model.alpha());
  CHECK(back.vocab() == model.vocab());
  for (const std::string& text : {"x x", "y y", "x y x", "unseen stuff"}) {
    const auto a = model.predict(text);
    const auto b = back.predict(text);
    CHECK(a.first == b.first);
    CHECK(a.second == doctest::Approx(b.second).epsilon(1e-12));
  }

  testsupport::write_file(dir.file("bad.json"), "{\"format\":\"other\"}");
  CHECK_THROWS_AS(NGramNB::load(dir.file("bad.json")), ValidationError);
  testsupport::write_file(dir.file("broken.json"), "{not json");
  CHECK_THROWS_AS(NGramNB::load(dir.file("broken.json")), ParseError);
}
