#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cmix/sample.hpp"

namespace cmix {

// Binary text classifier interface; fitted models are immutable.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  // Returns (label, log_odds) where log_odds = score(1) - score(0).
  virtual std::pair<int, double> predict(const std::string& text) const = 0;
};

// Multinomial Naive Bayes over word n-gram counts with add-alpha smoothing.
// N-grams are tokens joined with a single space.
class NGramNB : public TextClassifier {
 public:
  std::pair<int, double> predict(const std::string& text) const override;

  const std::set<int>& n_set() const { return n_set_; }
  double alpha() const { return alpha_; }
  const std::set<std::string>& vocab() const { return vocab_; }
  // log P(class); classes are 0 and 1.
  double class_prior(int label) const { return log_prior_[label]; }
  // log P(ngram | class); unseen n-grams get the smoothed floor
  // alpha / (total_class + alpha*|vocab|).
  double cond_logprob(int label, const std::string& ngram) const;

  void save(const std::string& path) const;
  static NGramNB load(const std::string& path);

  friend NGramNB fit_nb(const std::vector<Sample>& train, const std::set<int>& n_set,
                        double alpha);

 private:
  std::set<int> n_set_{1, 2, 3};
  double alpha_ = 1.0;
  std::set<std::string> vocab_;
  double log_prior_[2] = {0.0, 0.0};
  std::map<std::string, double> cond_[2];  // ngram -> log-prob
  double unseen_logprob_[2] = {0.0, 0.0};
};

// All contiguous n-token windows of the text for every n in n_set, with
// multiplicity.
std::vector<std::string> extract_ngrams(const std::string& text,
                                        const std::set<int>& n_set);

// Errors if either class is absent from train.
NGramNB fit_nb(const std::vector<Sample>& train, const std::set<int>& n_set = {1, 2, 3},
               double alpha = 1.0);

}  // namespace cmix
