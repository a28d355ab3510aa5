#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cmix/sample.hpp"

namespace cmix {

// Class-conditional token distribution smoothed over a shared vocabulary.
// Probabilities are strictly positive and sum to 1.
struct WordDist {
  std::map<std::string, double> probs;
  std::set<std::string> vocab;
  double alpha = 1.0;
};

// Keyword list; terms are lowercase and non-empty. Multiword terms are
// whitespace-separated.
struct Lexicon {
  std::set<std::string> terms;
};

Lexicon load_lexicon(const std::string& path);

struct StatReport {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double kl = 0.0;
  double hurtful_fraction_pos = 0.0;
  double hurtful_fraction_neg = 0.0;
};

std::string to_json(const StatReport& report);
StatReport stat_report_from_json(const std::string& text);

// prob(w) = (count(w) + alpha) / (total + alpha*|vocab|) for every w in
// union_vocab. Tokens outside union_vocab are rejected; an empty class is an
// error.
WordDist word_distribution(const std::vector<Sample>& samples, int label,
                           double alpha, const std::set<std::string>& union_vocab);

// Jeffreys form: KL(p||q) + KL(q||p), natural log. Vocabularies must match.
double symmetric_kl(const WordDist& p, const WordDist& q);

// Fraction of the class's samples whose token sequence contains at least one
// lexicon term; multiword terms match as consecutive token runs.
double hurtful_fraction(const std::vector<Sample>& samples, const Lexicon& lexicon,
                        int label);

// Composes the union vocabulary, both class distributions, their divergence
// and the keyword fractions into one report.
StatReport dataset_report(const std::vector<Sample>& samples, const Lexicon& lexicon,
                          double alpha);

}  // namespace cmix
