#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cmix/sample.hpp"

namespace cmix {

// Whitespace-level tokenizer with a frequency-built vocabulary.
// Special ids: PAD=0, UNK=1, CLS=2; regular tokens start at 3.
struct Tokenizer {
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kClsId = 2;

  std::map<std::string, int> vocab;  // token -> id (specials excluded)
  int max_len = 64;

  int vocab_size() const { return static_cast<int>(vocab.size()) + 3; }

  int id_of(const std::string& token) const {
    auto it = vocab.find(token);
    return it == vocab.end() ? kUnkId : it->second;
  }
};

// Vocabulary of tokens with frequency >= min_freq. Id assignment is
// deterministic: frequency descending, ties broken lexicographically.
Tokenizer build_vocab(const std::vector<Sample>& corpus, int min_freq,
                      int max_len = 64);

// [CLS] + token ids truncated/padded to seq_len; mask marks non-pad positions.
std::pair<std::vector<int>, std::vector<int>> encode(const Tokenizer& tokenizer,
                                                     const std::string& text,
                                                     int seq_len);

}  // namespace cmix
