#include "cmix/tokenizer.hpp"

#include <algorithm>

#include "cmix/text.hpp"

namespace cmix {

Tokenizer build_vocab(const std::vector<Sample>& corpus, int min_freq, int max_len) {
  if (min_freq < 1) throw ValidationError("build_vocab: min_freq must be >= 1");
  if (max_len < 1) throw ValidationError("build_vocab: max_len must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const Sample& s : corpus) {
    for (const std::string& token : tokenize(s.text)) ++freq[token];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (const auto& [token, count] : freq) {
    if (count >= static_cast<std::size_t>(min_freq)) entries.emplace_back(token, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Tokenizer tok;
  tok.max_len = max_len;
  int next_id = 3;
  for (const auto& [token, unused] : entries) tok.vocab[token] = next_id++;
  return tok;
}

std::pair<std::vector<int>, std::vector<int>> encode(const Tokenizer& tokenizer,
                                                     const std::string& text,
                                                     int seq_len) {
  if (seq_len < 1) throw ValidationError("encode: seq_len must be positive");
  const std::size_t cap = static_cast<std::size_t>(seq_len);
  std::vector<int> ids;
  ids.reserve(cap);
  ids.push_back(Tokenizer::kClsId);
  for (const std::string& token : tokenize(text)) {
    if (ids.size() == cap) break;
    ids.push_back(tokenizer.id_of(token));
  }
  std::vector<int> mask(ids.size(), 1);
  ids.resize(cap, Tokenizer::kPadId);
  mask.resize(cap, 0);
  return {std::move(ids), std::move(mask)};
}

}  // namespace cmix
