#pragma once

#include <cctype>
#include <string>
#include <vector>

namespace cmix {

// Shared tokenization for statistics, n-gram features, vocabulary building
// and shot vectorization: lowercase, split on whitespace, strip leading and
// trailing punctuation from each token.
//
// Lowercasing and punctuation stripping touch ASCII bytes only; multi-byte
// UTF-8 sequences (e.g. Devanagari) pass through untouched, which keeps the
// transform well-defined on code-mixed text.

inline std::string ascii_lower(std::string s) {
  for (char& c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return s;
}

inline bool is_ascii_punct(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

inline std::string trim_whitespace(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  const std::string lowered = ascii_lower(text);
  std::size_t i = 0;
  const std::size_t n = lowered.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(lowered[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(lowered[j]))) ++j;
    if (j > i) {
      std::size_t b = i, e = j;
      while (b < e && is_ascii_punct(lowered[b])) ++b;
      while (e > b && is_ascii_punct(lowered[e - 1])) --e;
      if (e > b) tokens.push_back(lowered.substr(b, e - b));
    }
    i = j;
  }
  return tokens;
}

}  // namespace cmix
