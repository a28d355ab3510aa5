#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmix {

// Sentinel for "this row carries no gold label for this task". The value is
// part of the on-disk format and must stay 999.
inline constexpr int kIgnoreLabel = 999;

// Input that violates a documented contract (bad field, bad flag, shortfall).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally broken input (unparseable line, truncated file).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Task { humor = 0, sarcasm = 1, hate = 2 };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::humor: return "humor";
    case Task::sarcasm: return "sarcasm";
    case Task::hate: return "hate";
  }
  throw ValidationError("invalid task enum value");
}

inline Task task_from_string(const std::string& s) {
  if (s == "humor") return Task::humor;
  if (s == "sarcasm") return Task::sarcasm;
  if (s == "hate") return Task::hate;
  throw ValidationError("unknown task: '" + s + "'");
}

inline std::vector<Task> all_tasks() {
  return {Task::humor, Task::sarcasm, Task::hate};
}

enum class Origin { code_mixed, native_en, native_hi_translated };

inline std::string to_string(Origin o) {
  switch (o) {
    case Origin::code_mixed: return "code_mixed";
    case Origin::native_en: return "native_en";
    case Origin::native_hi_translated: return "native_hi_translated";
  }
  throw ValidationError("invalid origin enum value");
}

inline Origin origin_from_string(const std::string& s) {
  if (s == "code_mixed") return Origin::code_mixed;
  if (s == "native_en") return Origin::native_en;
  if (s == "native_hi_translated") return Origin::native_hi_translated;
  throw ValidationError("unknown origin: '" + s + "'");
}

}  // namespace cmix
