#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmix/sample.hpp"

namespace cmix {

struct PromptConfig {
  Task task = Task::humor;
  int k = 0;  // from kShotGrid
  std::string template_id = "default-v1";
  std::uint64_t seed = 0;
};

// Label surface forms used in prompts and parsed from responses.
std::string positive_surface(Task task);  // e.g. "humorous"
std::string negative_surface(Task task);  // e.g. "non-humorous"

// k-means over L1-normalized term-frequency vectors (seeded init, 100
// iteration cap); one nearest-to-centroid exemplar per cluster, then a
// class-balance pass so neither class exceeds ceil(k/2) when both exist.
std::vector<Sample> select_shots(const std::vector<Sample>& train, int k,
                                 std::uint64_t seed);

// Three fixed sections: task definition, k exemplars, the query. Byte
// deterministic; never renders the query's gold label.
std::string render_prompt(const PromptConfig& cfg, const std::vector<Sample>& shots,
                          const Sample& query);

// Case-insensitive label scan, negative surface first; nullopt = abstain.
std::optional<int> parse_label(const std::string& response, Task task);

// Stable 64-bit FNV-1a content hash (used for transcripts and the mock).
std::uint64_t fnv1a64(const std::string& text);

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string send(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
  virtual bool is_mock() const = 0;
};

// Deterministic stand-in: the response label depends only on (prompt, seed).
class MockCompletionClient : public CompletionClient {
 public:
  MockCompletionClient(Task task, std::uint64_t seed) : task_(task), seed_(seed) {}
  std::string send(const std::string& prompt) override;
  std::string name() const override { return "mock"; }
  bool is_mock() const override { return true; }

 private:
  Task task_;
  std::uint64_t seed_;
};

struct TranscriptEntry {
  std::string query_id;
  std::uint64_t prompt_hash = 0;
  std::string response;
  int parsed_label = kIgnoreLabel;  // 999 records an abstention
};

void save_transcript(const std::vector<TranscriptEntry>& entries,
                     const std::string& path);

}  // namespace cmix
