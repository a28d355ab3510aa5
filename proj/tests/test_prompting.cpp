#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "json.hpp"

#include "cmix/prompting.hpp"
#include "support/tempdir.hpp"

using namespace cmix;
using testsupport::TempDir;

namespace {

Sample make(const std::string& id, const std::string& text, int label) {
  Sample s;
  s.id = id;
  s.text = text;
  s.task = Task::humor;
  s.label = label;
  s.origin = Origin::code_mixed;
  s.dataset = "t";
  return s;
}

// Fixed pool used by the golden-prompt regression.
std::vector<Sample> golden_pool() {
  return {make("g1", "yaar ye toh full comedy nikla", 1),
          make("g2", "bhai kitna boring lecture tha", 0),
          make("g3", "haso mat yaar pet dukh gaya", 1),
          make("g4", "train phir late hai aaj", 0),
          make("g5", "uske jokes pe sab lot pot", 1),
          make("g6", "market mein sabzi mehengi ho gayi", 0)};
}

std::size_t count_label(const std::vector<Sample>& v, int label) {
  return static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(),
                    [&](const Sample& s) { return s.label == label; }));
}

}  // namespace

TEST_CASE("label surfaces per task") {
  CHECK(positive_surface(Task::humor) == "humorous");
  CHECK(negative_surface(Task::humor) == "non-humorous");
  CHECK(positive_surface(Task::sarcasm) == "sarcastic");
  CHECK(negative_surface(Task::sarcasm) == "non-sarcastic");
  CHECK(positive_surface(Task::hate) == "hateful");
  CHECK(negative_surface(Task::hate) == "non-hateful");
}

TEST_CASE("fnv1a64 matches published reference hashes") {
  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(fnv1a64("a") != fnv1a64("b"));
}

TEST_CASE("select_shots is deterministic, unique and class-balanced") {
  const std::vector<Sample> pool = golden_pool();

  CHECK(select_shots(pool, 0, 1).empty());

  const auto two = select_shots(pool, 2, 21);
  REQUIRE(two.size() == 2);
  CHECK(count_label(two, 1) == 1);
  CHECK(count_label(two, 0) == 1);

  const auto again = select_shots(pool, 2, 21);
  CHECK(two[0].id == again[0].id);
  CHECK(two[1].id == again[1].id);

  const auto four = select_shots(pool, 4, 9);
  REQUIRE(four.size() == 4);
  CHECK(count_label(four, 1) == 2);
  CHECK(count_label(four, 0) == 2);
  std::set<std::string> ids;
  for (const Sample& s : four) ids.insert(s.id);
  CHECK(ids.size() == 4);

  CHECK_THROWS_WITH_AS(select_shots(pool, 7, 1),
                       doctest::Contains("exceeds the candidate pool"),
                       ValidationError);
  const std::vector<Sample> one_class = {make("a", "x", 1), make("b", "y", 1),
                                         make("c", "z", 1)};
  CHECK_THROWS_WITH_AS(select_shots(one_class, 2, 1),
                       doctest::Contains("both classes"), ValidationError);
  CHECK_THROWS_AS(select_shots(pool, -1, 1), ValidationError);
}

TEST_CASE("zero-shot prompts carry only the system and input sections") {
  PromptConfig cfg;
  cfg.task = Task::sarcasm;
  cfg.k = 0;
  const Sample query = make("q", "waah kya service hai bhai", 1);
  const std::string prompt = render_prompt(cfg, {}, query);
  CHECK(prompt ==
        "### System\n"
        "You label code-mixed social media posts for the sarcasm task. "
        "Decide whether the input is sarcastic or non-sarcastic. "
        "Answer with exactly one label: sarcastic or non-sarcastic.\n"
        "\n### Input\n"
        "Input: waah kya service hai bhai\n"
        "Label:");
  // The query's gold label never leaks into the prompt.
  CHECK(prompt.find("Label: ") == std::string::npos);
}

TEST_CASE("two-shot prompt is byte-identical to the golden file") {
  PromptConfig cfg;
  cfg.task = Task::humor;
  cfg.k = 2;
  cfg.seed = 21;
  const auto shots = select_shots(golden_pool(), cfg.k, cfg.seed);
  const Sample query = make("q", "aaj ka match dekha kya", 0);
  const std::string prompt = render_prompt(cfg, shots, query);

  const std::string golden =
      testsupport::read_file(std::string(CMIX_TEST_DATA_DIR) +
                             "/golden_prompt_humor_k2.txt");
  REQUIRE_FALSE(golden.empty());
  CHECK(prompt == golden);
}

TEST_CASE("render_prompt validates shots and template id") {
  PromptConfig cfg;
  cfg.k = 2;
  const Sample query = make("q", "text", 0);
  CHECK_THROWS_WITH_AS(render_prompt(cfg, {}, query),
                       doctest::Contains("expected 2 shots"), ValidationError);

  cfg.k = 0;
  cfg.template_id = "fancy-v9";
  CHECK_THROWS_WITH_AS(render_prompt(cfg, {}, query),
                       doctest::Contains("unknown template"), ValidationError);

  cfg.template_id = "default-v1";
  cfg.k = 1;
  CHECK_THROWS_AS(render_prompt(cfg, {make("s", "x", kIgnoreLabel)}, query),
                  ValidationError);
}

TEST_CASE("parse_label resolves the negative surface before the positive one") {
  CHECK(parse_label("humorous", Task::humor) == 1);
  CHECK(parse_label("Label: HUMOROUS!", Task::humor) == 1);
  CHECK(parse_label("non-humorous", Task::humor) == 0);
  CHECK(parse_label("it is clearly Non-Humorous", Task::humor) == 0);
  CHECK(parse_label("not humorous at all", Task::humor) == 0);
  CHECK(parse_label("no labels here", Task::humor) == std::nullopt);
  CHECK(parse_label("", Task::humor) == std::nullopt);
  // Foreign-task surfaces do not resolve.
  CHECK(parse_label("sarcastic", Task::humor) == std::nullopt);
  CHECK(parse_label("non-sarcastic", Task::sarcasm) == 0);
}

TEST_CASE("mock client is deterministic and parseable") {
  MockCompletionClient client(Task::humor, 7);
  CHECK(client.is_mock());
  CHECK(client.name() == "mock");

  const std::string prompt = "### System\nprobe\n\n### Input\nInput: x\nLabel:";
  const std::string r1 = client.send(prompt);
  const std::string r2 = client.send(prompt);
  CHECK(r1 == r2);
  CHECK(parse_label(r1, Task::humor).has_value());

  // Over many prompts both labels occur.
  std::set<int> seen;
  for (int i = 0; i < 40; ++i) {
    const auto parsed =
        parse_label(client.send(prompt + std::to_string(i)), Task::humor);
    REQUIRE(parsed.has_value());
    seen.insert(*parsed);
  }
  CHECK(seen == std::set<int>{0, 1});

  // A different seed changes at least one of 40 responses.
  MockCompletionClient other(Task::humor, 8);
  bool any_diff = false;
  for (int i = 0; i < 40; ++i) {
    any_diff |= other.send(prompt + std::to_string(i)) !=
                client.send(prompt + std::to_string(i));
  }
  CHECK(any_diff);
}

TEST_CASE("transcripts serialize hashes and abstentions") {
  TempDir dir;
  std::vector<TranscriptEntry> entries(2);
  entries[0].query_id = "q1";
  entries[0].prompt_hash = fnv1a64("p1");
  entries[0].response = "Label: humorous";
  entries[0].parsed_label = 1;
  entries[1].query_id = "q2";
  entries[1].prompt_hash = fnv1a64("p2");
  entries[1].response = "cannot tell";
  entries[1].parsed_label = kIgnoreLabel;

  const std::string path = dir.file("transcript.jsonl");
  save_transcript(entries, path);

  std::ifstream in(path);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("query_id") == "q1");
  CHECK(rows[0].at("prompt_hash") == std::to_string(fnv1a64("p1")));
  CHECK(rows[0].at("parsed_label") == 1);
  CHECK(rows[1].at("parsed_label") == 999);
}
