#include <cstdlib>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

#include "cmix/corpus.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace cmix;
using testsupport::TempDir;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(CMIX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

bool exists(const std::string& path) {
  return std::filesystem::exists(path);
}

}  // namespace

TEST_CASE("cli pipeline: split, baseline, eval, significance") {
  TempDir dir;
  const auto samples = testsupport::synthetic_task(Task::humor, 120, 5);
  save_jsonl(samples, dir.file("humor.jsonl"));

  CHECK(run_cli("split --data " + dir.file("humor.jsonl") + " --seed 3 --out " +
                dir.file("split")) == 0);
  CHECK(exists(dir.file("split/train.jsonl")));
  CHECK(exists(dir.file("split/val.jsonl")));
  CHECK(exists(dir.file("split/test.jsonl")));
  REQUIRE(exists(dir.file("split/manifest.json")));
  const auto manifest =
      nlohmann::json::parse(testsupport::read_file(dir.file("split/manifest.json")));
  CHECK(manifest.at("command") == "split");
  CHECK(manifest.at("config").at("seed") == 3);
  CHECK(manifest.contains("versions"));

  CHECK(run_cli("train-baseline --train " + dir.file("split/train.jsonl") +
                " --test " + dir.file("split/test.jsonl") + " --out " +
                dir.file("nb")) == 0);
  CHECK(exists(dir.file("nb/model.json")));
  CHECK(exists(dir.file("nb/predictions.jsonl")));
  CHECK(exists(dir.file("nb/report.json")));

  CHECK(run_cli("eval --pred " + dir.file("nb/predictions.jsonl") + " --data " +
                dir.file("split/test.jsonl") + " --out " + dir.file("ev")) == 0);
  const auto report =
      nlohmann::json::parse(testsupport::read_file(dir.file("ev/report.json")));
  // Marker tokens make the baseline task trivially separable.
  CHECK(report.at("humor").at("f1").get<double>() == doctest::Approx(1.0));

  CHECK(run_cli("significance --pred-a " + dir.file("nb/predictions.jsonl") +
                " --pred-b " + dir.file("nb/predictions.jsonl") + " --data " +
                dir.file("split/test.jsonl") +
                " --task humor --n-perm 1000 --out " + dir.file("sig")) == 0);
  const auto sig =
      nlohmann::json::parse(testsupport::read_file(dir.file("sig/significance.json")));
  CHECK(sig.at("p_value").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("cli stats and shots emit their artifacts") {
  TempDir dir;
  const auto samples = testsupport::synthetic_task(Task::hate, 60, 2);
  save_jsonl(samples, dir.file("hate.jsonl"));
  testsupport::write_file(dir.file("lex.txt"), "slur\n");

  CHECK(run_cli("stats --data " + dir.file("hate.jsonl") + " --lexicon " +
                dir.file("lex.txt") + " --out " + dir.file("st")) == 0);
  const auto stats =
      nlohmann::json::parse(testsupport::read_file(dir.file("st/stats.json")));
  CHECK(stats.at("n_pos") == 30);
  CHECK(stats.at("n_neg") == 30);
  // Every positive sample carries the marker term; no negative does.
  CHECK(stats.at("hurtful_fraction_pos").get<double>() == doctest::Approx(1.0));
  CHECK(stats.at("hurtful_fraction_neg").get<double>() == doctest::Approx(0.0));

  CHECK(run_cli("shots --pool " + dir.file("hate.jsonl") +
                " --k 4 --seed 2 --out " + dir.file("sh")) == 0);
  CHECK(exists(dir.file("sh/shots.jsonl")));
  CHECK(load_jsonl(dir.file("sh/shots.jsonl")).size() == 4);
}

TEST_CASE("cli maps validation problems to exit 1") {
  TempDir dir;
  testsupport::write_file(
      dir.file("bad.jsonl"),
      R"({"id":"a","text":"x","task":"humor","label":5,"origin":"code_mixed","dataset":"d"})"
      "\n");
  CHECK(run_cli("split --data " + dir.file("bad.jsonl") + " --out " +
                dir.file("out")) == 1);
  CHECK(run_cli("frobnicate --data x") == 1);
  CHECK(run_cli("split") == 1);  // missing required flags
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli mix reports shortfalls as validation errors") {
  TempDir dir;
  const auto train = testsupport::synthetic_task(Task::humor, 20, 1);
  save_jsonl(train, dir.file("train.jsonl"));
  std::vector<Sample> pool = testsupport::synthetic_task(Task::humor, 40, 2);
  for (auto& s : pool) s.id = "pool-" + s.id;
  save_jsonl(pool, dir.file("pool.jsonl"));

  CHECK(run_cli("mix --train " + dir.file("train.jsonl") + " --pool " +
                dir.file("pool.jsonl") + " --per-class 10 --out " +
                dir.file("ok")) == 0);
  CHECK(load_jsonl(dir.file("ok/mixed.jsonl")).size() == 40);

  CHECK(run_cli("mix --train " + dir.file("train.jsonl") + " --pool " +
                dir.file("pool.jsonl") + " --per-class 999999 --out " +
                dir.file("bad")) == 1);
}
