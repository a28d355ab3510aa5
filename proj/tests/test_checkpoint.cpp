#include "doctest.h"

#include "cmix/checkpoint.hpp"
#include "support/tempdir.hpp"

using namespace cmix;
using testsupport::TempDir;

namespace {

MultiTaskBatch probe_batch() {
  MultiTaskBatch batch;
  batch.token_ids = {{2, 3, 4, 5}, {2, 6, 7, 0}};
  batch.attention_mask = {{1, 1, 1, 1}, {1, 1, 1, 0}};
  return batch;
}

GatedMtlConfig small_config() {
  GatedMtlConfig cfg;
  cfg.enc.L = 2;
  cfg.enc.B = 1;
  cfg.enc.D = 8;
  cfg.enc.H = 2;
  cfg.enc.vocab_size = 10;
  cfg.enc.max_len = 6;
  cfg.task_list = {Task::humor, Task::hate};
  return cfg;
}

}  // namespace

TEST_CASE("tensor files round-trip values and metadata bit-exactly") {
  TempDir dir;
  Tensor a("a", 2, 3, true), b("b", 1, 4, false);
  Rng rng(3);
  for (Eigen::Index r = 0; r < 2; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) a.v(r, c) = rng.normal();
  }
  b.v << 1.0, -2.5, 1e-300, 3.14159;

  const std::string path = dir.file("t.ckpt");
  save_tensors(path, R"({"note":"probe"})", {&a, &b});

  Tensor a2("a", 2, 3, true), b2("b", 1, 4, false);
  const LoadedCheckpoint loaded = load_tensors(path, {&a2, &b2});
  CHECK(loaded.metadata_json == R"({"note":"probe"})");
  CHECK(loaded.names == std::vector<std::string>{"a", "b"});
  CHECK((a2.v.array() == a.v.array()).all());
  CHECK((b2.v.array() == b.v.array()).all());

  CHECK(read_checkpoint_metadata(path) == R"({"note":"probe"})");
}

TEST_CASE("loading rejects shape or name mismatches and corrupt files") {
  TempDir dir;
  Tensor a("a", 2, 2, true);
  a.v << 1, 2, 3, 4;
  const std::string path = dir.file("t.ckpt");
  save_tensors(path, "{}", {&a});

  Tensor wrong_shape("a", 2, 3, true);
  CHECK_THROWS_WITH_AS(load_tensors(path, {&wrong_shape}),
                       doctest::Contains("shape"), ValidationError);

  Tensor wrong_name("z", 2, 2, true);
  CHECK_THROWS_AS(load_tensors(path, {&wrong_name}), ValidationError);

  Tensor extra("b", 1, 1, true);
  Tensor a_ok("a", 2, 2, true);
  CHECK_THROWS_AS(load_tensors(path, {&a_ok, &extra}), ValidationError);

  testsupport::write_file(dir.file("junk.ckpt"), "definitely not a checkpoint");
  CHECK_THROWS_WITH_AS(load_tensors(dir.file("junk.ckpt"), {&a_ok}),
                       doctest::Contains("not a checkpoint"), ValidationError);
  CHECK_THROWS_AS(load_tensors(dir.file("absent.ckpt"), {&a_ok}), ParseError);
}

TEST_CASE("gated model checkpoints restore identical predictions") {
  TempDir dir;
  Rng rng(17);
  GatedMtlModel model(small_config(), rng);
  model.freeze_bottom();

  const MultiTaskBatch batch = probe_batch();
  const auto before = model.forward(batch);

  const std::string path = dir.file("model.ckpt");
  save_gated_mtl(model, path);
  const std::unique_ptr<GatedMtlModel> back = load_gated_mtl(path);

  CHECK(back->config().enc.L == 2);
  CHECK(back->config().enc.D == 8);
  CHECK(back->gate_enabled());
  CHECK(back->tasks() == std::vector<Task>{Task::humor, Task::hate});

  const auto after = back->forward(batch);
  for (Task t : back->tasks()) {
    CHECK((before.at(t) - after.at(t)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("ablated-gate checkpoints restore the non-trainable gate state") {
  TempDir dir;
  GatedMtlConfig cfg = small_config();
  cfg.gate_enabled = false;
  Rng rng(17);
  GatedMtlModel model(cfg, rng);
  const std::string path = dir.file("model.ckpt");
  save_gated_mtl(model, path);

  const std::unique_ptr<GatedMtlModel> back = load_gated_mtl(path);
  CHECK_FALSE(back->gate_enabled());
  CHECK_FALSE(back->gates.at(Task::humor).w.trainable);

  const auto a = model.forward(probe_batch());
  const auto b = back->forward(probe_batch());
  CHECK((a.at(Task::hate) - b.at(Task::hate)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-task checkpoints round-trip task and predictions") {
  TempDir dir;
  EncoderConfig enc = small_config().enc;
  Rng rng(23);
  SingleTaskModel model(enc, Task::sarcasm, rng);

  const std::string path = dir.file("st.ckpt");
  save_single_task(model, path);
  const std::unique_ptr<SingleTaskModel> back = load_single_task(path);
  CHECK(back->task() == Task::sarcasm);

  const auto a = model.forward(probe_batch());
  const auto b = back->forward(probe_batch());
  CHECK((a.at(Task::sarcasm) - b.at(Task::sarcasm)).cwiseAbs().maxCoeff() == 0.0);

  // A gated-model file is not accepted by the single-task loader.
  Rng rng2(5);
  GatedMtlModel other(small_config(), rng2);
  save_gated_mtl(other, dir.file("g.ckpt"));
  CHECK_THROWS_AS(load_single_task(dir.file("g.ckpt")), ValidationError);
}
