#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cmix/sample.hpp"
#include "cmix/tokenizer.hpp"

namespace cmix {

// ---------------------------------------------------------------------------
// Line-delimited sample files. One JSON record per line with fields
// id, text, task, label, origin, dataset.
// ---------------------------------------------------------------------------

// Rejects duplicate ids, empty texts and out-of-domain fields; error messages
// carry the 1-based line number.
std::vector<Sample> load_jsonl(const std::string& path);
std::vector<Sample> parse_jsonl(std::istream& in, const std::string& source_name);

void save_jsonl(const std::vector<Sample>& samples, const std::string& path);

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

// Per class: val and test take the nearest integer to ratio*class_count, the
// remainder goes to train, so the three parts always partition the input.
// Membership is deterministic given spec.seed.
SplitResult stratified_split(const std::vector<Sample>& samples, const SplitSpec& spec);

// Returns cm_train plus per_class random positives and per_class random
// negatives drawn without replacement from native_pool. Pool samples whose id
// already appears in cm_train are never drawn. Errors name the class and the
// shortfall.
std::vector<Sample> mix_native(const std::vector<Sample>& cm_train,
                               const std::vector<Sample>& native_pool,
                               std::size_t per_class, std::uint64_t seed);

// One row per input sample; all tasks other than the sample's own carry
// kIgnoreLabel. Requires at least two tasks.
std::vector<MultiTaskRow> build_multitask_view(
    const std::map<Task, std::vector<Sample>>& task_sets);

// Single-task convenience view (no ignore entries).
std::vector<MultiTaskRow> single_task_view(const std::vector<Sample>& samples);

// Rows globally shuffled per seed, then chunked; the last partial batch is
// emitted. Texts are encoded with `tokenizer` at its max_len.
std::vector<MultiTaskBatch> batch_iter(const std::vector<MultiTaskRow>& rows,
                                       std::size_t batch_size, std::uint64_t seed,
                                       const Tokenizer& tokenizer);

// Exported multi-task view: one JSON record per line, ignore entries written
// as literal 999.
void save_multitask_view(const std::vector<MultiTaskRow>& rows, const std::string& path);
std::vector<MultiTaskRow> load_multitask_view(const std::string& path);

}  // namespace cmix
