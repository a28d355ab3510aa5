#include "cmix/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cmix/rng.hpp"
#include "cmix/text.hpp"
#include "json.hpp"

namespace cmix {

using nlohmann::json;

namespace {

Sample sample_from_json(const json& j, const std::string& where) {
  for (const char* field : {"id", "text", "task", "label", "origin", "dataset"}) {
    if (!j.contains(field)) {
      throw ValidationError(where + ": missing field '" + field + "'");
    }
  }
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.text = trim_whitespace(j.at("text").get<std::string>());
  if (s.text.empty()) {
    throw ValidationError(where + ": text is empty after trimming");
  }
  try {
    s.task = task_from_string(j.at("task").get<std::string>());
    s.origin = origin_from_string(j.at("origin").get<std::string>());
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  if (!j.at("label").is_number_integer()) {
    throw ValidationError(where + ": label must be an integer");
  }
  s.label = j.at("label").get<int>();
  if (s.label != 0 && s.label != 1 && s.label != kIgnoreLabel) {
    throw ValidationError(where + ": label must be 0, 1 or 999, got " +
                          std::to_string(s.label));
  }
  s.dataset = j.at("dataset").get<std::string>();
  return s;
}

json sample_to_json(const Sample& s) {
  return json{{"id", s.id},         {"text", s.text},
              {"task", to_string(s.task)}, {"label", s.label},
              {"origin", to_string(s.origin)}, {"dataset", s.dataset}};
}

}  // namespace

std::vector<Sample> parse_jsonl(std::istream& in, const std::string& source_name) {
  std::vector<Sample> samples;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_whitespace(line).empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed record: " + e.what());
    }
    Sample s = sample_from_json(j, where);
    if (!seen_ids.insert(s.id).second) {
      throw ValidationError(where + ": duplicate id '" + s.id + "'");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_jsonl(in, path);
}

void save_jsonl(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  for (const Sample& s : samples) out << sample_to_json(s).dump() << "\n";
}

SplitResult stratified_split(const std::vector<Sample>& samples, const SplitSpec& spec) {
  spec.validate();
  std::map<int, std::vector<std::size_t>> by_class;
  Task task = samples.empty() ? Task::humor : samples.front().task;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.task != task) {
      throw ValidationError("stratified_split: samples span multiple tasks");
    }
    if (s.label != 0 && s.label != 1) {
      throw ValidationError("stratified_split: labels must be 0 or 1, sample '" +
                            s.id + "' has " + std::to_string(s.label));
    }
    by_class[s.label].push_back(i);
  }
  for (int label : {0, 1}) {
    if (by_class[label].empty()) {
      throw ValidationError("stratified_split: class " + std::to_string(label) +
                            " is empty");
    }
  }

  SplitResult out;
  for (auto& [label, indices] : by_class) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(indices);
    const std::size_t n = indices.size();
    // Nearest-integer sizes for val/test reproduce the published per-split
    // class counts; train absorbs the remainder so nothing is dropped.
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(spec.val_ratio * static_cast<double>(n)));
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(spec.test_ratio * static_cast<double>(n)));
    if (n_val + n_test > n) n_test = n - n_val;
    std::size_t i = 0;
    for (; i < n_val; ++i) out.val.push_back(samples[indices[i]]);
    for (; i < n_val + n_test; ++i) out.test.push_back(samples[indices[i]]);
    for (; i < n; ++i) out.train.push_back(samples[indices[i]]);
  }
  return out;
}

std::vector<Sample> mix_native(const std::vector<Sample>& cm_train,
                               const std::vector<Sample>& native_pool,
                               std::size_t per_class, std::uint64_t seed) {
  std::unordered_set<std::string> present;
  for (const Sample& s : cm_train) present.insert(s.id);

  std::array<std::vector<std::size_t>, 2> candidates;
  for (std::size_t i = 0; i < native_pool.size(); ++i) {
    const Sample& s = native_pool[i];
    if (s.label != 0 && s.label != 1) {
      throw ValidationError("mix_native: pool sample '" + s.id +
                            "' has non-binary label");
    }
    if (present.count(s.id)) continue;
    candidates[static_cast<std::size_t>(s.label)].push_back(i);
  }
  for (int label : {0, 1}) {
    const std::size_t have = candidates[static_cast<std::size_t>(label)].size();
    if (have < per_class) {
      throw ValidationError(
          "mix_native: class " + std::to_string(label) + " pool has " +
          std::to_string(have) + " usable samples, need " +
          std::to_string(per_class) + " (short by " +
          std::to_string(per_class - have) + ")");
    }
  }

  std::vector<Sample> out = cm_train;
  for (int label : {0, 1}) {
    auto& pool = candidates[static_cast<std::size_t>(label)];
    Rng rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(label)));
    rng.shuffle(pool);
    for (std::size_t i = 0; i < per_class; ++i) {
      out.push_back(native_pool[pool[i]]);
    }
  }
  return out;
}

std::vector<MultiTaskRow> build_multitask_view(
    const std::map<Task, std::vector<Sample>>& task_sets) {
  if (task_sets.size() < 2) {
    throw ValidationError("build_multitask_view: need at least 2 tasks");
  }
  std::vector<MultiTaskRow> rows;
  for (const auto& [task, samples] : task_sets) {
    for (const Sample& s : samples) {
      MultiTaskRow row;
      row.text = s.text;
      for (const auto& [t, unused] : task_sets) {
        row.labels[t] = (t == task) ? s.label : kIgnoreLabel;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<MultiTaskRow> single_task_view(const std::vector<Sample>& samples) {
  std::vector<MultiTaskRow> rows;
  rows.reserve(samples.size());
  for (const Sample& s : samples) {
    rows.push_back(MultiTaskRow{s.text, {{s.task, s.label}}});
  }
  return rows;
}

std::vector<MultiTaskBatch> batch_iter(const std::vector<MultiTaskRow>& rows,
                                       std::size_t batch_size, std::uint64_t seed,
                                       const Tokenizer& tokenizer) {
  if (batch_size == 0) {
    throw ValidationError("batch_iter: batch_size must be positive");
  }
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, 7));
  rng.shuffle(order);

  std::vector<Task> tasks;
  if (!rows.empty()) {
    for (const auto& [t, unused] : rows.front().labels) tasks.push_back(t);
  }

  std::vector<MultiTaskBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    MultiTaskBatch batch;
    for (Task t : tasks) batch.labels[t] = {};
    for (std::size_t k = start; k < end; ++k) {
      const MultiTaskRow& row = rows[order[k]];
      auto [ids, mask] = encode(tokenizer, row.text, tokenizer.max_len);
      batch.token_ids.push_back(std::move(ids));
      batch.attention_mask.push_back(std::move(mask));
      for (Task t : tasks) {
        auto it = row.labels.find(t);
        batch.labels[t].push_back(it == row.labels.end() ? kIgnoreLabel
                                                         : it->second);
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

void save_multitask_view(const std::vector<MultiTaskRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  for (const MultiTaskRow& row : rows) {
    json labels = json::object();
    for (const auto& [t, label] : row.labels) labels[to_string(t)] = label;
    out << json{{"text", row.text}, {"labels", labels}}.dump() << "\n";
  }
}

std::vector<MultiTaskRow> load_multitask_view(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<MultiTaskRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_whitespace(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": malformed record: " + e.what());
    }
    MultiTaskRow row;
    row.text = j.at("text").get<std::string>();
    for (const auto& [key, value] : j.at("labels").items()) {
      row.labels[task_from_string(key)] = value.get<int>();
    }
    bool any = false;
    for (const auto& [t, label] : row.labels) any = any || label != kIgnoreLabel;
    if (!any) throw ValidationError(where + ": row has no labeled task");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cmix
