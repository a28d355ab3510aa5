// Command-line surface for the code-mixed classification toolkit. Every verb
// writes its outputs plus a manifest.json (flags, seeds, versions) under
// --out and prints one JSON summary to stdout.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cmix/checkpoint.hpp"
#include "cmix/corpus.hpp"
#include "cmix/eval.hpp"
#include "cmix/mtl.hpp"
#include "cmix/ngram_nb.hpp"
#include "cmix/prompting.hpp"
#include "cmix/stats.hpp"
#include "cmix/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cmix;

namespace {

constexpr const char* kToolkitVersion = "0.1.0";

json version_block() {
  return json{{"cmix", kToolkitVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)}};
}

void write_manifest(const fs::path& out_dir, const std::string& verb,
                    const json& config, const std::vector<std::string>& outputs) {
  json manifest{{"command", verb},
                {"config", config},
                {"versions", version_block()},
                {"outputs", outputs}};
  std::ofstream f(out_dir / "manifest.json");
  if (!f) throw cmix::ParseError("cannot write manifest under " + out_dir.string());
  f << manifest.dump(2) << "\n";
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::vector<Task> parse_task_list(const std::string& csv) {
  std::vector<Task> tasks;
  std::string item;
  std::istringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) tasks.push_back(task_from_string(item));
  }
  if (tasks.empty()) throw ValidationError("empty task list");
  return tasks;
}

std::set<int> parse_int_set(const std::string& csv) {
  std::set<int> out;
  std::string item;
  std::istringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  if (out.empty()) throw ValidationError("empty integer list");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::string item;
  std::istringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  if (out.empty()) throw ValidationError("empty seed list");
  return out;
}

json report_to_json_obj(const EvalReport& r) {
  return json::parse(to_json(r));
}

// Shared knobs for the two neural training verbs.
struct NeuralFlags {
  double lr = 2e-4;
  std::string optimizer = "adamw";
  double gamma = 0.9;
  int batch_size = 32;
  int seq_len = 64;
  int patience = 4;
  int max_epochs = 30;
  std::string seeds_csv = "13,42,2025";
  double lambda = 0.0;
  int layers = 6;
  int bottom = 4;
  int dim = 64;
  int heads = 4;
  int min_freq = 1;
  double train_ratio = 0.8, val_ratio = 0.1, test_ratio = 0.1;
  std::uint64_t split_seed = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--optimizer", optimizer, "sgd or adamw");
    cmd->add_option("--gamma", gamma, "per-epoch lr decay factor");
    cmd->add_option("--batch", batch_size, "batch size");
    cmd->add_option("--seq-len", seq_len, "encoded sequence length");
    cmd->add_option("--patience", patience, "early-stopping patience");
    cmd->add_option("--epochs", max_epochs, "max epochs");
    cmd->add_option("--seeds", seeds_csv, "comma-separated training seeds");
    cmd->add_option("--lambda", lambda, "soft-sharing penalty strength");
    cmd->add_option("--layers", layers, "encoder layer count");
    cmd->add_option("--bottom", bottom, "bottom-module layer count");
    cmd->add_option("--dim", dim, "hidden width");
    cmd->add_option("--heads", heads, "attention heads");
    cmd->add_option("--min-freq", min_freq, "vocabulary frequency cutoff");
    cmd->add_option("--train-ratio", train_ratio, "train split ratio");
    cmd->add_option("--val-ratio", val_ratio, "val split ratio");
    cmd->add_option("--test-ratio", test_ratio, "test split ratio");
    cmd->add_option("--split-seed", split_seed, "stratified split seed");
  }

  TrainConfig to_train_config() const {
    TrainConfig cfg;
    cfg.lr = lr;
    cfg.optimizer = optimizer;
    cfg.scheduler_gamma = gamma;
    cfg.batch_size = batch_size;
    cfg.seq_len = seq_len;
    cfg.patience = patience;
    cfg.max_epochs = max_epochs;
    cfg.seeds = parse_seed_list(seeds_csv);
    cfg.lambda = lambda;
    return cfg;
  }

  json to_json_obj() const {
    return json{{"lr", lr},         {"optimizer", optimizer},
                {"gamma", gamma},   {"batch", batch_size},
                {"seq_len", seq_len}, {"patience", patience},
                {"epochs", max_epochs}, {"seeds", seeds_csv},
                {"lambda", lambda}, {"layers", layers},
                {"bottom", bottom}, {"dim", dim},
                {"heads", heads},   {"min_freq", min_freq},
                {"train_ratio", train_ratio}, {"val_ratio", val_ratio},
                {"test_ratio", test_ratio},   {"split_seed", split_seed}};
  }
};

json run_stats(const std::string& data, const std::string& lexicon_path,
               double alpha, const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const std::vector<Sample> samples = load_jsonl(data);
  const Lexicon lexicon =
      lexicon_path.empty() ? Lexicon{} : load_lexicon(lexicon_path);
  const StatReport report = dataset_report(samples, lexicon, alpha);
  {
    std::ofstream f(dir / "stats.json");
    f << to_json(report) << "\n";
  }
  write_manifest(dir, "stats",
                 json{{"data", data}, {"lexicon", lexicon_path}, {"alpha", alpha}},
                 {"stats.json"});
  json summary = json::parse(to_json(report));
  summary["command"] = "stats";
  summary["out"] = out;
  return summary;
}

json run_split(const std::string& data, double train_ratio, double val_ratio,
               double test_ratio, std::uint64_t seed, const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const std::vector<Sample> samples = load_jsonl(data);
  SplitSpec spec;
  spec.train_ratio = train_ratio;
  spec.val_ratio = val_ratio;
  spec.test_ratio = test_ratio;
  spec.seed = seed;
  const SplitResult split = stratified_split(samples, spec);
  save_jsonl(split.train, (dir / "train.jsonl").string());
  save_jsonl(split.val, (dir / "val.jsonl").string());
  save_jsonl(split.test, (dir / "test.jsonl").string());
  write_manifest(dir, "split",
                 json{{"data", data},
                      {"train_ratio", train_ratio},
                      {"val_ratio", val_ratio},
                      {"test_ratio", test_ratio},
                      {"seed", seed}},
                 {"train.jsonl", "val.jsonl", "test.jsonl"});
  return json{{"command", "split"},
              {"train", split.train.size()},
              {"val", split.val.size()},
              {"test", split.test.size()},
              {"out", out}};
}

json run_mix(const std::string& train_path, const std::string& pool_path,
             std::size_t per_class, std::uint64_t seed, const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const std::vector<Sample> cm_train = load_jsonl(train_path);
  const std::vector<Sample> pool = load_jsonl(pool_path);
  const std::vector<Sample> mixed = mix_native(cm_train, pool, per_class, seed);
  save_jsonl(mixed, (dir / "mixed.jsonl").string());
  std::size_t pos = 0, neg = 0;
  for (const Sample& s : mixed) (s.label == 1 ? pos : neg) += 1;
  write_manifest(dir, "mix",
                 json{{"train", train_path},
                      {"pool", pool_path},
                      {"per_class", per_class},
                      {"seed", seed}},
                 {"mixed.jsonl"});
  return json{{"command", "mix"}, {"total", mixed.size()},
              {"positives", pos}, {"negatives", neg},
              {"out", out}};
}

json run_train_baseline(const std::string& train_path, const std::string& test_path,
                        const std::string& ngrams_csv, double alpha,
                        const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const std::vector<Sample> train = load_jsonl(train_path);
  const std::set<int> n_set = parse_int_set(ngrams_csv);
  const NGramNB model = fit_nb(train, n_set, alpha);
  model.save((dir / "model.json").string());

  json summary{{"command", "train-baseline"}, {"out", out},
               {"train_size", train.size()}};
  std::vector<std::string> outputs = {"model.json"};
  if (!test_path.empty()) {
    const std::vector<Sample> test = load_jsonl(test_path);
    std::vector<Prediction> preds;
    std::vector<int> yhat, gold;
    for (const Sample& s : test) {
      const auto [label, log_odds] = model.predict(s.text);
      preds.push_back({s.id, s.task, label, 1.0 / (1.0 + std::exp(-log_odds))});
      yhat.push_back(label);
      gold.push_back(s.label);
    }
    save_predictions(preds, (dir / "predictions.jsonl").string());
    const EvalReport report = prf1(yhat, gold);
    {
      std::ofstream f(dir / "report.json");
      f << to_json(report) << "\n";
    }
    outputs.push_back("predictions.jsonl");
    outputs.push_back("report.json");
    summary["test"] = report_to_json_obj(report);
  }
  write_manifest(dir, "train-baseline",
                 json{{"train", train_path},
                      {"test", test_path},
                      {"ngrams", ngrams_csv},
                      {"alpha", alpha}},
                 outputs);
  return summary;
}

struct PreparedTask {
  Task task;
  SplitResult split;
  TaskLossSpec loss_spec;
};

PreparedTask prepare_task(Task task, const std::string& path, const NeuralFlags& flags) {
  PreparedTask prepared;
  prepared.task = task;
  const std::vector<Sample> samples = load_jsonl(path);
  for (const Sample& s : samples) {
    if (s.task != task) {
      throw ValidationError(path + ": sample '" + s.id + "' is labeled for task " +
                            to_string(s.task) + ", expected " + to_string(task));
    }
  }
  SplitSpec spec;
  spec.train_ratio = flags.train_ratio;
  spec.val_ratio = flags.val_ratio;
  spec.test_ratio = flags.test_ratio;
  spec.seed = derive_seed(flags.split_seed, static_cast<std::uint64_t>(task));
  prepared.split = stratified_split(samples, spec);
  std::size_t pos = 0, neg = 0;
  for (const Sample& s : prepared.split.train) (s.label == 1 ? pos : neg) += 1;
  prepared.loss_spec = TaskLossSpec::from_counts(pos, neg);
  return prepared;
}

json seed_metrics_json(const SeedAggregate& agg) {
  json per_seed = json::array();
  for (const SeedRunResult& run : agg.runs) {
    json tasks = json::object();
    for (const auto& [task, report] : run.val_metrics) {
      tasks[to_string(task)] = report_to_json_obj(report);
    }
    per_seed.push_back(json{{"seed", run.seed},
                            {"chosen_epoch", run.history.chosen_epoch},
                            {"val", std::move(tasks)}});
  }
  json mean = json::object();
  for (const auto& [task, f1] : agg.mean_f1) {
    mean[to_string(task)] = json{{"f1", f1},
                                 {"precision", agg.mean_precision.at(task)},
                                 {"recall", agg.mean_recall.at(task)}};
  }
  return json{{"per_seed", std::move(per_seed)}, {"mean_val", std::move(mean)}};
}

json run_train_mtl(const std::vector<std::string>& data_args, bool gate,
                   const std::string& primary_name, const NeuralFlags& flags,
                   const std::string& out) {
  const fs::path dir = prepare_out_dir(out);

  std::map<Task, std::string> paths;
  for (const std::string& arg : data_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("--data expects task=path, got '" + arg + "'");
    }
    paths[task_from_string(arg.substr(0, eq))] = arg.substr(eq + 1);
  }
  if (paths.size() < 2) {
    throw ValidationError("train-mtl needs at least two --data task=path pairs");
  }

  std::map<Task, std::vector<Sample>> train_sets, val_sets;
  JointLossConfig loss_cfg;
  std::vector<Task> task_list;
  std::vector<Sample> vocab_corpus;
  for (const auto& [task, path] : paths) {
    PreparedTask prepared = prepare_task(task, path, flags);
    task_list.push_back(task);
    loss_cfg.task_specs[task] = prepared.loss_spec;
    vocab_corpus.insert(vocab_corpus.end(), prepared.split.train.begin(),
                        prepared.split.train.end());
    train_sets[task] = std::move(prepared.split.train);
    val_sets[task] = std::move(prepared.split.val);
  }
  loss_cfg.lambda = flags.lambda;

  TrainData data;
  data.train = build_multitask_view(train_sets);
  data.val = build_multitask_view(val_sets);
  const Tokenizer tokenizer = build_vocab(vocab_corpus, flags.min_freq, flags.seq_len);

  GatedMtlConfig model_cfg;
  model_cfg.enc.L = flags.layers;
  model_cfg.enc.B = flags.bottom;
  model_cfg.enc.D = flags.dim;
  model_cfg.enc.H = flags.heads;
  model_cfg.enc.vocab_size = tokenizer.vocab_size();
  model_cfg.enc.max_len = flags.seq_len;
  model_cfg.task_list = task_list;
  model_cfg.gate_enabled = gate;

  const Task primary =
      primary_name.empty() ? task_list.front() : task_from_string(primary_name);
  const TrainConfig train_cfg = flags.to_train_config();

  std::unique_ptr<GatedMtlModel> last_model;
  auto factory = [&](std::uint64_t seed) -> std::unique_ptr<NeuralModel> {
    Rng rng(derive_seed(seed, 99));
    auto model = std::make_unique<GatedMtlModel>(model_cfg, rng);
    model->freeze_bottom();
    return model;
  };
  const SeedAggregate agg =
      run_seeds(factory, data, tokenizer, train_cfg, loss_cfg, primary);

  // Retrain nothing: persist the final seed's run by rebuilding it.
  Rng rng(derive_seed(train_cfg.seeds.back(), 99));
  GatedMtlModel model(model_cfg, rng);
  model.freeze_bottom();
  train(model, data, tokenizer, train_cfg, loss_cfg, primary,
        train_cfg.seeds.back());
  save_gated_mtl(model, (dir / "model.ckpt").string());

  const json metrics = seed_metrics_json(agg);
  {
    std::ofstream f(dir / "metrics.json");
    f << metrics.dump(2) << "\n";
  }
  for (const SeedRunResult& run : agg.runs) {
    save_history(run.history,
                 (dir / ("history_seed" + std::to_string(run.seed) + ".jsonl"))
                     .string());
  }

  json config = flags.to_json_obj();
  config["gate"] = gate;
  config["primary"] = to_string(primary);
  json data_json = json::object();
  for (const auto& [task, path] : paths) data_json[to_string(task)] = path;
  config["data"] = std::move(data_json);
  std::vector<std::string> outputs = {"metrics.json", "model.ckpt"};
  for (const SeedRunResult& run : agg.runs) {
    outputs.push_back("history_seed" + std::to_string(run.seed) + ".jsonl");
  }
  write_manifest(dir, "train-mtl", config, outputs);

  json summary = metrics;
  summary["command"] = "train-mtl";
  summary["gate"] = gate;
  summary["out"] = out;
  return summary;
}

json run_train_single(const std::string& task_name, const std::string& data_path,
                      int freeze_layers_flag, const NeuralFlags& flags,
                      const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const Task task = task_from_string(task_name);
  PreparedTask prepared = prepare_task(task, data_path, flags);

  JointLossConfig loss_cfg;
  loss_cfg.task_specs[task] = prepared.loss_spec;

  TrainData data;
  data.train = single_task_view(prepared.split.train);
  data.val = single_task_view(prepared.split.val);
  const Tokenizer tokenizer =
      build_vocab(prepared.split.train, flags.min_freq, flags.seq_len);

  EncoderConfig enc;
  enc.L = flags.layers;
  enc.B = std::min(flags.bottom, flags.layers - 1);
  enc.D = flags.dim;
  enc.H = flags.heads;
  enc.vocab_size = tokenizer.vocab_size();
  enc.max_len = flags.seq_len;

  const int freeze_k =
      freeze_layers_flag < 0 ? std::max(0, flags.layers - 4) : freeze_layers_flag;
  const TrainConfig train_cfg = flags.to_train_config();

  auto factory = [&](std::uint64_t seed) -> std::unique_ptr<NeuralModel> {
    Rng rng(derive_seed(seed, 99));
    auto model = std::make_unique<SingleTaskModel>(enc, task, rng);
    model->freeze_layers(freeze_k);
    return model;
  };
  const SeedAggregate agg =
      run_seeds(factory, data, tokenizer, train_cfg, loss_cfg, task);

  Rng rng(derive_seed(train_cfg.seeds.back(), 99));
  SingleTaskModel model(enc, task, rng);
  model.freeze_layers(freeze_k);
  train(model, data, tokenizer, train_cfg, loss_cfg, task,
        train_cfg.seeds.back());
  save_single_task(model, (dir / "model.ckpt").string());

  const json metrics = seed_metrics_json(agg);
  {
    std::ofstream f(dir / "metrics.json");
    f << metrics.dump(2) << "\n";
  }
  json config = flags.to_json_obj();
  config["task"] = task_name;
  config["data"] = data_path;
  config["freeze_layers"] = freeze_k;
  write_manifest(dir, "train-single", config, {"metrics.json", "model.ckpt"});

  json summary = metrics;
  summary["command"] = "train-single";
  summary["task"] = task_name;
  summary["out"] = out;
  return summary;
}

json run_eval(const std::string& pred_path, const std::string& data_path,
              const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const std::vector<Prediction> preds = load_predictions(pred_path);
  const std::vector<Sample> golds = load_jsonl(data_path);
  std::map<std::string, int> gold_by_id;
  for (const Sample& s : golds) gold_by_id[s.id] = s.label;

  std::map<Task, std::vector<int>> yhat, y;
  for (const Prediction& p : preds) {
    const auto it = gold_by_id.find(p.id);
    if (it == gold_by_id.end()) {
      throw ValidationError("eval: prediction id '" + p.id +
                            "' not present in the gold file");
    }
    yhat[p.task].push_back(p.pred);
    y[p.task].push_back(it->second);
  }

  json reports = json::object();
  for (const auto& [task, preds_vec] : yhat) {
    reports[to_string(task)] = report_to_json_obj(prf1(preds_vec, y.at(task)));
  }
  {
    std::ofstream f(dir / "report.json");
    f << reports.dump(2) << "\n";
  }
  write_manifest(dir, "eval", json{{"pred", pred_path}, {"data", data_path}},
                 {"report.json"});
  return json{{"command", "eval"}, {"report", reports}, {"out", out}};
}

json run_significance(const std::string& pred_a, const std::string& pred_b,
                      const std::string& data_path, const std::string& task_name,
                      std::size_t n_perm, std::uint64_t seed,
                      const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const Task task = task_from_string(task_name);
  const std::vector<Sample> golds = load_jsonl(data_path);
  std::map<std::string, int> gold_by_id;
  for (const Sample& s : golds) gold_by_id[s.id] = s.label;

  auto aligned = [&](const std::string& path) {
    std::map<std::string, int> by_id;
    for (const Prediction& p : load_predictions(path)) {
      if (p.task == task) by_id[p.id] = p.pred;
    }
    return by_id;
  };
  const std::map<std::string, int> a = aligned(pred_a);
  const std::map<std::string, int> b = aligned(pred_b);

  std::vector<int> va, vb, vg;
  for (const auto& [id, pa] : a) {
    const auto itb = b.find(id);
    const auto itg = gold_by_id.find(id);
    if (itb == b.end()) {
      throw ValidationError("significance: id '" + id + "' missing from " + pred_b);
    }
    if (itg == gold_by_id.end()) {
      throw ValidationError("significance: id '" + id + "' missing from gold file");
    }
    va.push_back(pa);
    vb.push_back(itb->second);
    vg.push_back(itg->second);
  }

  const double p = significance(va, vb, vg, n_perm, seed);
  const double f1_a = prf1(va, vg).f1;
  const double f1_b = prf1(vb, vg).f1;
  json result{{"command", "significance"}, {"p_value", p},
              {"f1_a", f1_a},              {"f1_b", f1_b},
              {"n", va.size()},            {"n_perm", n_perm},
              {"out", out}};
  {
    std::ofstream f(dir / "significance.json");
    f << result.dump(2) << "\n";
  }
  write_manifest(dir, "significance",
                 json{{"pred_a", pred_a},
                      {"pred_b", pred_b},
                      {"data", data_path},
                      {"task", task_name},
                      {"n_perm", n_perm},
                      {"seed", seed}},
                 {"significance.json"});
  return result;
}

json run_shots(const std::string& pool_path, int k, std::uint64_t seed,
               const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  const std::vector<Sample> pool = load_jsonl(pool_path);
  const std::vector<Sample> shots = select_shots(pool, k, seed);
  save_jsonl(shots, (dir / "shots.jsonl").string());
  json ids = json::array();
  for (const Sample& s : shots) ids.push_back(s.id);
  write_manifest(dir, "shots",
                 json{{"pool", pool_path}, {"k", k}, {"seed", seed}},
                 {"shots.jsonl"});
  return json{{"command", "shots"}, {"ids", ids}, {"out", out}};
}

json run_prompt_render(const std::string& task_name, const std::string& pool_path,
                       const std::string& queries_path, int k, std::uint64_t seed,
                       bool send, const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  PromptConfig cfg;
  cfg.task = task_from_string(task_name);
  cfg.k = k;
  cfg.seed = seed;
  bool in_grid = false;
  for (const int g : kShotGrid) in_grid = in_grid || g == k;
  if (!in_grid) {
    throw ValidationError("prompt-render: k must be one of 0,2,4,8,12");
  }

  const std::vector<Sample> pool = load_jsonl(pool_path);
  const std::vector<Sample> queries = load_jsonl(queries_path);
  const std::vector<Sample> shots = select_shots(pool, k, seed);

  std::ofstream prompts(dir / "prompts.jsonl");
  if (!prompts) throw cmix::ParseError("cannot write prompts.jsonl");
  std::vector<TranscriptEntry> transcript;
  std::vector<int> yhat, gold;
  MockCompletionClient client(cfg.task, seed);
  for (const Sample& q : queries) {
    const std::string prompt = render_prompt(cfg, shots, q);
    prompts << json{{"id", q.id}, {"prompt", prompt}}.dump() << "\n";
    if (!send) continue;
    TranscriptEntry entry;
    entry.query_id = q.id;
    entry.prompt_hash = fnv1a64(prompt);
    entry.response = client.send(prompt);
    const std::optional<int> parsed = parse_label(entry.response, cfg.task);
    entry.parsed_label = parsed.value_or(kIgnoreLabel);
    transcript.push_back(entry);
    // Abstentions count as wrong: score them as the opposite of the gold.
    yhat.push_back(parsed.value_or(1 - q.label));
    gold.push_back(q.label);
  }

  std::vector<std::string> outputs = {"prompts.jsonl"};
  json summary{{"command", "prompt-render"},
               {"queries", queries.size()},
               {"shots", k},
               {"out", out}};
  if (send) {
    save_transcript(transcript, (dir / "transcript.jsonl").string());
    outputs.push_back("transcript.jsonl");
    const EvalReport report = prf1(yhat, gold);
    {
      std::ofstream f(dir / "report.json");
      f << to_json(report) << "\n";
    }
    outputs.push_back("report.json");
    summary["report"] = report_to_json_obj(report);
    summary["client"] = "mock";
  }
  write_manifest(dir, "prompt-render",
                 json{{"task", task_name},
                      {"pool", pool_path},
                      {"queries", queries_path},
                      {"k", k},
                      {"seed", seed},
                      {"send", send}},
                 outputs);
  return summary;
}

json run_gradcheck(int dim, int layers, int bottom, int heads,
                   const std::string& tasks_csv, double lambda, double step,
                   std::size_t coords, std::uint64_t seed, const std::string& out) {
  const fs::path dir = prepare_out_dir(out);
  GatedMtlConfig cfg;
  cfg.enc.L = layers;
  cfg.enc.B = bottom;
  cfg.enc.D = dim;
  cfg.enc.H = heads;
  cfg.enc.vocab_size = 23;
  cfg.enc.max_len = 8;
  cfg.task_list = parse_task_list(tasks_csv);

  Rng rng(derive_seed(seed, 5));
  GatedMtlModel model(cfg, rng);
  model.freeze_bottom();

  // Random token batch with one ignore row per task.
  MultiTaskBatch batch;
  const std::size_t bs = 4, S = 6;
  for (std::size_t s = 0; s < bs; ++s) {
    std::vector<int> ids{2};
    std::vector<int> mask{1};
    const std::size_t text_len = 3 + s % 3;
    for (std::size_t j = 0; j < text_len; ++j) {
      ids.push_back(static_cast<int>(3 + rng.below(20)));
      mask.push_back(1);
    }
    ids.resize(S, 0);
    mask.resize(S, 0);
    batch.token_ids.push_back(std::move(ids));
    batch.attention_mask.push_back(std::move(mask));
  }
  JointLossConfig loss_cfg;
  loss_cfg.lambda = lambda;
  for (std::size_t t = 0; t < cfg.task_list.size(); ++t) {
    std::vector<int> labels;
    for (std::size_t s = 0; s < bs; ++s) {
      labels.push_back(s == t ? kIgnoreLabel
                              : static_cast<int>(rng.below(2)));
    }
    batch.labels[cfg.task_list[t]] = std::move(labels);
    loss_cfg.task_specs[cfg.task_list[t]] = TaskLossSpec{0.5, 0.5};
  }

  const GradCheckReport report = grad_check(model, batch, loss_cfg, step, coords, seed);
  json result{{"command", "gradcheck"},
              {"max_rel_err", report.max_rel_err},
              {"checked", report.checked},
              {"frozen_exact_zero", report.frozen_exact_zero},
              {"out", out}};
  {
    std::ofstream f(dir / "gradcheck.json");
    f << result.dump(2) << "\n";
  }
  write_manifest(dir, "gradcheck",
                 json{{"dim", dim},
                      {"layers", layers},
                      {"bottom", bottom},
                      {"heads", heads},
                      {"tasks", tasks_csv},
                      {"lambda", lambda},
                      {"step", step},
                      {"coords", coords},
                      {"seed", seed}},
                 {"gradcheck.json"});
  return result;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"code-mixed humour/sarcasm/hate classification toolkit"};
  app.require_subcommand(1);
  json summary;

  // stats
  std::string st_data, st_lexicon, st_out;
  double st_alpha = 1.0;
  auto* stats_cmd = app.add_subcommand("stats", "corpus statistics report");
  stats_cmd->add_option("--data", st_data, "sample file (jsonl)")->required();
  stats_cmd->add_option("--lexicon", st_lexicon, "keyword list, one term per line");
  stats_cmd->add_option("--alpha", st_alpha, "smoothing constant");
  stats_cmd->add_option("--out", st_out, "output directory")->required();
  stats_cmd->callback(
      [&] { summary = run_stats(st_data, st_lexicon, st_alpha, st_out); });

  // split
  std::string sp_data, sp_out;
  double sp_train = 0.8, sp_val = 0.1, sp_test = 0.1;
  std::uint64_t sp_seed = 0;
  auto* split_cmd = app.add_subcommand("split", "stratified train/val/test split");
  split_cmd->add_option("--data", sp_data, "sample file (jsonl)")->required();
  split_cmd->add_option("--train-ratio", sp_train, "train ratio");
  split_cmd->add_option("--val-ratio", sp_val, "val ratio");
  split_cmd->add_option("--test-ratio", sp_test, "test ratio");
  split_cmd->add_option("--seed", sp_seed, "split seed");
  split_cmd->add_option("--out", sp_out, "output directory")->required();
  split_cmd->callback([&] {
    summary = run_split(sp_data, sp_train, sp_val, sp_test, sp_seed, sp_out);
  });

  // mix
  std::string mx_train, mx_pool, mx_out;
  std::size_t mx_per_class = 0;
  std::uint64_t mx_seed = 0;
  auto* mix_cmd = app.add_subcommand("mix", "augment with native samples");
  mix_cmd->add_option("--train", mx_train, "code-mixed train file")->required();
  mix_cmd->add_option("--pool", mx_pool, "native pool file")->required();
  mix_cmd->add_option("--per-class", mx_per_class, "samples per class")->required();
  mix_cmd->add_option("--seed", mx_seed, "draw seed");
  mix_cmd->add_option("--out", mx_out, "output directory")->required();
  mix_cmd->callback([&] {
    summary = run_mix(mx_train, mx_pool, mx_per_class, mx_seed, mx_out);
  });

  // train-baseline
  std::string nb_train, nb_test, nb_out, nb_ngrams = "1,2,3";
  double nb_alpha = 1.0;
  auto* nb_cmd = app.add_subcommand("train-baseline", "n-gram Naive Bayes");
  nb_cmd->add_option("--train", nb_train, "train file")->required();
  nb_cmd->add_option("--test", nb_test, "optional test file");
  nb_cmd->add_option("--ngrams", nb_ngrams, "comma-separated n-gram orders");
  nb_cmd->add_option("--alpha", nb_alpha, "smoothing constant");
  nb_cmd->add_option("--out", nb_out, "output directory")->required();
  nb_cmd->callback([&] {
    summary = run_train_baseline(nb_train, nb_test, nb_ngrams, nb_alpha, nb_out);
  });

  // train-single
  std::string ts_task, ts_data, ts_out;
  int ts_freeze = -1;
  NeuralFlags ts_flags;
  auto* ts_cmd = app.add_subcommand("train-single", "single-task fine-tuning");
  ts_cmd->add_option("--task", ts_task, "humor, sarcasm or hate")->required();
  ts_cmd->add_option("--data", ts_data, "sample file (jsonl)")->required();
  ts_cmd->add_option("--freeze-layers", ts_freeze,
                     "freeze embeddings + this many lowest layers (-1 = all but top 4)");
  ts_flags.add_to(ts_cmd);
  ts_cmd->add_option("--out", ts_out, "output directory")->required();
  ts_cmd->callback([&] {
    summary = run_train_single(ts_task, ts_data, ts_freeze, ts_flags, ts_out);
  });

  // train-mtl
  std::vector<std::string> mt_data;
  std::string mt_primary, mt_out;
  bool mt_gate = true;
  NeuralFlags mt_flags;
  auto* mt_cmd = app.add_subcommand("train-mtl", "gated multi-task training");
  mt_cmd->add_option("--data", mt_data, "task=path pairs (repeatable)")->required();
  mt_cmd->add_flag("--gate,!--no-gate", mt_gate, "enable the fusion gate");
  mt_cmd->add_option("--primary", mt_primary, "task driving early stopping");
  mt_flags.add_to(mt_cmd);
  mt_cmd->add_option("--out", mt_out, "output directory")->required();
  mt_cmd->callback([&] {
    summary = run_train_mtl(mt_data, mt_gate, mt_primary, mt_flags, mt_out);
  });

  // eval
  std::string ev_pred, ev_data, ev_out;
  auto* ev_cmd = app.add_subcommand("eval", "positive-class precision/recall/F1");
  ev_cmd->add_option("--pred", ev_pred, "prediction file (jsonl)")->required();
  ev_cmd->add_option("--data", ev_data, "gold sample file (jsonl)")->required();
  ev_cmd->add_option("--out", ev_out, "output directory")->required();
  ev_cmd->callback([&] { summary = run_eval(ev_pred, ev_data, ev_out); });

  // significance
  std::string sg_a, sg_b, sg_data, sg_task, sg_out;
  std::size_t sg_nperm = 10000;
  std::uint64_t sg_seed = 0;
  auto* sg_cmd = app.add_subcommand("significance",
                                    "approximate-randomization F1 comparison");
  sg_cmd->add_option("--pred-a", sg_a, "first prediction file")->required();
  sg_cmd->add_option("--pred-b", sg_b, "second prediction file")->required();
  sg_cmd->add_option("--data", sg_data, "gold sample file")->required();
  sg_cmd->add_option("--task", sg_task, "task to compare")->required();
  sg_cmd->add_option("--n-perm", sg_nperm, "permutation count");
  sg_cmd->add_option("--seed", sg_seed, "permutation seed");
  sg_cmd->add_option("--out", sg_out, "output directory")->required();
  sg_cmd->callback([&] {
    summary = run_significance(sg_a, sg_b, sg_data, sg_task, sg_nperm, sg_seed, sg_out);
  });

  // shots
  std::string sh_pool, sh_out;
  int sh_k = 0;
  std::uint64_t sh_seed = 0;
  auto* sh_cmd = app.add_subcommand("shots", "clustering-based exemplar selection");
  sh_cmd->add_option("--pool", sh_pool, "candidate pool (jsonl)")->required();
  sh_cmd->add_option("--k", sh_k, "number of shots")->required();
  sh_cmd->add_option("--seed", sh_seed, "clustering seed");
  sh_cmd->add_option("--out", sh_out, "output directory")->required();
  sh_cmd->callback([&] { summary = run_shots(sh_pool, sh_k, sh_seed, sh_out); });

  // prompt-render
  std::string pr_task, pr_pool, pr_queries, pr_out;
  int pr_k = 0;
  std::uint64_t pr_seed = 0;
  bool pr_send = false;
  auto* pr_cmd = app.add_subcommand("prompt-render", "few-shot prompt construction");
  pr_cmd->add_option("--task", pr_task, "humor, sarcasm or hate")->required();
  pr_cmd->add_option("--pool", pr_pool, "shot candidate pool (jsonl)")->required();
  pr_cmd->add_option("--queries", pr_queries, "query sample file (jsonl)")->required();
  pr_cmd->add_option("--shots", pr_k, "number of shots (0,2,4,8,12)");
  pr_cmd->add_option("--seed", pr_seed, "selection/mock seed");
  pr_cmd->add_flag("--send", pr_send, "send prompts to the mock client");
  pr_cmd->add_option("--out", pr_out, "output directory")->required();
  pr_cmd->callback([&] {
    summary = run_prompt_render(pr_task, pr_pool, pr_queries, pr_k, pr_seed,
                                pr_send, pr_out);
  });

  // gradcheck
  int gc_dim = 4, gc_layers = 2, gc_bottom = 1, gc_heads = 2;
  std::string gc_tasks = "humor,sarcasm", gc_out;
  double gc_lambda = 5e-2, gc_step = 1e-5;
  std::size_t gc_coords = 200;
  std::uint64_t gc_seed = 7;
  auto* gc_cmd = app.add_subcommand("gradcheck",
                                    "finite-difference gradient verification");
  gc_cmd->add_option("--dim", gc_dim, "hidden width");
  gc_cmd->add_option("--layers", gc_layers, "layer count");
  gc_cmd->add_option("--bottom", gc_bottom, "bottom layers");
  gc_cmd->add_option("--heads", gc_heads, "attention heads");
  gc_cmd->add_option("--tasks", gc_tasks, "comma-separated tasks");
  gc_cmd->add_option("--lambda", gc_lambda, "sharing penalty strength");
  gc_cmd->add_option("--step", gc_step, "finite-difference step");
  gc_cmd->add_option("--coords", gc_coords, "minimum coordinates to sample");
  gc_cmd->add_option("--seed", gc_seed, "sampling seed");
  gc_cmd->add_option("--out", gc_out, "output directory")->required();
  gc_cmd->callback([&] {
    summary = run_gradcheck(gc_dim, gc_layers, gc_bottom, gc_heads, gc_tasks,
                            gc_lambda, gc_step, gc_coords, gc_seed, gc_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  } catch (const cmix::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const cmix::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }

  std::cout << summary.dump(2) << "\n";
  return 0;
}
