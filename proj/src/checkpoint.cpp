#include "cmix/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

namespace cmix {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'M', 'I', 'X', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ostream& out, std::uint64_t x) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return x;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace

void save_tensors(const std::string& path, const std::string& metadata_json,
                  const std::vector<Tensor*>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint '" + path + "'");
  out.write(kMagic, sizeof(kMagic));
  std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  write_string(out, metadata_json);
  write_u64(out, tensors.size());
  for (const Tensor* t : tensors) {
    write_string(out, t->name);
    write_u64(out, static_cast<std::uint64_t>(t->v.rows()));
    write_u64(out, static_cast<std::uint64_t>(t->v.cols()));
    for (Eigen::Index r = 0; r < t->v.rows(); ++r) {
      for (Eigen::Index c = 0; c < t->v.cols(); ++c) {
        const double x = t->v(r, c);
        out.write(reinterpret_cast<const char*>(&x), sizeof(x));
      }
    }
  }
  if (!out) throw ParseError("short write to checkpoint '" + path + "'");
}

LoadedCheckpoint load_tensors(const std::string& path,
                              const std::vector<Tensor*>& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(path + ": not a checkpoint file");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) {
    throw ValidationError(path + ": unsupported checkpoint version " +
                          std::to_string(version));
  }

  LoadedCheckpoint loaded;
  loaded.metadata_json = read_string(in);

  std::map<std::string, Tensor*> by_name;
  for (Tensor* t : tensors) by_name[t->name] = t;

  const std::uint64_t count = read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    const std::uint64_t rows = read_u64(in);
    const std::uint64_t cols = read_u64(in);
    if (!in) throw ParseError(path + ": truncated checkpoint");
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw ValidationError(path + ": stored tensor '" + name +
                            "' has no target in the model");
    }
    Tensor* t = it->second;
    if (static_cast<std::uint64_t>(t->v.rows()) != rows ||
        static_cast<std::uint64_t>(t->v.cols()) != cols) {
      throw ValidationError(path + ": shape mismatch for tensor '" + name + "'");
    }
    for (std::uint64_t r = 0; r < rows; ++r) {
      for (std::uint64_t c = 0; c < cols; ++c) {
        double x = 0.0;
        in.read(reinterpret_cast<char*>(&x), sizeof(x));
        t->v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x;
      }
    }
    loaded.names.push_back(name);
    by_name.erase(it);
  }
  if (!in) throw ParseError(path + ": truncated checkpoint");
  if (!by_name.empty()) {
    throw ValidationError(path + ": checkpoint is missing tensor '" +
                          by_name.begin()->first + "'");
  }
  return loaded;
}

std::string read_checkpoint_metadata(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(path + ": not a checkpoint file");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) {
    throw ValidationError(path + ": unsupported checkpoint version " +
                          std::to_string(version));
  }
  return read_string(in);
}

namespace {

json encoder_metadata(const EncoderConfig& cfg) {
  return json{{"L", cfg.L},           {"B", cfg.B},
              {"D", cfg.D},           {"H", cfg.H},
              {"vocab_size", cfg.vocab_size}, {"max_len", cfg.max_len}};
}

EncoderConfig encoder_from_metadata(const json& j) {
  EncoderConfig cfg;
  cfg.L = j.at("L").get<int>();
  cfg.B = j.at("B").get<int>();
  cfg.D = j.at("D").get<int>();
  cfg.H = j.at("H").get<int>();
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.max_len = j.at("max_len").get<int>();
  return cfg;
}

}  // namespace

void save_gated_mtl(const GatedMtlModel& model, const std::string& path) {
  json meta;
  meta["kind"] = "gated-mtl";
  meta["encoder"] = encoder_metadata(model.config().enc);
  meta["gate_enabled"] = model.gate_enabled();
  json tasks = json::array();
  for (Task t : model.config().task_list) tasks.push_back(to_string(t));
  meta["tasks"] = std::move(tasks);
  auto& mutable_model = const_cast<GatedMtlModel&>(model);
  save_tensors(path, meta.dump(), mutable_model.params());
}

std::unique_ptr<GatedMtlModel> load_gated_mtl(const std::string& path) {
  const json meta = json::parse(read_checkpoint_metadata(path));
  if (meta.value("kind", "") != "gated-mtl") {
    throw ValidationError(path + ": checkpoint does not hold a gated-mtl model");
  }
  GatedMtlConfig cfg;
  cfg.enc = encoder_from_metadata(meta.at("encoder"));
  cfg.gate_enabled = meta.at("gate_enabled").get<bool>();
  cfg.task_list.clear();
  for (const auto& name : meta.at("tasks")) {
    cfg.task_list.push_back(task_from_string(name.get<std::string>()));
  }
  Rng rng(0);
  auto model = std::make_unique<GatedMtlModel>(cfg, rng);
  load_tensors(path, model->params());
  return model;
}

void save_single_task(const SingleTaskModel& model, const std::string& path) {
  json meta;
  meta["kind"] = "single-task";
  meta["encoder"] = encoder_metadata(model.encoder.cfg);
  meta["task"] = to_string(model.task());
  auto& mutable_model = const_cast<SingleTaskModel&>(model);
  save_tensors(path, meta.dump(), mutable_model.params());
}

std::unique_ptr<SingleTaskModel> load_single_task(const std::string& path) {
  const json meta = json::parse(read_checkpoint_metadata(path));
  if (meta.value("kind", "") != "single-task") {
    throw ValidationError(path + ": checkpoint does not hold a single-task model");
  }
  const EncoderConfig cfg = encoder_from_metadata(meta.at("encoder"));
  const Task task = task_from_string(meta.at("task").get<std::string>());
  Rng rng(0);
  auto model = std::make_unique<SingleTaskModel>(cfg, task, rng);
  load_tensors(path, model->params());
  return model;
}

}  // namespace cmix
