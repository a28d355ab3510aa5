#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cmix/mtl.hpp"

namespace cmix {

// Binary checkpoint: magic, version, JSON metadata, then named f64 tensors
// with explicit shapes (row-major payload).
void save_tensors(const std::string& path, const std::string& metadata_json,
                  const std::vector<Tensor*>& tensors);

struct LoadedCheckpoint {
  std::string metadata_json;
  std::vector<std::string> names;
};

// Fills `tensors` in place, matching by name; every stored tensor must find a
// target with identical shape and vice versa.
LoadedCheckpoint load_tensors(const std::string& path,
                              const std::vector<Tensor*>& tensors);

// Reads only the metadata document.
std::string read_checkpoint_metadata(const std::string& path);

void save_gated_mtl(const GatedMtlModel& model, const std::string& path);
std::unique_ptr<GatedMtlModel> load_gated_mtl(const std::string& path);

void save_single_task(const SingleTaskModel& model, const std::string& path);
std::unique_ptr<SingleTaskModel> load_single_task(const std::string& path);

}  // namespace cmix
