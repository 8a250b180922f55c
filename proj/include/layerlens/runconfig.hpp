#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "layerlens/lrs.hpp"
#include "layerlens/planted.hpp"
#include "layerlens/probe.hpp"
#include "layerlens/vit.hpp"

namespace layerlens {

enum class DatasetMode { planted, encoder };
enum class AveragingOrder { cosine_then_average, average_then_cosine };

// A fusion layer set as written in a config: a built-in name ("L1".."L5") or
// an explicit "name:1,5,9" list resolved against the configured depth.
struct FusionSetRef {
  std::string name;
  std::vector<int> layers;  // empty when name refers to a built-in set

  bool is_builtin() const { return layers.empty(); }
};

// Full run configuration. Parsed from the documented key-value format; every
// field has a desk-scale default, and unknown keys are errors.
struct RunConfig {
  std::uint64_t seed = 42;
  DatasetMode mode = DatasetMode::planted;

  VitConfig vit;

  // dataset axes
  int num_samples = 512;
  double noise_sigma = 0.25;
  std::vector<PlantedTask> planted_tasks;  // planted mode only

  TrainConfig train;

  // analysis
  PoolingMode pooling = PoolingMode::mean_patches;
  int groups_k = 3;
  AveragingOrder averaging = AveragingOrder::cosine_then_average;

  // sweep
  int ref_layer = 0;  // 0 means penultimate (L - 1)

  // fusion
  std::vector<FusionSetRef> fusion_sets;
  bool lrs_selection = true;
  std::string objective_task;  // empty: first task

  // report
  bool reference_grid_checks = true;

  // Planted spec assembled from the vit block and the data block; dimensions
  // agree by construction.
  PlantedTraceSpec planted_spec() const;

  int effective_ref_layer() const;

  void validate() const;
  // Canonical serialization; its FNV digest keys manifest resume checks.
  std::string canonical() const;
  std::uint64_t digest() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Built-in default configuration (the desk-scale two-band planted setup).
RunConfig default_run_config();

}  // namespace layerlens
