#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "layerlens/probe.hpp"
#include "layerlens/runconfig.hpp"
#include "layerlens/trace.hpp"

namespace layerlens {

struct PipelineOptions {
  std::filesystem::path out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> ref_layer_override;
  bool quiet = false;
};

// Applies CLI overrides; every command digests the effective config.
RunConfig effective_config(RunConfig cfg, const PipelineOptions& opts);

// Dataset as persisted by `generate`: traces plus per-task labels.
struct Dataset {
  std::vector<LayerTrace> traces;
  std::vector<std::pair<std::string, LabelSet>> tasks;
};

Dataset load_dataset(const std::filesystem::path& out_dir);

// Pipeline stages. Each takes the run config plus options, writes its
// artifacts under out_dir, and records them in manifest.json. A stage whose
// recorded artifacts still match their digests is skipped.
void cmd_generate(const RunConfig& cfg, const PipelineOptions& opts);
void cmd_lrs(const RunConfig& cfg, const PipelineOptions& opts);
void cmd_sweep(const RunConfig& cfg, const PipelineOptions& opts);
void cmd_fuse(const RunConfig& cfg, const PipelineOptions& opts);
void cmd_report(const RunConfig& cfg, const PipelineOptions& opts);

}  // namespace layerlens
