#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "layerlens/chain.hpp"
#include "layerlens/lrs.hpp"
#include "layerlens/tensor.hpp"
#include "layerlens/trace.hpp"

namespace layerlens {

enum class OptimizerKind { sgd, adamw };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& s);

// Two-phase probe training schedule. Phase one updates only the projection
// (w1, b1) with the head frozen at its seeded init; phase two updates
// everything at the lower rate.
struct TrainConfig {
  double phase1_lr = 1e-3;
  double phase2_lr = 2e-5;
  int phase1_epochs = 20;
  int phase2_epochs = 5;
  int batch_size = 32;
  int d_hidden = 32;
  OptimizerKind optimizer = OptimizerKind::adamw;
  double weight_decay = 0.01;
  bool cosine_anneal = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabelSet {
  std::vector<int> labels;
  int num_classes = 2;
};

// One trained probe: connector + head, its eval accuracy, and enough split
// bookkeeping to re-evaluate the same eval set elsewhere.
struct ProbeResult {
  int layer = 0;  // 0 for fused features
  std::string task_id;
  std::string feature_source;  // "layer 7" or a fusion spec name
  std::vector<double> train_loss_curve;
  double eval_accuracy = 0.0;
  LinearChainParams params;
  std::uint64_t seed = 0;
  std::vector<int> eval_indices;  // dataset indices of the held-out 20%
  std::vector<std::string> eval_ids;
  std::vector<int> eval_labels;
};

// Per-task scores across layers. All scores finite, rows rectangular.
struct ScoreTable {
  std::vector<int> layers;
  std::vector<std::string> tasks;
  std::vector<char> higher_better;            // per task
  std::vector<std::vector<double>> scores;    // [layer][task]

  double score(int layer, const std::string& task) const;
  std::size_t layer_row(int layer) const;
  std::size_t task_col(const std::string& task) const;
  void validate() const;
};

// layers x samples boolean grid over a shared eval set.
struct CorrectnessMatrix {
  std::string task_id;
  std::vector<int> layers;
  std::vector<std::string> samples;
  std::vector<std::vector<std::uint8_t>> correct;  // [layer][sample]

  bool value(int layer, std::size_t sample) const;
  std::size_t layer_row(int layer) const;
};

// Deterministic 80/20 split by seeded shuffle; identical for every layer of
// the same run so correctness grids line up.
std::pair<std::vector<int>, std::vector<int>> train_eval_split(std::size_t num_samples,
                                                               std::uint64_t seed);

// Mean-pooled patch-token features of one layer, one row per trace.
Tensor pooled_layer_features(const std::vector<LayerTrace>& traces, int layer);

// Seed a per-layer probe derives from the run seed and its task.
std::uint64_t probe_seed_for(const TrainConfig& cfg, const std::string& task_id, int layer);

// Core trainer shared by per-layer and fused probing: two-phase schedule on
// an already-pooled feature matrix.
ProbeResult train_probe_on_features(const Tensor& features, const LabelSet& labels,
                                    const TrainConfig& cfg, std::uint64_t probe_seed,
                                    const std::vector<std::string>& sample_ids);

// Trains on mean-pooled layer-i tokens; the traces are read-only throughout.
ProbeResult probe_layer(const std::vector<LayerTrace>& traces, const LabelSet& labels, int layer,
                        const TrainConfig& cfg);

struct SweepOutput {
  ScoreTable table;
  std::vector<ProbeResult> results;  // layer-major, task-minor
};

// Probes every layer for every task with independently derived per-layer
// seeds. `jobs` > 1 runs layers in a worker pool; results are identical to
// the serial order because each job owns its derived seed.
SweepOutput sweep_layers(const std::vector<LayerTrace>& traces,
                         const std::vector<std::pair<std::string, LabelSet>>& tasks,
                         const TrainConfig& cfg, int jobs = 1);

// correct[l][s] = (argmax logits == label) for layer l on eval sample s. All
// results must probe the same task over the same eval set.
CorrectnessMatrix correctness_matrix(const std::vector<ProbeResult>& results,
                                     const std::vector<LayerTrace>& traces,
                                     const LabelSet& labels);

// Among samples the reference layer gets wrong, the fraction the alternative
// layer gets right. Empty failed set -> nullopt (distinct from 0).
std::optional<double> failed_group_accuracy(const CorrectnessMatrix& c, int ref_layer,
                                            int alt_layer);

// Evaluates a frozen trained probe on layer i features of its own eval set,
// no parameter updates.
double cross_layer_eval(const ProbeResult& trained, const std::vector<LayerTrace>& traces,
                        int layer);

// Per task, the argmax layer (respecting the higher-better flag); ties go to
// the lowest layer index.
std::map<std::string, int> best_layer_per_task(const ScoreTable& table);

// Min-max per task column to [0, 1]; constant columns map to 0.5.
ScoreTable normalize_scores(const ScoreTable& table);

std::string score_table_to_csv(const ScoreTable& table);
std::string score_table_to_json(const ScoreTable& table);
std::string correctness_to_csv(const CorrectnessMatrix& c);
std::string correctness_to_json(const CorrectnessMatrix& c);

}  // namespace layerlens
