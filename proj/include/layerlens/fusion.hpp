#pragma once

#include <string>
#include <vector>

#include "layerlens/lrs.hpp"
#include "layerlens/probe.hpp"
#include "layerlens/tensor.hpp"
#include "layerlens/trace.hpp"

namespace layerlens {

// Ordered set of distinct layers to concatenate along the channel dimension.
// Listing order is preserved (deep layer first by convention); it determines
// the block layout of the fused feature.
struct FusionSpec {
  std::vector<int> layers;
  std::string name;

  void validate(int total_layers) const;
  std::string describe() const;  // "{23,18,3}"
};

// N x (D * |layers|) token matrix; block k holds layer layers[k].
struct FusedFeature {
  Tensor tokens;
  FusionSpec spec;
};

// Channel-wise concatenation of the named layers of one trace.
FusedFeature concat_fuse(const LayerTrace& trace, const FusionSpec& spec);

// The five built-in layer combinations, defined on a 24-layer encoder:
//   L1 = {23,18}    deep + middle
//   L2 = {23,18,1}  deep + middle + shallow
//   L3 = {23,18,17} deep + two middle
//   L4 = {23,16,8}  quantile-driven
//   L5 = {23,18,3}  similarity-analysis-driven
// For other depths each index k maps to round(k * L / 24), clamped to
// [1, L], de-duplicated preserving order. Requires L >= 5.
std::vector<FusionSpec> builtin_layer_sets(int total_layers);

// One representative layer per group: the argmax of the objective task's
// score within the group (ties to the lowest index), ordered deep to shallow.
FusionSpec lrs_driven_selection(const LayerGroups& groups, const ScoreTable& table,
                                const std::string& objective_task);

// Identical training protocol to probe_layer with the connector input
// widened to D * |layers|; the result carries the layer set's name.
ProbeResult probe_fused(const std::vector<LayerTrace>& traces, const LabelSet& labels,
                        const FusionSpec& spec, const TrainConfig& cfg);

}  // namespace layerlens
