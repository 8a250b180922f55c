#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "layerlens/tensor.hpp"
#include "layerlens/trace.hpp"

namespace layerlens {

// One decodable task planted into a band of layers. Class directions are
// seeded orthonormal vectors over the task's decodable dims; outside its band
// the task contributes nothing.
struct PlantedTask {
  std::string id;
  int band_lo = 1;  // inclusive, 1-based layer indices
  int band_hi = 1;
  double signal_strength = 1.0;
  std::vector<int> decodable_dims;
  int num_classes = 4;

  bool in_band(int layer) const { return layer >= band_lo && layer <= band_hi; }
};

// Desk-scale oracle generator: traces where ground truth about which layers
// carry which information is exact by construction. Layers do not propagate
// signal; a band is the only place it exists.
struct PlantedTraceSpec {
  int layers = 12;
  int tokens = 17;
  int dim = 32;
  std::vector<PlantedTask> tasks;
  double noise_sigma = 0.25;
  int num_samples = 512;
  bool cls_flag = true;  // marks token 0 as CLS in emitted traces
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlantedDataset {
  std::vector<LayerTrace> traces;
  // task id -> per-sample labels, aligned with traces.
  std::map<std::string, std::vector<int>> labels;
  std::map<std::string, int> num_classes;
};

// hidden[i][token, dims] += strength * class_direction(task, label) inside a
// task's band; Gaussian noise everywhere. Fully determined by spec.seed.
PlantedDataset synthesize_planted_traces(const PlantedTraceSpec& spec);

// The seeded orthonormal class directions a task uses, one row per class
// (num_classes x |decodable_dims|). Exposed so tests can audit the geometry.
Tensor planted_class_directions(const PlantedTraceSpec& spec, std::size_t task_index);

}  // namespace layerlens
