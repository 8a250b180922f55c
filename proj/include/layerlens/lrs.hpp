#pragma once

#include <string>
#include <utility>
#include <vector>

#include "layerlens/tensor.hpp"
#include "layerlens/trace.hpp"

namespace layerlens {

// How the N tokens of a layer collapse into one representation row.
// mean_patches averages the patch tokens (CLS excluded when present);
// cls takes token 0 and requires a CLS-enabled trace.
enum class PoolingMode { mean_patches, cls };

std::string to_string(PoolingMode mode);
PoolingMode pooling_mode_from_string(const std::string& s);

// One pooled row per layer: L x d.
struct LayerMatrix {
  Tensor rows;
  PoolingMode mode = PoolingMode::mean_patches;
  std::string source_id;

  int layers() const { return static_cast<int>(rows.rows()); }
};

LayerMatrix pool_trace(const LayerTrace& trace, PoolingMode mode);

// L x L matrix of absolute cosine similarities between layer rows:
// symmetric, unit diagonal, entries in [0, 1].
struct SimilarityMatrix {
  Tensor s;

  int layers() const { return static_cast<int>(s.rows()); }
  // Checks symmetry (<= 1e-12), unit diagonal (<= 1e-12) and range.
  void check_invariants() const;
};

// s[i][j] = |<H_i, H_j>| / (||H_i|| * ||H_j||). A zero-norm row is an error
// naming the offending layer: it means the trace is broken, not similar.
SimilarityMatrix lrs_matrix(const LayerMatrix& h);

// Elementwise arithmetic mean; all inputs must share dimensions.
SimilarityMatrix average_similarity(const std::vector<SimilarityMatrix>& matrices);

// Contiguous partition of layers 1..L into blocks.
struct LayerGroups {
  int num_layers = 0;
  std::vector<int> boundaries;      // K-1 strictly increasing last-layer-of-block cuts
  std::vector<std::string> labels;  // "shallow"/"middle"/"deep" for K = 3

  int num_blocks() const { return static_cast<int>(boundaries.size()) + 1; }
  // Inclusive [first, last] layer ranges, in order.
  std::vector<std::pair<int, int>> blocks() const;
  // Which block (0-based) a 1-based layer index falls into.
  int block_of(int layer) const;
  void validate() const;
};

// Exhaustive search over all C(L-1, K-1) contiguous K-way partitions,
// maximizing mean within-block minus mean between-block similarity.
// Ties resolve to the lexicographically smallest boundary tuple.
LayerGroups partition_layers(const SimilarityMatrix& s, int k);

// The search objective, exposed for audits.
double partition_objective(const SimilarityMatrix& s, const std::vector<int>& boundaries);

// L rows of L comma-separated decimals, 9 significant digits.
std::string similarity_to_csv(const SimilarityMatrix& s);
// JSON with the matrix, boundaries and block ranges, for plotting.
std::string similarity_to_json(const SimilarityMatrix& s, const LayerGroups& groups);

}  // namespace layerlens
