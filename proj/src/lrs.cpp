#include "layerlens/lrs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace layerlens {

std::string to_string(PoolingMode mode) {
  return mode == PoolingMode::mean_patches ? "mean_patches" : "cls";
}

PoolingMode pooling_mode_from_string(const std::string& s) {
  if (s == "mean_patches") return PoolingMode::mean_patches;
  if (s == "cls") return PoolingMode::cls;
  throw ValueError("unknown pooling mode '" + s + "' (expected mean_patches or cls)");
}

LayerMatrix pool_trace(const LayerTrace& trace, PoolingMode mode) {
  trace.validate();
  const int l = trace.layers();
  const std::size_t n = static_cast<std::size_t>(trace.tokens());
  const std::size_t d = static_cast<std::size_t>(trace.dim());

  if (mode == PoolingMode::cls && !trace.has_cls) {
    throw DataError("pool_trace: cls pooling requested but trace has no CLS token");
  }
  const std::size_t patch_row0 = trace.has_cls ? 1 : 0;
  if (mode == PoolingMode::mean_patches && n <= patch_row0) {
    throw DataError("pool_trace: trace has no patch tokens to pool");
  }

  LayerMatrix out;
  out.mode = mode;
  out.source_id = trace.sample_id;
  out.rows = Tensor::matrix(static_cast<std::size_t>(l), d);
  for (int i = 1; i <= l; ++i) {
    const Tensor& h = trace.layer(i);
    double* row = &out.rows.data[static_cast<std::size_t>(i - 1) * d];
    if (mode == PoolingMode::cls) {
      for (std::size_t j = 0; j < d; ++j) row[j] = h.at(0, j);
    } else {
      const double count = static_cast<double>(n - patch_row0);
      for (std::size_t t = patch_row0; t < n; ++t) {
        for (std::size_t j = 0; j < d; ++j) row[j] += h.at(t, j);
      }
      for (std::size_t j = 0; j < d; ++j) row[j] /= count;
    }
  }
  return out;
}

void SimilarityMatrix::check_invariants() const {
  const std::size_t l = s.rows();
  if (!s.is_matrix() || s.cols() != l) {
    throw ShapeError("similarity matrix must be square, got " + s.shape_str());
  }
  for (std::size_t i = 0; i < l; ++i) {
    if (std::abs(s.at(i, i) - 1.0) > 1e-12) {
      throw NumericalError("similarity matrix diagonal entry " + std::to_string(i + 1) +
                           " deviates from 1");
    }
    for (std::size_t j = 0; j < l; ++j) {
      const double v = s.at(i, j);
      if (v < 0.0 || v > 1.0) {
        throw NumericalError("similarity matrix entry out of [0, 1]");
      }
      if (std::abs(v - s.at(j, i)) > 1e-12) {
        throw NumericalError("similarity matrix asymmetry above 1e-12");
      }
    }
  }
}

SimilarityMatrix lrs_matrix(const LayerMatrix& h) {
  const std::size_t l = h.rows.rows();
  const std::size_t d = h.rows.cols();
  if (l == 0) {
    throw ShapeError("lrs_matrix: empty layer matrix");
  }

  std::vector<double> norms(l);
  for (std::size_t i = 0; i < l; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += h.rows.at(i, j) * h.rows.at(i, j);
    norms[i] = std::sqrt(sq);
    if (norms[i] <= 1e-12) {
      throw NumericalError("lrs_matrix: layer " + std::to_string(i + 1) +
                           " has zero-norm representation (degenerate trace)");
    }
  }

  SimilarityMatrix out;
  out.s = Tensor::matrix(l, l);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i; j < l; ++j) {
      double prod = 0.0;
      for (std::size_t t = 0; t < d; ++t) prod += h.rows.at(i, t) * h.rows.at(j, t);
      const double v = std::clamp(std::abs(prod) / (norms[i] * norms[j]), 0.0, 1.0);
      out.s.at(i, j) = v;
      out.s.at(j, i) = v;
    }
  }
  ensure_finite(out.s, "lrs_matrix");
  return out;
}

SimilarityMatrix average_similarity(const std::vector<SimilarityMatrix>& matrices) {
  if (matrices.empty()) {
    throw DataError("average_similarity: empty list");
  }
  const auto& first = matrices.front().s;
  SimilarityMatrix out;
  out.s = Tensor::matrix(first.rows(), first.cols());
  for (const SimilarityMatrix& m : matrices) {
    if (!m.s.same_shape(first)) {
      throw ShapeError("average_similarity: dimension mismatch: " + first.shape_str() + " vs " +
                       m.s.shape_str());
    }
    for (std::size_t i = 0; i < out.s.size(); ++i) out.s.data[i] += m.s.data[i];
  }
  const double inv = 1.0 / static_cast<double>(matrices.size());
  for (double& v : out.s.data) v *= inv;
  return out;
}

std::vector<std::pair<int, int>> LayerGroups::blocks() const {
  std::vector<std::pair<int, int>> out;
  int lo = 1;
  for (int cut : boundaries) {
    out.emplace_back(lo, cut);
    lo = cut + 1;
  }
  out.emplace_back(lo, num_layers);
  return out;
}

int LayerGroups::block_of(int layer) const {
  if (layer < 1 || layer > num_layers) {
    throw ValueError("block_of: layer " + std::to_string(layer) + " outside [1, " +
                     std::to_string(num_layers) + "]");
  }
  int block = 0;
  for (int cut : boundaries) {
    if (layer <= cut) return block;
    ++block;
  }
  return block;
}

void LayerGroups::validate() const {
  if (num_layers <= 0) {
    throw ValueError("layer groups: num_layers must be positive");
  }
  int prev = 0;
  for (int cut : boundaries) {
    if (cut <= prev || cut >= num_layers) {
      throw ValueError("layer groups: boundaries must be strictly increasing within [1, L)");
    }
    prev = cut;
  }
  if (labels.size() != static_cast<std::size_t>(num_blocks())) {
    throw ValueError("layer groups: label count does not match block count");
  }
}

namespace {

std::vector<std::string> block_labels(int k) {
  if (k == 3) return {"shallow", "middle", "deep"};
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) out.push_back("group" + std::to_string(i));
  return out;
}

}  // namespace

double partition_objective(const SimilarityMatrix& s, const std::vector<int>& boundaries) {
  const int l = s.layers();
  LayerGroups g;
  g.num_layers = l;
  g.boundaries = boundaries;
  g.labels = block_labels(g.num_blocks());
  g.validate();

  double within = 0.0, between = 0.0;
  std::size_t n_within = 0, n_between = 0;
  for (int i = 1; i <= l; ++i) {
    for (int j = i + 1; j <= l; ++j) {
      const double v = s.s.at(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
      if (g.block_of(i) == g.block_of(j)) {
        within += v;
        ++n_within;
      } else {
        between += v;
        ++n_between;
      }
    }
  }
  const double mean_within = n_within ? within / static_cast<double>(n_within) : 0.0;
  const double mean_between = n_between ? between / static_cast<double>(n_between) : 0.0;
  return mean_within - mean_between;
}

LayerGroups partition_layers(const SimilarityMatrix& s, int k) {
  const int l = s.layers();
  if (k < 1 || k > l) {
    throw ValueError("partition_layers: K=" + std::to_string(k) + " outside [1, L=" +
                     std::to_string(l) + "]");
  }
  s.check_invariants();

  std::vector<int> best;
  double best_objective = 0.0;
  bool have_best = false;
  std::vector<double> all_objectives;

  // Enumerate K-1 cuts over positions 1..L-1 in lexicographic order.
  std::vector<int> cuts(static_cast<std::size_t>(k - 1));
  for (int i = 0; i < k - 1; ++i) cuts[static_cast<std::size_t>(i)] = i + 1;
  while (true) {
    const double objective = partition_objective(s, cuts);
    all_objectives.push_back(objective);
    if (!have_best || objective > best_objective) {
      best = cuts;
      best_objective = objective;
      have_best = true;
    }
    if (k == 1) break;
    // advance to the next combination
    int pos = k - 2;
    while (pos >= 0 && cuts[static_cast<std::size_t>(pos)] == l - (k - 1) + pos) --pos;
    if (pos < 0) break;
    ++cuts[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < k - 1; ++i) {
      cuts[static_cast<std::size_t>(i)] = cuts[static_cast<std::size_t>(i - 1)] + 1;
    }
  }

  // Exhaustive-search optimality: the winner dominates every candidate.
  for (double objective : all_objectives) {
    if (objective > best_objective) {
      throw NumericalError("partition_layers: search returned a non-optimal partition");
    }
  }

  LayerGroups out;
  out.num_layers = l;
  out.boundaries = best;
  out.labels = block_labels(k);
  out.validate();
  return out;
}

std::string similarity_to_csv(const SimilarityMatrix& s) {
  const std::size_t l = s.s.rows();
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", s.s.at(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string similarity_to_json(const SimilarityMatrix& s, const LayerGroups& groups) {
  nlohmann::ordered_json j;
  j["layers"] = s.layers();
  auto matrix = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.s.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < s.s.cols(); ++c) row.push_back(s.s.at(i, c));
    matrix.push_back(std::move(row));
  }
  j["similarity"] = std::move(matrix);
  j["boundaries"] = groups.boundaries;
  auto blocks = nlohmann::ordered_json::array();
  const auto ranges = groups.blocks();
  for (std::size_t b = 0; b < ranges.size(); ++b) {
    blocks.push_back({{"name", groups.labels[b]},
                      {"first_layer", ranges[b].first},
                      {"last_layer", ranges[b].second}});
  }
  j["blocks"] = std::move(blocks);
  return j.dump(2) + "\n";
}

}  // namespace layerlens
