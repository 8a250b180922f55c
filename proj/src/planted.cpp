#include "layerlens/planted.hpp"

#include <cmath>
#include <set>

#include "layerlens/rng.hpp"

namespace layerlens {

namespace {

constexpr int kOrthonormalRetries = 16;

}  // namespace

void PlantedTraceSpec::validate() const {
  if (layers <= 0 || tokens <= 0 || dim <= 0) {
    throw ConfigError("planted spec: layers, tokens and dim must be positive");
  }
  if (num_samples <= 0) {
    throw ConfigError("planted spec: num_samples must be positive (empty dataset)");
  }
  if (noise_sigma < 0.0) {
    throw ConfigError("planted spec: noise_sigma must be >= 0");
  }
  std::set<std::string> ids;
  std::set<int> used_dims;
  for (const PlantedTask& t : tasks) {
    if (t.id.empty()) {
      throw ConfigError("planted task: id must not be empty");
    }
    if (!ids.insert(t.id).second) {
      throw ConfigError("planted task '" + t.id + "': duplicate id");
    }
    if (t.band_lo < 1 || t.band_hi > layers || t.band_lo > t.band_hi) {
      throw ConfigError("planted task '" + t.id + "': band [" + std::to_string(t.band_lo) + ", " +
                        std::to_string(t.band_hi) + "] outside [1, " + std::to_string(layers) +
                        "]");
    }
    if (t.signal_strength < 0.0) {
      throw ConfigError("planted task '" + t.id + "': signal_strength must be >= 0");
    }
    if (t.decodable_dims.empty()) {
      throw ConfigError("planted task '" + t.id + "': decodable_dims must not be empty");
    }
    for (int dimension : t.decodable_dims) {
      if (dimension < 0 || dimension >= dim) {
        throw ConfigError("planted task '" + t.id + "': dim " + std::to_string(dimension) +
                          " outside [0, " + std::to_string(dim) + ")");
      }
      // Overlapping decodable dims would entangle the oracles.
      if (!used_dims.insert(dimension).second) {
        throw ConfigError("planted task '" + t.id + "': decodable dim " +
                          std::to_string(dimension) + " overlaps another task");
      }
    }
    if (t.num_classes < 2) {
      throw ConfigError("planted task '" + t.id + "': num_classes must be >= 2");
    }
    if (t.num_classes > static_cast<int>(t.decodable_dims.size())) {
      throw ConfigError("planted task '" + t.id + "': num_classes exceeds |decodable_dims|, " +
                        "orthonormal class directions are impossible");
    }
  }
}

Tensor planted_class_directions(const PlantedTraceSpec& spec, std::size_t task_index) {
  const PlantedTask& task = spec.tasks.at(task_index);
  const std::size_t k = static_cast<std::size_t>(task.num_classes);
  const std::size_t w = task.decodable_dims.size();
  SeededRng rng(derive_seed(spec.seed, "planted-directions", task_index));

  // Gram-Schmidt over seeded Gaussian rows; retry a row on near-degeneracy.
  Tensor dirs = Tensor::matrix(k, w);
  for (std::size_t row = 0; row < k; ++row) {
    for (int attempt = 0; attempt < kOrthonormalRetries; ++attempt) {
      for (std::size_t j = 0; j < w; ++j) dirs.at(row, j) = rng.gaussian();
      for (std::size_t prev = 0; prev < row; ++prev) {
        double proj = 0.0;
        for (std::size_t j = 0; j < w; ++j) proj += dirs.at(row, j) * dirs.at(prev, j);
        for (std::size_t j = 0; j < w; ++j) dirs.at(row, j) -= proj * dirs.at(prev, j);
      }
      double norm = 0.0;
      for (std::size_t j = 0; j < w; ++j) norm += dirs.at(row, j) * dirs.at(row, j);
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t j = 0; j < w; ++j) dirs.at(row, j) /= norm;
        break;
      }
      if (attempt == kOrthonormalRetries - 1) {
        throw NumericalError("planted directions: Gram-Schmidt failed to converge");
      }
    }
  }
  return dirs;
}

PlantedDataset synthesize_planted_traces(const PlantedTraceSpec& spec) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(spec.tokens);
  const std::size_t d = static_cast<std::size_t>(spec.dim);

  PlantedDataset out;

  std::vector<Tensor> directions;
  directions.reserve(spec.tasks.size());
  for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
    directions.push_back(planted_class_directions(spec, t));
  }

  // Labels first, from their own stream, so the noise stream is independent.
  for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
    const PlantedTask& task = spec.tasks[t];
    SeededRng label_rng(derive_seed(spec.seed, "planted-labels", t));
    std::vector<int>& labels = out.labels[task.id];
    labels.resize(static_cast<std::size_t>(spec.num_samples));
    for (int& y : labels) {
      y = static_cast<int>(label_rng.uniform_int(static_cast<std::uint64_t>(task.num_classes)));
    }
    out.num_classes[task.id] = task.num_classes;
  }

  out.traces.reserve(static_cast<std::size_t>(spec.num_samples));
  for (int s = 0; s < spec.num_samples; ++s) {
    SeededRng noise_rng(derive_seed(spec.seed, "planted-noise", static_cast<std::uint64_t>(s)));
    LayerTrace trace;
    trace.has_cls = spec.cls_flag;
    trace.sample_id = "planted_" + std::to_string(s);
    trace.config_hash = spec.seed;
    trace.hidden.reserve(static_cast<std::size_t>(spec.layers));

    for (int layer = 1; layer <= spec.layers; ++layer) {
      Tensor h = Tensor::matrix(n, d);
      for (double& v : h.data) v = noise_rng.gaussian() * spec.noise_sigma;
      for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
        const PlantedTask& task = spec.tasks[t];
        if (!task.in_band(layer)) continue;
        const int label = out.labels[task.id][static_cast<std::size_t>(s)];
        const Tensor& dirs = directions[t];
        for (std::size_t token = 0; token < n; ++token) {
          for (std::size_t j = 0; j < task.decodable_dims.size(); ++j) {
            h.at(token, static_cast<std::size_t>(task.decodable_dims[j])) +=
                task.signal_strength * dirs.at(static_cast<std::size_t>(label), j);
          }
        }
      }
      trace.hidden.push_back(std::move(h));
    }
    trace.validate();
    out.traces.push_back(std::move(trace));
  }
  return out;
}

}  // namespace layerlens
