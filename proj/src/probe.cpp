#include "layerlens/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

#include <json.hpp>

#include "layerlens/rng.hpp"

namespace layerlens {

namespace {

// AdamW / SGD over the four chain tensors. Decoupled weight decay; moments
// reset at each phase boundary, matching a fresh optimizer per phase.
struct Optimizer {
  OptimizerKind kind;
  double weight_decay;
  LinearChainParams m, v;
  long step_count = 0;

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Optimizer(const LinearChainParams& shape, OptimizerKind k, double wd)
      : kind(k),
        weight_decay(wd),
        m(LinearChainParams::zeros(shape.input_dim(), shape.hidden_dim(), shape.num_classes())),
        v(LinearChainParams::zeros(shape.input_dim(), shape.hidden_dim(), shape.num_classes())) {}

  void update_tensor(Tensor& param, const Tensor& grad, Tensor& m_t, Tensor& v_t, double lr) {
    if (kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        param.data[i] -= lr * (grad.data[i] + weight_decay * param.data[i]);
      }
      return;
    }
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < param.size(); ++i) {
      m_t.data[i] = kBeta1 * m_t.data[i] + (1.0 - kBeta1) * grad.data[i];
      v_t.data[i] = kBeta2 * v_t.data[i] + (1.0 - kBeta2) * grad.data[i] * grad.data[i];
      const double m_hat = m_t.data[i] / bc1;
      const double v_hat = v_t.data[i] / bc2;
      param.data[i] -= lr * (m_hat / (std::sqrt(v_hat) + kEps) + weight_decay * param.data[i]);
    }
  }

  // include_phase1_only: whether the projection-only phase is running.
  void step(LinearChainParams& params, const LinearChainParams& grads, double lr,
            bool projection_only) {
    ++step_count;
    update_tensor(params.w1, grads.w1, m.w1, v.w1, lr);
    update_tensor(params.b1, grads.b1, m.b1, v.b1, lr);
    if (!projection_only) {
      update_tensor(params.w2, grads.w2, m.w2, v.w2, lr);
      update_tensor(params.b2, grads.b2, m.b2, v.b2, lr);
    }
  }
};

double cosine_lr(double base, long step, long total_steps, bool anneal) {
  if (!anneal || total_steps <= 1) return base;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

// Probe initialization: near-zero Gaussian projection and an orthonormal
// head. Phase one trains only the projection against this frozen head, so the
// head's class columns must stay well separated; orthonormal columns
// guarantee that for every seed. The projection starts small so no random
// structure has to be unlearned.
LinearChainParams seeded_probe_init(std::size_t d_in, std::size_t d_hidden,
                                    std::size_t n_classes, SeededRng& rng) {
  LinearChainParams p = LinearChainParams::zeros(d_in, d_hidden, n_classes);
  const double w1_std = 0.02;
  for (double& v : p.w1.data) v = rng.gaussian() * w1_std;

  if (d_hidden < n_classes) {
    throw ConfigError("probe init: d_hidden must be >= the number of classes");
  }
  // Gram-Schmidt over the head's class columns.
  for (double& v : p.w2.data) v = rng.gaussian();
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double proj = 0.0;
      for (std::size_t j = 0; j < d_hidden; ++j) proj += p.w2.at(j, c) * p.w2.at(j, prev);
      for (std::size_t j = 0; j < d_hidden; ++j) p.w2.at(j, c) -= proj * p.w2.at(j, prev);
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < d_hidden; ++j) norm += p.w2.at(j, c) * p.w2.at(j, c);
    norm = std::sqrt(norm);
    if (norm < 1e-9) {
      throw NumericalError("probe init: degenerate head column");
    }
    for (std::size_t j = 0; j < d_hidden; ++j) p.w2.at(j, c) /= norm;
  }
  return p;
}

Tensor gather_rows(const Tensor& features, const std::vector<int>& indices) {
  Tensor out = Tensor::matrix(indices.size(), features.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<std::size_t>(indices[i]);
    std::copy_n(&features.data[src * features.cols()], features.cols(),
                &out.data[i * features.cols()]);
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& indices) {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out[i] = labels[static_cast<std::size_t>(indices[i])];
  }
  return out;
}

// One training phase: epochs x shuffled mini-batches, cosine-annealed lr.
void run_phase(LinearChainParams& params, const Tensor& train_x, const std::vector<int>& train_y,
               const TrainConfig& cfg, double base_lr, int epochs, bool projection_only,
               SeededRng& batch_rng, std::vector<double>& loss_curve) {
  if (epochs <= 0) return;
  Optimizer opt(params, cfg.optimizer, cfg.weight_decay);
  const std::size_t n = train_x.rows();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const long batches_per_epoch = static_cast<long>((n + batch - 1) / batch);
  const long total_steps = batches_per_epoch * epochs;
  long step = 0;

  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    batch_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
      const Tensor bx = gather_rows(train_x, idx);
      const std::vector<int> by = gather_labels(train_y, idx);

      const double lr = cosine_lr(base_lr, step, total_steps, cfg.cosine_anneal);
      const auto fwd = chain_forward(params, bx, by);
      const auto grads = chain_backward(params, bx, by);
      opt.step(params, grads, lr, projection_only);
      ++step;

      epoch_loss += fwd.loss * static_cast<double>(by.size());
      seen += by.size();
    }
    loss_curve.push_back(epoch_loss / static_cast<double>(seen));
  }
}

}  // namespace

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adamw";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adamw") return OptimizerKind::adamw;
  throw ValueError("unknown optimizer '" + s + "' (expected sgd or adamw)");
}

void TrainConfig::validate() const {
  if (!(phase1_lr > 0.0) || !(phase2_lr > 0.0)) {
    throw ConfigError("train config: learning rates must be > 0");
  }
  if (phase1_epochs < 0 || phase2_epochs < 0) {
    throw ConfigError("train config: epochs must be >= 0");
  }
  if (batch_size <= 0) {
    throw ConfigError("train config: batch_size must be positive");
  }
  if (d_hidden <= 0) {
    throw ConfigError("train config: d_hidden must be positive");
  }
  if (weight_decay < 0.0) {
    throw ConfigError("train config: weight_decay must be >= 0");
  }
}

std::pair<std::vector<int>, std::vector<int>> train_eval_split(std::size_t num_samples,
                                                               std::uint64_t seed) {
  if (num_samples < 2) {
    throw DataError("train_eval_split: need at least 2 samples");
  }
  std::vector<int> order(num_samples);
  for (std::size_t i = 0; i < num_samples; ++i) order[i] = static_cast<int>(i);
  SeededRng rng(derive_seed(seed, "train-eval-split"));
  rng.shuffle(order);

  const std::size_t n_eval = std::max<std::size_t>(1, num_samples / 5);
  std::vector<int> eval(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
  std::vector<int> train(order.begin() + static_cast<std::ptrdiff_t>(n_eval), order.end());
  return {std::move(train), std::move(eval)};
}

Tensor pooled_layer_features(const std::vector<LayerTrace>& traces, int layer) {
  if (traces.empty()) {
    throw DataError("pooled_layer_features: empty dataset");
  }
  const std::size_t d = static_cast<std::size_t>(traces.front().dim());
  Tensor out = Tensor::matrix(traces.size(), d);
  for (std::size_t s = 0; s < traces.size(); ++s) {
    const LayerTrace& t = traces[s];
    if (layer < 1 || layer > t.layers()) {
      throw ValueError("layer " + std::to_string(layer) + " out of range [1, " +
                       std::to_string(t.layers()) + "]");
    }
    const Tensor& h = t.layer(layer);
    const std::size_t patch_row0 = t.has_cls ? 1 : 0;
    const std::size_t n = h.rows();
    if (n <= patch_row0) {
      throw DataError("pooled_layer_features: trace has no patch tokens");
    }
    for (std::size_t token = patch_row0; token < n; ++token) {
      for (std::size_t j = 0; j < d; ++j) out.at(s, j) += h.at(token, j);
    }
    const double inv = 1.0 / static_cast<double>(n - patch_row0);
    for (std::size_t j = 0; j < d; ++j) out.at(s, j) *= inv;
  }
  return out;
}

ProbeResult train_probe_on_features(const Tensor& features, const LabelSet& labels,
                                    const TrainConfig& cfg, std::uint64_t probe_seed,
                                    const std::vector<std::string>& sample_ids) {
  cfg.validate();
  if (features.rows() == 0) {
    throw DataError("probe: empty dataset");
  }
  if (labels.labels.size() != features.rows()) {
    throw ShapeError("probe: " + std::to_string(labels.labels.size()) + " labels for " +
                     std::to_string(features.rows()) + " samples");
  }
  if (labels.num_classes < 2) {
    throw ValueError("probe: need at least 2 classes");
  }

  const auto [train_idx, eval_idx] = train_eval_split(features.rows(), cfg.seed);
  const Tensor train_x = gather_rows(features, train_idx);
  const std::vector<int> train_y = gather_labels(labels.labels, train_idx);
  const Tensor eval_x = gather_rows(features, eval_idx);
  const std::vector<int> eval_y = gather_labels(labels.labels, eval_idx);

  SeededRng init_rng(derive_seed(probe_seed, "probe-init"));
  LinearChainParams params =
      seeded_probe_init(features.cols(), static_cast<std::size_t>(cfg.d_hidden),
                        static_cast<std::size_t>(labels.num_classes), init_rng);

  ProbeResult result;
  result.seed = probe_seed;
  SeededRng batch_rng(derive_seed(probe_seed, "probe-batches"));
  run_phase(params, train_x, train_y, cfg, cfg.phase1_lr, cfg.phase1_epochs,
            /*projection_only=*/true, batch_rng, result.train_loss_curve);
  run_phase(params, train_x, train_y, cfg, cfg.phase2_lr, cfg.phase2_epochs,
            /*projection_only=*/false, batch_rng, result.train_loss_curve);

  result.eval_accuracy = accuracy(predict(params, eval_x), eval_y);
  result.params = std::move(params);
  result.eval_indices = eval_idx;
  result.eval_labels = eval_y;
  result.eval_ids.reserve(eval_idx.size());
  for (int idx : eval_idx) {
    result.eval_ids.push_back(sample_ids.empty() ? std::to_string(idx)
                                                 : sample_ids[static_cast<std::size_t>(idx)]);
  }
  return result;
}

namespace {

std::vector<std::string> trace_ids(const std::vector<LayerTrace>& traces) {
  std::vector<std::string> ids;
  ids.reserve(traces.size());
  for (const LayerTrace& t : traces) ids.push_back(t.sample_id);
  return ids;
}

}  // namespace

std::uint64_t probe_seed_for(const TrainConfig& cfg, const std::string& task_id, int layer) {
  return derive_seed(derive_seed(cfg.seed, task_id), "layer", static_cast<std::uint64_t>(layer));
}

ProbeResult probe_layer(const std::vector<LayerTrace>& traces, const LabelSet& labels, int layer,
                        const TrainConfig& cfg) {
  const Tensor features = pooled_layer_features(traces, layer);
  ProbeResult result = train_probe_on_features(features, labels, cfg,
                                               probe_seed_for(cfg, "", layer), trace_ids(traces));
  result.layer = layer;
  result.feature_source = "layer " + std::to_string(layer);
  return result;
}

SweepOutput sweep_layers(const std::vector<LayerTrace>& traces,
                         const std::vector<std::pair<std::string, LabelSet>>& tasks,
                         const TrainConfig& cfg, int jobs) {
  if (traces.empty()) {
    throw DataError("sweep_layers: empty dataset");
  }
  if (tasks.empty()) {
    throw DataError("sweep_layers: no tasks");
  }
  const int l = traces.front().layers();

  SweepOutput out;
  out.table.layers.resize(static_cast<std::size_t>(l));
  for (int i = 0; i < l; ++i) out.table.layers[static_cast<std::size_t>(i)] = i + 1;
  for (const auto& [task_id, labels] : tasks) {
    (void)labels;
    out.table.tasks.push_back(task_id);
    out.table.higher_better.push_back(1);
  }
  out.table.scores.assign(static_cast<std::size_t>(l),
                          std::vector<double>(tasks.size(), 0.0));
  out.results.resize(static_cast<std::size_t>(l) * tasks.size());

  // One job per layer; every probe derives its own seed, so the outcome is
  // identical whatever the worker count.
  std::vector<int> layer_list(static_cast<std::size_t>(l));
  for (int i = 0; i < l; ++i) layer_list[static_cast<std::size_t>(i)] = i + 1;

  auto run_layer = [&](int layer) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto& [task_id, labels] = tasks[t];
      const Tensor features = pooled_layer_features(traces, layer);
      ProbeResult r = train_probe_on_features(features, labels, cfg,
                                              probe_seed_for(cfg, task_id, layer),
                                              trace_ids(traces));
      r.layer = layer;
      r.task_id = task_id;
      r.feature_source = "layer " + std::to_string(layer);
      out.table.scores[static_cast<std::size_t>(layer - 1)][t] = r.eval_accuracy;
      out.results[static_cast<std::size_t>(layer - 1) * tasks.size() + t] = std::move(r);
    }
  };

  const int workers = std::max(1, std::min(jobs, l));
  if (workers == 1) {
    for (int layer : layer_list) run_layer(layer);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= layer_list.size()) return;
          run_layer(layer_list[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  out.table.validate();
  return out;
}

double ScoreTable::score(int layer, const std::string& task) const {
  return scores[layer_row(layer)][task_col(task)];
}

std::size_t ScoreTable::layer_row(int layer) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i] == layer) return i;
  }
  throw ValueError("score table: unknown layer " + std::to_string(layer));
}

std::size_t ScoreTable::task_col(const std::string& task) const {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i] == task) return i;
  }
  throw ValueError("score table: unknown task '" + task + "'");
}

void ScoreTable::validate() const {
  if (layers.empty() || tasks.empty()) {
    throw DataError("score table: empty");
  }
  if (scores.size() != layers.size() || higher_better.size() != tasks.size()) {
    throw ShapeError("score table: ragged");
  }
  for (const auto& row : scores) {
    if (row.size() != tasks.size()) {
      throw ShapeError("score table: ragged row");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw NumericalError("score table: non-finite score");
      }
    }
  }
}

bool CorrectnessMatrix::value(int layer, std::size_t sample) const {
  return correct[layer_row(layer)][sample] != 0;
}

std::size_t CorrectnessMatrix::layer_row(int layer) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i] == layer) return i;
  }
  throw ValueError("correctness matrix: unknown layer " + std::to_string(layer));
}

CorrectnessMatrix correctness_matrix(const std::vector<ProbeResult>& results,
                                     const std::vector<LayerTrace>& traces,
                                     const LabelSet& labels) {
  if (results.empty()) {
    throw DataError("correctness_matrix: no probe results");
  }
  const auto& ref = results.front();
  for (const ProbeResult& r : results) {
    if (r.eval_indices != ref.eval_indices || r.task_id != ref.task_id) {
      throw DataError("correctness_matrix: eval-set mismatch between probe results");
    }
  }
  for (int idx : ref.eval_indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= labels.labels.size()) {
      throw DataError("correctness_matrix: eval index outside the supplied label set");
    }
  }

  CorrectnessMatrix c;
  c.task_id = ref.task_id;
  c.samples = ref.eval_ids;
  const std::vector<int> eval_y = [&] {
    std::vector<int> out(ref.eval_indices.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = labels.labels.at(static_cast<std::size_t>(ref.eval_indices[i]));
    }
    return out;
  }();

  for (const ProbeResult& r : results) {
    const Tensor features = pooled_layer_features(traces, r.layer);
    Tensor eval_x = Tensor::matrix(r.eval_indices.size(), features.cols());
    for (std::size_t i = 0; i < r.eval_indices.size(); ++i) {
      const auto src = static_cast<std::size_t>(r.eval_indices[i]);
      std::copy_n(&features.data[src * features.cols()], features.cols(),
                  &eval_x.data[i * features.cols()]);
    }
    const std::vector<int> preds = predict(r.params, eval_x);
    std::vector<std::uint8_t> row(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      row[i] = preds[i] == eval_y[i] ? 1 : 0;
    }
    c.layers.push_back(r.layer);
    c.correct.push_back(std::move(row));
  }
  return c;
}

std::optional<double> failed_group_accuracy(const CorrectnessMatrix& c, int ref_layer,
                                            int alt_layer) {
  const std::size_t ref = c.layer_row(ref_layer);
  const std::size_t alt = c.layer_row(alt_layer);
  std::size_t failed = 0, rescued = 0;
  for (std::size_t s = 0; s < c.correct[ref].size(); ++s) {
    if (c.correct[ref][s]) continue;
    ++failed;
    if (c.correct[alt][s]) ++rescued;
  }
  if (failed == 0) return std::nullopt;
  return static_cast<double>(rescued) / static_cast<double>(failed);
}

double cross_layer_eval(const ProbeResult& trained, const std::vector<LayerTrace>& traces,
                        int layer) {
  const Tensor features = pooled_layer_features(traces, layer);
  if (features.cols() != trained.params.input_dim()) {
    throw ShapeError("cross_layer_eval: feature width " + std::to_string(features.cols()) +
                     " does not match connector input " +
                     std::to_string(trained.params.input_dim()));
  }
  if (trained.eval_labels.size() != trained.eval_indices.size()) {
    throw DataError("cross_layer_eval: probe result carries no eval labels");
  }
  Tensor eval_x = Tensor::matrix(trained.eval_indices.size(), features.cols());
  for (std::size_t i = 0; i < trained.eval_indices.size(); ++i) {
    const auto src = static_cast<std::size_t>(trained.eval_indices[i]);
    std::copy_n(&features.data[src * features.cols()], features.cols(),
                &eval_x.data[i * features.cols()]);
  }
  return accuracy(predict(trained.params, eval_x), trained.eval_labels);
}

std::map<std::string, int> best_layer_per_task(const ScoreTable& table) {
  table.validate();
  std::map<std::string, int> out;
  for (std::size_t t = 0; t < table.tasks.size(); ++t) {
    const bool higher = table.higher_better[t] != 0;
    std::size_t best = 0;
    for (std::size_t l = 1; l < table.layers.size(); ++l) {
      const double cur = table.scores[l][t];
      const double best_v = table.scores[best][t];
      if (higher ? cur > best_v : cur < best_v) best = l;
    }
    out[table.tasks[t]] = table.layers[best];
  }
  return out;
}

ScoreTable normalize_scores(const ScoreTable& table) {
  table.validate();
  ScoreTable out = table;
  for (std::size_t t = 0; t < table.tasks.size(); ++t) {
    double mn = table.scores[0][t], mx = table.scores[0][t];
    for (const auto& row : table.scores) {
      mn = std::min(mn, row[t]);
      mx = std::max(mx, row[t]);
    }
    for (std::size_t l = 0; l < table.scores.size(); ++l) {
      out.scores[l][t] = mx > mn ? (table.scores[l][t] - mn) / (mx - mn) : 0.5;
    }
  }
  return out;
}

std::string score_table_to_csv(const ScoreTable& table) {
  std::string out = "layer";
  for (const std::string& t : table.tasks) out += "," + t;
  out += '\n';
  char buf[40];
  for (std::size_t l = 0; l < table.layers.size(); ++l) {
    out += std::to_string(table.layers[l]);
    for (std::size_t t = 0; t < table.tasks.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%.9g", table.scores[l][t]);
      out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string score_table_to_json(const ScoreTable& table) {
  nlohmann::ordered_json j;
  j["layers"] = table.layers;
  j["tasks"] = table.tasks;
  auto scores = nlohmann::ordered_json::array();
  for (const auto& row : table.scores) scores.push_back(row);
  j["scores"] = std::move(scores);
  return j.dump(2) + "\n";
}

std::string correctness_to_csv(const CorrectnessMatrix& c) {
  std::string out = "layer";
  for (const std::string& s : c.samples) out += "," + s;
  out += '\n';
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    out += std::to_string(c.layers[l]);
    for (std::uint8_t v : c.correct[l]) {
      out += v ? ",1" : ",0";
    }
    out += '\n';
  }
  return out;
}

std::string correctness_to_json(const CorrectnessMatrix& c) {
  nlohmann::ordered_json j;
  j["task"] = c.task_id;
  j["layers"] = c.layers;
  j["samples"] = c.samples;
  auto grid = nlohmann::ordered_json::array();
  for (const auto& row : c.correct) {
    auto r = nlohmann::ordered_json::array();
    for (std::uint8_t v : row) r.push_back(v != 0);
    grid.push_back(std::move(r));
  }
  j["correct"] = std::move(grid);
  return j.dump(2) + "\n";
}

}  // namespace layerlens
