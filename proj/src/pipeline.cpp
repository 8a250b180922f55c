#include "layerlens/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "layerlens/digest.hpp"
#include "layerlens/fixtures.hpp"
#include "layerlens/fusion.hpp"
#include "layerlens/manifest.hpp"
#include "layerlens/planted.hpp"
#include "layerlens/rng.hpp"
#include "layerlens/vit.hpp"

namespace layerlens {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void log_line(const PipelineOptions& opts, const std::string& msg) {
  if (!opts.quiet) std::cout << msg << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("missing artifact: " + path.string());
  }
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string trace_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "traces/trace_%05d.ltrc", index);
  return buf;
}

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---- dataset generation ----------------------------------------------------

struct GeneratedData {
  std::vector<LayerTrace> traces;
  std::vector<std::pair<std::string, LabelSet>> tasks;
  ordered_json meta;  // dataset.json payload sans file list
};

GeneratedData generate_planted(const RunConfig& cfg) {
  GeneratedData out;
  const PlantedTraceSpec spec = cfg.planted_spec();
  PlantedDataset data = synthesize_planted_traces(spec);
  out.traces = std::move(data.traces);
  for (const PlantedTask& task : spec.tasks) {
    out.tasks.emplace_back(task.id,
                           LabelSet{data.labels.at(task.id), data.num_classes.at(task.id)});
  }

  out.meta["mode"] = "planted";
  out.meta["samples"] = spec.num_samples;
  out.meta["layers"] = spec.layers;
  out.meta["tokens"] = spec.tokens;
  out.meta["dim"] = spec.dim;
  out.meta["noise_sigma"] = spec.noise_sigma;
  auto tasks_json = ordered_json::array();
  for (const PlantedTask& t : spec.tasks) {
    tasks_json.push_back({{"id", t.id},
                          {"classes", t.num_classes},
                          {"band", {t.band_lo, t.band_hi}},
                          {"dims", t.decodable_dims},
                          {"strength", t.signal_strength}});
  }
  out.meta["tasks"] = std::move(tasks_json);
  return out;
}

GeneratedData generate_encoded(const RunConfig& cfg) {
  GeneratedData out;
  const VitWeights weights = init_weights(cfg.vit);
  SeededRng label_rng(derive_seed(cfg.seed, "encoder-labels"));
  SeededRng image_rng(derive_seed(cfg.seed, "encoder-images"));

  LabelSet labels;
  labels.num_classes = 4;
  out.traces.reserve(static_cast<std::size_t>(cfg.num_samples));
  for (int s = 0; s < cfg.num_samples; ++s) {
    const int quadrant = static_cast<int>(label_rng.uniform_int(4));
    SynthImage img = make_quadrant_image(cfg.vit, image_rng, quadrant);
    img.sample_id = "encoded_" + std::to_string(s);
    out.traces.push_back(encode_with_taps(img, weights, cfg.vit));
    labels.labels.push_back(quadrant);
  }
  out.tasks.emplace_back("quadrant", std::move(labels));

  out.meta["mode"] = "encoder";
  out.meta["samples"] = cfg.num_samples;
  out.meta["layers"] = cfg.vit.num_layers;
  out.meta["tokens"] = cfg.vit.num_tokens();
  out.meta["dim"] = cfg.vit.d_model;
  out.meta["encoder_config"] = hex64(cfg.vit.digest());
  out.meta["tasks"] = ordered_json::array({{{"id", "quadrant"}, {"classes", 4}}});
  return out;
}

// ---- small CSV readers for artifact reuse ----------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

ScoreTable parse_score_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("scores.csv is empty");
  }
  ScoreTable t;
  const auto header = split_csv_line(line);
  for (std::size_t i = 1; i < header.size(); ++i) {
    t.tasks.push_back(header[i]);
    t.higher_better.push_back(1);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("scores.csv: ragged row");
    }
    t.layers.push_back(std::stoi(cells[0]));
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
    t.scores.push_back(std::move(row));
  }
  t.validate();
  return t;
}

LayerGroups parse_groups_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  LayerGroups g;
  g.num_layers = j.at("layers").get<int>();
  g.boundaries = j.at("boundaries").get<std::vector<int>>();
  for (const auto& b : j.at("blocks")) {
    g.labels.push_back(b.at("name").get<std::string>());
  }
  g.validate();
  return g;
}

// ---- shared stage plumbing ---------------------------------------------------

struct StageContext {
  RunConfig cfg;
  PipelineOptions opts;
  RunManifest manifest;
  std::string digest;
};

StageContext open_stage(const RunConfig& cfg_in, const PipelineOptions& opts) {
  StageContext ctx{effective_config(cfg_in, opts), opts, RunManifest{}, ""};
  ctx.cfg.validate();
  fs::create_directories(opts.out_dir);
  ctx.manifest = RunManifest::load(opts.out_dir);
  ctx.digest = hex64(ctx.cfg.digest());
  return ctx;
}

SimilarityMatrix averaged_similarity(const RunConfig& cfg, const std::vector<LayerTrace>& traces) {
  if (cfg.averaging == AveragingOrder::average_then_cosine) {
    LayerMatrix mean = pool_trace(traces.front(), cfg.pooling);
    for (std::size_t s = 1; s < traces.size(); ++s) {
      const LayerMatrix m = pool_trace(traces[s], cfg.pooling);
      mean.rows = add(mean.rows, m.rows);
    }
    mean.rows = scale(mean.rows, 1.0 / static_cast<double>(traces.size()));
    return lrs_matrix(mean);
  }
  std::vector<SimilarityMatrix> per_sample;
  per_sample.reserve(traces.size());
  for (const LayerTrace& t : traces) {
    per_sample.push_back(lrs_matrix(pool_trace(t, cfg.pooling)));
  }
  return average_similarity(per_sample);
}

struct FuseRow {
  FusionSpec spec;
  std::vector<double> scores;  // per task
  int wins = 0;
  bool is_baseline = false;
};

}  // namespace

RunConfig effective_config(RunConfig cfg, const PipelineOptions& opts) {
  if (opts.seed_override) {
    cfg.seed = *opts.seed_override;
    cfg.train.seed = derive_seed(cfg.seed, "train");
    cfg.vit.seed = derive_seed(cfg.seed, "encoder");
  }
  if (opts.ref_layer_override) {
    cfg.ref_layer = *opts.ref_layer_override;
  }
  return cfg;
}

Dataset load_dataset(const std::filesystem::path& out_dir) {
  const auto meta_path = out_dir / "dataset.json";
  if (!fs::exists(meta_path)) {
    throw DataError("no dataset found in " + out_dir.string() + " (run generate first)");
  }
  const auto meta = nlohmann::json::parse(read_text(meta_path));

  Dataset out;
  const auto files = meta.at("trace_files").get<std::vector<std::string>>();
  const auto ids = meta.at("sample_ids").get<std::vector<std::string>>();
  if (files.size() != ids.size()) {
    throw DataError("dataset.json: trace_files and sample_ids disagree");
  }
  out.traces.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    LayerTrace t = read_trace(out_dir / files[i]);
    t.sample_id = ids[i];
    out.traces.push_back(std::move(t));
  }

  // labels.csv: sample_id,task_id,label — aligned with the trace order
  std::map<std::string, std::vector<int>> labels;
  std::map<std::string, int> classes;
  for (const auto& t : meta.at("tasks")) {
    classes[t.at("id").get<std::string>()] = t.at("classes").get<int>();
  }
  std::istringstream in(read_text(out_dir / "labels.csv"));
  std::string line;
  std::getline(in, line);
  if (line != "sample_id,task_id,label") {
    throw DataError("labels.csv: unexpected header '" + line + "'");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) {
      throw DataError("labels.csv: malformed row '" + line + "'");
    }
    labels[cells[1]].push_back(std::stoi(cells[2]));
  }
  for (const auto& t : meta.at("tasks")) {
    const std::string id = t.at("id").get<std::string>();
    auto it = labels.find(id);
    if (it == labels.end() || it->second.size() != out.traces.size()) {
      throw DataError("labels.csv: task '" + id + "' does not cover every sample");
    }
    out.tasks.emplace_back(id, LabelSet{std::move(it->second), classes.at(id)});
  }
  return out;
}

void cmd_generate(const RunConfig& cfg_in, const PipelineOptions& opts) {
  StageContext ctx = open_stage(cfg_in, opts);
  DirectoryLock lock(opts.out_dir);
  if (ctx.manifest.stage_current(opts.out_dir, "generate", ctx.digest)) {
    log_line(opts, "generate: up to date, skipping");
    return;
  }

  GeneratedData data = ctx.cfg.mode == DatasetMode::planted ? generate_planted(ctx.cfg)
                                                            : generate_encoded(ctx.cfg);

  std::vector<std::string> written;
  auto files = ordered_json::array();
  auto ids = ordered_json::array();
  for (std::size_t i = 0; i < data.traces.size(); ++i) {
    const std::string rel = trace_file_name(static_cast<int>(i));
    fs::create_directories(opts.out_dir / "traces");
    write_trace(data.traces[i], opts.out_dir / rel);
    written.push_back(rel);
    files.push_back(rel);
    ids.push_back(data.traces[i].sample_id);
  }

  std::string labels_csv = "sample_id,task_id,label\n";
  for (std::size_t s = 0; s < data.traces.size(); ++s) {
    for (const auto& [task_id, label_set] : data.tasks) {
      labels_csv += data.traces[s].sample_id + "," + task_id + "," +
                    std::to_string(label_set.labels[s]) + "\n";
    }
  }
  write_text(opts.out_dir / "labels.csv", labels_csv);
  written.push_back("labels.csv");

  data.meta["trace_files"] = std::move(files);
  data.meta["sample_ids"] = std::move(ids);
  write_text(opts.out_dir / "dataset.json", data.meta.dump(2) + "\n");
  written.push_back("dataset.json");

  ctx.manifest.record_stage(opts.out_dir, "generate", ctx.digest, written);
  log_line(opts, "generate: wrote " + std::to_string(data.traces.size()) + " traces");
}

void cmd_lrs(const RunConfig& cfg_in, const PipelineOptions& opts) {
  StageContext ctx = open_stage(cfg_in, opts);
  DirectoryLock lock(opts.out_dir);
  if (ctx.manifest.stage_current(opts.out_dir, "lrs", ctx.digest)) {
    log_line(opts, "lrs: up to date, skipping");
    return;
  }
  const Dataset data = load_dataset(opts.out_dir);

  const SimilarityMatrix averaged = averaged_similarity(ctx.cfg, data.traces);
  averaged.check_invariants();
  const LayerGroups groups = partition_layers(averaged, ctx.cfg.groups_k);

  write_text(opts.out_dir / "lrs.csv", similarity_to_csv(averaged));
  write_text(opts.out_dir / "lrs.json", similarity_to_json(averaged, groups));
  ctx.manifest.record_stage(opts.out_dir, "lrs", ctx.digest, {"lrs.csv", "lrs.json"});

  std::string cuts;
  for (int b : groups.boundaries) cuts += (cuts.empty() ? "" : ",") + std::to_string(b);
  log_line(opts, "lrs: partition boundaries {" + cuts + "}");
}

void cmd_sweep(const RunConfig& cfg_in, const PipelineOptions& opts) {
  StageContext ctx = open_stage(cfg_in, opts);
  DirectoryLock lock(opts.out_dir);
  if (ctx.manifest.stage_current(opts.out_dir, "sweep", ctx.digest)) {
    log_line(opts, "sweep: up to date, skipping");
    return;
  }
  const Dataset data = load_dataset(opts.out_dir);
  const SweepOutput sweep = sweep_layers(data.traces, data.tasks, ctx.cfg.train, opts.jobs);

  std::vector<std::string> written;
  write_text(opts.out_dir / "scores.csv", score_table_to_csv(sweep.table));
  written.push_back("scores.csv");
  write_text(opts.out_dir / "scores_normalized.csv",
             score_table_to_csv(normalize_scores(sweep.table)));
  written.push_back("scores_normalized.csv");
  write_text(opts.out_dir / "scores.json", score_table_to_json(sweep.table));
  written.push_back("scores.json");

  // per-task correctness grids, failed-group table and the no-training
  // cross-layer substitution row, all against the reference layer
  const int ref_layer = ctx.cfg.effective_ref_layer();
  std::string failed_csv = "task,ref_layer,alt_layer,value\n";
  std::string cross_csv = "task,trained_on,evaluated_on,accuracy\n";
  for (std::size_t t = 0; t < data.tasks.size(); ++t) {
    const auto& [task_id, label_set] = data.tasks[t];
    std::vector<ProbeResult> task_results;
    for (const ProbeResult& r : sweep.results) {
      if (r.task_id == task_id) task_results.push_back(r);
    }
    const CorrectnessMatrix grid = correctness_matrix(task_results, data.traces, label_set);
    const std::string rel = "correctness_" + task_id + ".csv";
    write_text(opts.out_dir / rel, correctness_to_csv(grid));
    written.push_back(rel);
    const std::string rel_json = "correctness_" + task_id + ".json";
    write_text(opts.out_dir / rel_json, correctness_to_json(grid));
    written.push_back(rel_json);

    const ProbeResult* ref_probe = nullptr;
    for (const ProbeResult& r : task_results) {
      if (r.layer == ref_layer) ref_probe = &r;
    }
    for (int alt = 1; alt <= data.traces.front().layers(); ++alt) {
      const auto value = failed_group_accuracy(grid, ref_layer, alt);
      failed_csv += task_id + "," + std::to_string(ref_layer) + "," + std::to_string(alt) + "," +
                    (value ? format_g9(*value) : std::string("undefined")) + "\n";
      if (ref_probe != nullptr) {
        cross_csv += task_id + "," + std::to_string(ref_layer) + "," + std::to_string(alt) + "," +
                     format_g9(cross_layer_eval(*ref_probe, data.traces, alt)) + "\n";
      }
    }
  }
  write_text(opts.out_dir / "failed_group.csv", failed_csv);
  written.push_back("failed_group.csv");
  write_text(opts.out_dir / "crosslayer.csv", cross_csv);
  written.push_back("crosslayer.csv");

  ctx.manifest.record_stage(opts.out_dir, "sweep", ctx.digest, written);
  log_line(opts, "sweep: probed " + std::to_string(sweep.table.layers.size()) + " layers x " +
                     std::to_string(data.tasks.size()) + " tasks");
}

void cmd_fuse(const RunConfig& cfg_in, const PipelineOptions& opts) {
  StageContext ctx = open_stage(cfg_in, opts);
  DirectoryLock lock(opts.out_dir);
  if (ctx.manifest.stage_current(opts.out_dir, "fuse", ctx.digest)) {
    log_line(opts, "fuse: up to date, skipping");
    return;
  }
  const Dataset data = load_dataset(opts.out_dir);
  const int total_layers = data.traces.front().layers();

  // reuse the sweep table when its artifacts are current, else recompute
  ScoreTable table;
  if (ctx.manifest.stage_current(opts.out_dir, "sweep", ctx.digest)) {
    table = parse_score_csv(read_text(opts.out_dir / "scores.csv"));
  } else {
    log_line(opts, "fuse: sweep artifacts missing, probing layers in memory");
    table = sweep_layers(data.traces, data.tasks, ctx.cfg.train, opts.jobs).table;
  }

  // baseline: the single layer with the best mean score across tasks
  int baseline_layer = table.layers.front();
  double baseline_mean = -1e300;
  for (std::size_t l = 0; l < table.layers.size(); ++l) {
    double mean = 0.0;
    for (double v : table.scores[l]) mean += v;
    mean /= static_cast<double>(table.tasks.size());
    if (mean > baseline_mean) {
      baseline_mean = mean;
      baseline_layer = table.layers[l];
    }
  }

  std::vector<FuseRow> rows;
  {
    FuseRow base;
    base.spec = FusionSpec{{baseline_layer}, "baseline_" + std::to_string(baseline_layer)};
    base.is_baseline = true;
    rows.push_back(std::move(base));
  }
  for (const FusionSetRef& ref : ctx.cfg.fusion_sets) {
    FuseRow row;
    if (ref.is_builtin()) {
      for (FusionSpec& spec : builtin_layer_sets(total_layers)) {
        if (spec.name == ref.name) row.spec = std::move(spec);
      }
    } else {
      row.spec = FusionSpec{ref.layers, ref.name};
    }
    rows.push_back(std::move(row));
  }
  if (ctx.cfg.lrs_selection) {
    LayerGroups groups;
    if (ctx.manifest.stage_current(opts.out_dir, "lrs", ctx.digest)) {
      groups = parse_groups_json(read_text(opts.out_dir / "lrs.json"));
    } else {
      log_line(opts, "fuse: lrs artifacts missing, partitioning in memory");
      groups = partition_layers(averaged_similarity(ctx.cfg, data.traces), ctx.cfg.groups_k);
    }
    const std::string objective =
        ctx.cfg.objective_task.empty() ? table.tasks.front() : ctx.cfg.objective_task;
    FuseRow row;
    row.spec = lrs_driven_selection(groups, table, objective);
    rows.push_back(std::move(row));
  }

  for (FuseRow& row : rows) {
    for (const auto& [task_id, label_set] : data.tasks) {
      (void)task_id;
      row.scores.push_back(
          probe_fused(data.traces, label_set, row.spec, ctx.cfg.train).eval_accuracy);
    }
  }
  const std::vector<double>& baseline_scores = rows.front().scores;
  for (FuseRow& row : rows) {
    for (std::size_t t = 0; t < row.scores.size(); ++t) {
      if (row.scores[t] > baseline_scores[t]) ++row.wins;
    }
  }

  std::string csv = "name,layers";
  for (const auto& [task_id, _] : data.tasks) csv += "," + task_id;
  csv += ",win\n";
  ordered_json rows_json = ordered_json::array();
  for (const FuseRow& row : rows) {
    csv += row.spec.name + "," + row.spec.describe();
    for (double v : row.scores) csv += "," + format_g9(v);
    csv += "," + std::to_string(row.wins) + "/" + std::to_string(data.tasks.size()) + "\n";

    ordered_json r;
    r["name"] = row.spec.name;
    r["layers"] = row.spec.layers;
    auto scores_json = ordered_json::object();
    for (std::size_t t = 0; t < data.tasks.size(); ++t) {
      scores_json[data.tasks[t].first] = row.scores[t];
    }
    r["scores"] = std::move(scores_json);
    r["wins"] = row.wins;
    r["baseline"] = row.is_baseline;
    rows_json.push_back(std::move(r));
  }
  write_text(opts.out_dir / "fusion.csv", csv);
  ordered_json fusion_json;
  fusion_json["baseline_layer"] = baseline_layer;
  fusion_json["tasks"] = [&] {
    auto arr = ordered_json::array();
    for (const auto& [task_id, _] : data.tasks) arr.push_back(task_id);
    return arr;
  }();
  fusion_json["rows"] = std::move(rows_json);
  write_text(opts.out_dir / "fusion.json", fusion_json.dump(2) + "\n");

  ctx.manifest.record_stage(opts.out_dir, "fuse", ctx.digest, {"fusion.csv", "fusion.json"});
  log_line(opts, "fuse: compared " + std::to_string(rows.size()) + " layer sets against layer " +
                     std::to_string(baseline_layer));
}

namespace {

// Reference-grid cross checks for cmd_report. Any mismatch is a numerical
// invariant violation: the fixture is frozen, so disagreement means the
// selection machinery broke.
ordered_json reference_grid_report() {
  const ScoreTable grid = fixtures::reference_layer_scores();
  const auto best = best_layer_per_task(grid);
  if (best != fixtures::reference_best_layers()) {
    throw NumericalError("reference grid check failed: best-layer derivation drifted");
  }

  LayerGroups groups;
  groups.num_layers = 24;
  groups.boundaries = {12, 20};
  groups.labels = {"shallow", "middle", "deep"};
  const FusionSpec pick = lrs_driven_selection(groups, grid, "MME_P");
  if (pick.layers != std::vector<int>{23, 20, 12}) {
    throw NumericalError("reference grid check failed: group-wise maxima drifted");
  }

  const auto sets = builtin_layer_sets(24);
  const std::vector<std::vector<int>> want = {
      {23, 18}, {23, 18, 1}, {23, 18, 17}, {23, 16, 8}, {23, 18, 3}};
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].layers != want[i]) {
      throw NumericalError("reference grid check failed: built-in layer sets drifted");
    }
  }

  ordered_json j;
  auto best_json = ordered_json::object();
  for (const auto& [task, layer] : best) {
    best_json[task] = ordered_json{{"layer", layer}, {"score", grid.score(layer, task)}};
  }
  j["best_layers"] = std::move(best_json);
  j["group_selection_MME_P"] = pick.layers;
  j["builtin_sets_ok"] = true;
  return j;
}

}  // namespace

void cmd_report(const RunConfig& cfg_in, const PipelineOptions& opts) {
  StageContext ctx = open_stage(cfg_in, opts);
  DirectoryLock lock(opts.out_dir);

  if (ctx.manifest.stages.empty()) {
    throw DataError("report: no upstream artifacts in " + opts.out_dir.string() +
                    " (run generate/lrs/sweep/fuse first)");
  }

  ordered_json report;
  report["tool_version"] = kToolVersion;
  report["config_digest"] = ctx.digest;

  auto stages_json = ordered_json::object();
  for (const auto& [stage, rec] : ctx.manifest.stages) {
    if (stage == "report") continue;
    ordered_json s;
    s["current"] = ctx.manifest.stage_current(opts.out_dir, stage, ctx.digest);
    s["artifacts"] = [&] {
      auto arr = ordered_json::array();
      for (const auto& [path, digest] : rec.artifacts) {
        arr.push_back({{"path", path}, {"digest", digest}});
      }
      return arr;
    }();
    stages_json[stage] = std::move(s);
  }
  report["stages"] = std::move(stages_json);

  std::string report_csv = "task,best_layer,score\n";
  if (ctx.manifest.stages.count("lrs") != 0u) {
    const auto groups = parse_groups_json(read_text(opts.out_dir / "lrs.json"));
    report["partition"] = {{"boundaries", groups.boundaries}, {"labels", groups.labels}};
  }
  if (ctx.manifest.stages.count("sweep") != 0u) {
    const ScoreTable table = parse_score_csv(read_text(opts.out_dir / "scores.csv"));
    const auto best = best_layer_per_task(table);
    auto best_json = ordered_json::object();
    for (const auto& [task, layer] : best) {
      best_json[task] = ordered_json{{"layer", layer}, {"score", table.score(layer, task)}};
      report_csv += task + "," + std::to_string(layer) + "," +
                    format_g9(table.score(layer, task)) + "\n";
    }
    report["best_layers"] = std::move(best_json);
  }
  if (ctx.manifest.stages.count("fuse") != 0u) {
    report["fusion"] = nlohmann::json::parse(read_text(opts.out_dir / "fusion.json"));
  }
  if (ctx.cfg.reference_grid_checks) {
    report["reference_grid"] = reference_grid_report();
  }

  write_text(opts.out_dir / "report.json", report.dump(2) + "\n");
  write_text(opts.out_dir / "report.csv", report_csv);
  ctx.manifest.record_stage(opts.out_dir, "report", ctx.digest, {"report.json", "report.csv"});
  log_line(opts, "report: consolidated " + std::to_string(ctx.manifest.stages.size() - 1) +
                     " stages into report.json");
}

}  // namespace layerlens
