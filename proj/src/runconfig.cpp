#include "layerlens/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "layerlens/digest.hpp"
#include "layerlens/fusion.hpp"
#include "layerlens/rng.hpp"

namespace layerlens {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    fail(line, key + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    fail(line, key + ": expected an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    fail(line, key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(line, key + ": expected true/false, got '" + v + "'");
}

// dims spec: comma list of "a" or "a:b" inclusive ranges
std::vector<int> parse_dims(const std::string& v, int line) {
  std::vector<int> out;
  for (const std::string& part : split(v, ',')) {
    const std::string p = trim(part);
    if (p.empty()) fail(line, "task dims: empty element");
    const auto colon = p.find(':');
    if (colon == std::string::npos) {
      out.push_back(static_cast<int>(parse_int(p, line, "task dims")));
    } else {
      const int lo = static_cast<int>(parse_int(p.substr(0, colon), line, "task dims"));
      const int hi = static_cast<int>(parse_int(p.substr(colon + 1), line, "task dims"));
      if (hi < lo) fail(line, "task dims: descending range " + p);
      for (int d = lo; d <= hi; ++d) out.push_back(d);
    }
  }
  return out;
}

// task value: "<id> band=<lo>:<hi> strength=<x> dims=<spec> classes=<n>"
PlantedTask parse_task(const std::string& value, int line) {
  std::istringstream in(value);
  PlantedTask task;
  if (!(in >> task.id)) fail(line, "task: missing id");
  bool saw_band = false, saw_dims = false;
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) fail(line, "task: expected key=value, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "band") {
      const auto colon = val.find(':');
      if (colon == std::string::npos) fail(line, "task band: expected lo:hi");
      task.band_lo = static_cast<int>(parse_int(val.substr(0, colon), line, "task band"));
      task.band_hi = static_cast<int>(parse_int(val.substr(colon + 1), line, "task band"));
      saw_band = true;
    } else if (key == "strength") {
      task.signal_strength = parse_double(val, line, "task strength");
    } else if (key == "dims") {
      task.decodable_dims = parse_dims(val, line);
      saw_dims = true;
    } else if (key == "classes") {
      task.num_classes = static_cast<int>(parse_int(val, line, "task classes"));
    } else {
      fail(line, "task: unknown attribute '" + key + "'");
    }
  }
  if (!saw_band || !saw_dims) fail(line, "task '" + task.id + "': band and dims are required");
  return task;
}

// fusion set value: builtin name or "name:1,5,9"
FusionSetRef parse_fusion_set(const std::string& value, int line) {
  FusionSetRef ref;
  const auto colon = value.find(':');
  if (colon == std::string::npos) {
    ref.name = trim(value);
    if (ref.name.empty()) fail(line, "fusion set: empty name");
    return ref;
  }
  ref.name = trim(value.substr(0, colon));
  if (ref.name.empty()) fail(line, "fusion set: empty name");
  for (const std::string& part : split(value.substr(colon + 1), ',')) {
    ref.layers.push_back(static_cast<int>(parse_int(trim(part), line, "fusion set")));
  }
  if (ref.layers.empty()) fail(line, "fusion set '" + ref.name + "': empty layer list");
  return ref;
}

}  // namespace

PlantedTraceSpec RunConfig::planted_spec() const {
  PlantedTraceSpec spec;
  spec.layers = vit.num_layers;
  spec.tokens = vit.num_tokens();
  spec.dim = vit.d_model;
  spec.tasks = planted_tasks;
  spec.noise_sigma = noise_sigma;
  spec.num_samples = num_samples;
  spec.cls_flag = vit.cls_token;
  spec.seed = derive_seed(seed, "dataset");
  return spec;
}

int RunConfig::effective_ref_layer() const {
  if (ref_layer != 0) return ref_layer;
  return std::max(1, vit.num_layers - 1);  // penultimate
}

void RunConfig::validate() const {
  vit.validate();
  train.validate();
  if (num_samples <= 0) {
    throw ConfigError("data.samples must be positive (empty dataset)");
  }
  if (noise_sigma < 0.0) {
    throw ConfigError("data.noise_sigma must be >= 0");
  }
  if (mode == DatasetMode::planted) {
    if (planted_tasks.empty()) {
      throw ConfigError("planted mode requires at least one data.task");
    }
    planted_spec().validate();
  } else if (!planted_tasks.empty()) {
    throw ConfigError("data.task entries are only valid in planted mode");
  }
  if (groups_k < 1 || groups_k > vit.num_layers) {
    throw ConfigError("analysis.groups must lie in [1, vit.layers]");
  }
  if (ref_layer < 0 || ref_layer > vit.num_layers) {
    throw ConfigError("sweep.ref_layer must lie in [0, vit.layers] (0 = penultimate)");
  }
  if (pooling == PoolingMode::cls && !vit.cls_token) {
    throw ConfigError("analysis.pooling = cls requires vit.cls_token = true");
  }
  for (const FusionSetRef& ref : fusion_sets) {
    if (!ref.is_builtin()) {
      FusionSpec spec{ref.layers, ref.name};
      try {
        spec.validate(vit.num_layers);
      } catch (const ValueError& e) {
        throw ConfigError(std::string("fusion.set: ") + e.what());
      }
    } else if (ref.name != "L1" && ref.name != "L2" && ref.name != "L3" && ref.name != "L4" &&
               ref.name != "L5") {
      throw ConfigError("fusion.set: unknown built-in set '" + ref.name +
                        "' (expected L1..L5 or name:layer,layer,...)");
    }
  }
  if (!objective_task.empty() && mode == DatasetMode::planted) {
    const bool known = std::any_of(planted_tasks.begin(), planted_tasks.end(),
                                   [&](const PlantedTask& t) { return t.id == objective_task; });
    if (!known) {
      throw ConfigError("fusion.objective_task '" + objective_task + "' is not a data.task");
    }
  }
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  out << "schema=1;seed=" << seed << ";mode=" << (mode == DatasetMode::planted ? "planted" : "encoder")
      << ";vit=" << vit.num_layers << ',' << vit.d_model << ',' << vit.num_heads << ','
      << vit.d_ff << ',' << vit.patch_size << ',' << vit.image_size << ',' << vit.channels << ','
      << vit.layernorm_eps << ',' << vit.cls_token << ',' << vit.fused_residual << ',' << vit.seed
      << ";data=" << num_samples << ',' << noise_sigma << ";tasks=";
  for (const PlantedTask& t : planted_tasks) {
    out << t.id << '[' << t.band_lo << '-' << t.band_hi << ';' << t.signal_strength << ';';
    for (int d : t.decodable_dims) out << d << ' ';
    out << ';' << t.num_classes << ']';
  }
  out << ";train=" << train.phase1_lr << ',' << train.phase2_lr << ',' << train.phase1_epochs
      << ',' << train.phase2_epochs << ',' << train.batch_size << ',' << train.d_hidden << ','
      << to_string(train.optimizer) << ',' << train.weight_decay << ',' << train.cosine_anneal
      << ',' << train.seed << ";analysis=" << to_string(pooling) << ',' << groups_k << ','
      << (averaging == AveragingOrder::cosine_then_average ? "cta" : "atc")
      << ";ref_layer=" << ref_layer << ";fusion=";
  for (const FusionSetRef& ref : fusion_sets) {
    out << ref.name << '(';
    for (int l : ref.layers) out << l << ' ';
    out << ')';
  }
  out << ";lrs_selection=" << lrs_selection << ";objective=" << objective_task
      << ";reference_grid=" << reference_grid_checks;
  return out.str();
}

std::uint64_t RunConfig::digest() const { return fnv1a64(canonical()); }

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg = RunConfig{};
  cfg.fusion_sets.clear();
  cfg.planted_tasks.clear();

  bool saw_schema = false;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "run" && section != "vit" && section != "data" && section != "train" &&
          section != "analysis" && section != "sweep" && section != "fusion" &&
          section != "report") {
        fail(line_no, "unknown section [" + section + "]");
      }
      if (!saw_schema) fail(line_no, "schema_version must appear before any section");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");

    if (section.empty()) {
      if (key == "schema_version") {
        const long long v = parse_int(value, line_no, key);
        if (v != 1) fail(line_no, "unsupported schema_version " + value + " (expected 1)");
        saw_schema = true;
        continue;
      }
      fail(line_no, "key '" + key + "' outside any section (only schema_version is allowed)");
    }

    if (section == "run") {
      if (key == "seed") cfg.seed = parse_u64(value, line_no, key);
      else if (key == "mode") {
        if (value == "planted") cfg.mode = DatasetMode::planted;
        else if (value == "encoder") cfg.mode = DatasetMode::encoder;
        else fail(line_no, "run.mode: expected planted or encoder, got '" + value + "'");
      } else fail(line_no, "unknown key run." + key);
    } else if (section == "vit") {
      if (key == "layers") cfg.vit.num_layers = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "d_model") cfg.vit.d_model = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "heads") cfg.vit.num_heads = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "d_ff") cfg.vit.d_ff = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "patch_size") cfg.vit.patch_size = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "image_size") cfg.vit.image_size = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "channels") cfg.vit.channels = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "layernorm_eps") cfg.vit.layernorm_eps = parse_double(value, line_no, key);
      else if (key == "cls_token") cfg.vit.cls_token = parse_bool(value, line_no, key);
      else if (key == "fused_residual") cfg.vit.fused_residual = parse_bool(value, line_no, key);
      else fail(line_no, "unknown key vit." + key);
    } else if (section == "data") {
      if (key == "samples") cfg.num_samples = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "noise_sigma") cfg.noise_sigma = parse_double(value, line_no, key);
      else if (key == "task") cfg.planted_tasks.push_back(parse_task(value, line_no));
      else fail(line_no, "unknown key data." + key);
    } else if (section == "train") {
      if (key == "phase1_lr") cfg.train.phase1_lr = parse_double(value, line_no, key);
      else if (key == "phase2_lr") cfg.train.phase2_lr = parse_double(value, line_no, key);
      else if (key == "phase1_epochs") cfg.train.phase1_epochs = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "phase2_epochs") cfg.train.phase2_epochs = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "d_hidden") cfg.train.d_hidden = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "optimizer") cfg.train.optimizer = optimizer_from_string(value);
      else if (key == "weight_decay") cfg.train.weight_decay = parse_double(value, line_no, key);
      else if (key == "cosine_anneal") cfg.train.cosine_anneal = parse_bool(value, line_no, key);
      else fail(line_no, "unknown key train." + key);
    } else if (section == "analysis") {
      if (key == "pooling") cfg.pooling = pooling_mode_from_string(value);
      else if (key == "groups") cfg.groups_k = static_cast<int>(parse_int(value, line_no, key));
      else if (key == "averaging") {
        if (value == "cosine_then_average") cfg.averaging = AveragingOrder::cosine_then_average;
        else if (value == "average_then_cosine") cfg.averaging = AveragingOrder::average_then_cosine;
        else fail(line_no, "analysis.averaging: expected cosine_then_average or average_then_cosine");
      } else fail(line_no, "unknown key analysis." + key);
    } else if (section == "sweep") {
      if (key == "ref_layer") cfg.ref_layer = static_cast<int>(parse_int(value, line_no, key));
      else fail(line_no, "unknown key sweep." + key);
    } else if (section == "fusion") {
      if (key == "set") cfg.fusion_sets.push_back(parse_fusion_set(value, line_no));
      else if (key == "lrs_selection") cfg.lrs_selection = parse_bool(value, line_no, key);
      else if (key == "objective_task") cfg.objective_task = value;
      else fail(line_no, "unknown key fusion." + key);
    } else if (section == "report") {
      if (key == "reference_grid") cfg.reference_grid_checks = parse_bool(value, line_no, key);
      else fail(line_no, "unknown key report." + key);
    }
  }

  if (!saw_schema) {
    throw ConfigError("config: missing schema_version (expected 'schema_version = 1' first)");
  }
  // training's seed derives from the run seed unless overridden elsewhere
  cfg.train.seed = derive_seed(cfg.seed, "train");
  cfg.vit.seed = derive_seed(cfg.seed, "encoder");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

RunConfig default_run_config() {
  // the desk-scale two-band planted setup
  const std::string text = R"(schema_version = 1

[run]
seed = 42
mode = planted

[data]
samples = 512
noise_sigma = 0.25
task = low_band band=1:4 strength=1.0 dims=0:7 classes=4
task = high_band band=9:12 strength=1.0 dims=8:15 classes=4

[fusion]
set = L1
set = L2
set = L3
set = L4
set = L5
objective_task = low_band
)";
  return parse_run_config(text);
}

}  // namespace layerlens
