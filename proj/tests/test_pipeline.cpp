#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "layerlens/pipeline.hpp"

using namespace layerlens;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("layerlens_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LAYERLENS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// small fast config for CLI round trips
RunConfig tiny_config() {
  return parse_run_config(R"(schema_version = 1
[run]
seed = 11
[vit]
layers = 6
d_model = 16
heads = 2
d_ff = 32
image_size = 8
patch_size = 4
[data]
samples = 48
noise_sigma = 0.25
task = low band=1:2 strength=1.2 dims=0:5 classes=3
task = high band=5:6 strength=1.2 dims=6:11 classes=3
[train]
phase1_epochs = 4
phase2_epochs = 1
batch_size = 16
d_hidden = 16
[fusion]
set = bands:6,2
objective_task = low
)");
}

void write_tiny_config(const fs::path& p) {
  std::ofstream out(p);
  out << R"(schema_version = 1
[run]
seed = 11
[vit]
layers = 6
d_model = 16
heads = 2
d_ff = 32
image_size = 8
patch_size = 4
[data]
samples = 48
noise_sigma = 0.25
task = low band=1:2 strength=1.2 dims=0:5 classes=3
task = high band=5:6 strength=1.2 dims=6:11 classes=3
[train]
phase1_epochs = 4
phase2_epochs = 1
batch_size = 16
d_hidden = 16
[fusion]
set = bands:6,2
objective_task = low
)";
}

void run_all_stages(const RunConfig& cfg, const PipelineOptions& opts) {
  cmd_generate(cfg, opts);
  cmd_lrs(cfg, opts);
  cmd_sweep(cfg, opts);
  cmd_fuse(cfg, opts);
  cmd_report(cfg, opts);
}

}  // namespace

TEST_CASE("full pipeline produces every artifact and a loadable dataset") {
  TempDir tmp("full");
  PipelineOptions opts;
  opts.out_dir = tmp.path;
  opts.quiet = true;
  run_all_stages(tiny_config(), opts);

  for (const char* name :
       {"dataset.json", "labels.csv", "lrs.csv", "lrs.json", "scores.csv",
        "scores_normalized.csv", "scores.json", "correctness_low.csv", "correctness_low.json",
        "correctness_high.csv", "correctness_high.json", "failed_group.csv", "crosslayer.csv", "fusion.csv", "fusion.json", "report.json", "report.csv",
        "manifest.json"}) {
    CHECK(fs::exists(tmp.path / name));
  }
  const Dataset data = load_dataset(tmp.path);
  CHECK(data.traces.size() == 48);
  CHECK(data.tasks.size() == 2);
  CHECK(data.traces.front().layers() == 6);

  // the partition boundaries align with the planted bands (1:2 and 5:6)
  const auto lrs = nlohmann::json::parse(read_file(tmp.path / "lrs.json"));
  const auto boundaries = lrs.at("boundaries").get<std::vector<int>>();
  REQUIRE(boundaries.size() == 2);
  CHECK(std::abs(boundaries[0] - 2) <= 1);
  CHECK(std::abs(boundaries[1] - 4) <= 1);

  // fusion rows carry the configured set plus the baseline and the lrs pick
  const auto fusion = nlohmann::json::parse(read_file(tmp.path / "fusion.json"));
  std::vector<std::string> names;
  for (const auto& row : fusion.at("rows")) names.push_back(row.at("name").get<std::string>());
  CHECK(names.size() == 3);
  CHECK(names[1] == "bands");
  CHECK(names[2] == "lrs_pick");

  // baseline never beats itself; a set spanning both bands wins somewhere
  CHECK(fusion.at("rows")[0].at("wins").get<int>() == 0);
  CHECK(fusion.at("rows")[1].at("wins").get<int>() >= 1);
}

TEST_CASE("same seed twice gives byte-identical artifacts, timestamps aside") {
  TempDir a("det_a"), b("det_b");
  PipelineOptions oa, ob;
  oa.out_dir = a.path;
  ob.out_dir = b.path;
  oa.quiet = ob.quiet = true;
  oa.jobs = 1;
  ob.jobs = 3;  // worker count must not matter
  run_all_stages(tiny_config(), oa);
  run_all_stages(tiny_config(), ob);

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a.path);
    if (rel == "manifest.json") continue;  // carries created_at
    CHECK(read_file(entry.path()) == read_file(b.path / rel));
    ++compared;
  }
  CHECK(compared > 50);  // 48 traces + tables
}

TEST_CASE("different seeds give different traces") {
  TempDir a("seed_a"), b("seed_b");
  PipelineOptions oa, ob;
  oa.out_dir = a.path;
  ob.out_dir = b.path;
  oa.quiet = ob.quiet = true;
  ob.seed_override = 999;
  cmd_generate(tiny_config(), oa);
  cmd_generate(tiny_config(), ob);
  CHECK(read_file(a.path / "traces/trace_00000.ltrc") !=
        read_file(b.path / "traces/trace_00000.ltrc"));
}

TEST_CASE("stages are resumable: matching digests skip, config changes recompute") {
  TempDir tmp("resume");
  PipelineOptions opts;
  opts.out_dir = tmp.path;
  opts.quiet = true;
  const RunConfig cfg = tiny_config();
  cmd_generate(cfg, opts);
  const auto first_write = fs::last_write_time(tmp.path / "dataset.json");
  cmd_generate(cfg, opts);  // skip: file untouched
  CHECK(fs::last_write_time(tmp.path / "dataset.json") == first_write);

  PipelineOptions reseeded = opts;
  reseeded.seed_override = 1234;
  cmd_generate(cfg, reseeded);  // different digest: regenerated
  CHECK(fs::last_write_time(tmp.path / "dataset.json") != first_write);
}

TEST_CASE("encoder mode runs end to end") {
  TempDir tmp("encoder");
  PipelineOptions opts;
  opts.out_dir = tmp.path;
  opts.quiet = true;
  RunConfig cfg = parse_run_config(R"(schema_version = 1
[run]
mode = encoder
seed = 3
[vit]
layers = 4
d_model = 16
heads = 2
d_ff = 32
image_size = 8
patch_size = 4
[data]
samples = 32
[train]
phase1_epochs = 3
phase2_epochs = 1
batch_size = 16
d_hidden = 16
[fusion]
lrs_selection = false
)");
  cmd_generate(cfg, opts);
  cmd_lrs(cfg, opts);
  cmd_sweep(cfg, opts);
  const Dataset data = load_dataset(tmp.path);
  CHECK(data.tasks.size() == 1);
  CHECK(data.tasks[0].first == "quadrant");
  CHECK(data.tasks[0].second.num_classes == 4);
}

TEST_CASE("report without upstream artifacts is a data error") {
  TempDir tmp("empty_report");
  PipelineOptions opts;
  opts.out_dir = tmp.path;
  opts.quiet = true;
  CHECK_THROWS_AS(cmd_report(tiny_config(), opts), DataError);
}

TEST_CASE("lrs before generate is a data error") {
  TempDir tmp("no_gen");
  PipelineOptions opts;
  opts.out_dir = tmp.path;
  opts.quiet = true;
  CHECK_THROWS_AS(cmd_lrs(tiny_config(), opts), DataError);
}

TEST_CASE("cli exit codes: success, config error, data error") {
  TempDir tmp("cli");
  const fs::path cfg_file = tmp.path / "run.cfg";
  fs::create_directories(tmp.path);
  write_tiny_config(cfg_file);
  const std::string base = "--config " + cfg_file.string() + " --out " + (tmp.path / "o").string();

  CHECK(run_cli("generate " + base) == 0);
  CHECK(run_cli("lrs " + base) == 0);
  CHECK(run_cli("sweep " + base + " --jobs 2") == 0);
  CHECK(run_cli("fuse " + base) == 0);
  CHECK(run_cli("report " + base) == 0);

  // data error: report on an empty directory
  CHECK(run_cli("report --config " + cfg_file.string() + " --out " +
                (tmp.path / "none").string()) == 3);

  // config error: malformed config file
  const fs::path bad = tmp.path / "bad.cfg";
  std::ofstream(bad) << "schema_version = 1\n[vit]\nbogus = 1\n";
  CHECK(run_cli("generate --config " + bad.string() + " --out " + (tmp.path / "o2").string()) ==
        2);

  // config error: unknown flag
  CHECK(run_cli("generate --nonsense") == 2);

  // config error: ref layer outside the encoder depth
  CHECK(run_cli("sweep " + base + " --ref-layer 19") == 2);
}

TEST_CASE("cli ref-layer override lands in failed_group.csv") {
  TempDir tmp("refl");
  const fs::path cfg_file = tmp.path / "run.cfg";
  fs::create_directories(tmp.path);
  write_tiny_config(cfg_file);
  const std::string out = (tmp.path / "o").string();
  REQUIRE(run_cli("generate --config " + cfg_file.string() + " --out " + out) == 0);
  REQUIRE(run_cli("sweep --config " + cfg_file.string() + " --out " + out + " --ref-layer 3") ==
          0);
  const std::string failed = read_file(tmp.path / "o" / "failed_group.csv");
  CHECK(failed.find("low,3,1,") != std::string::npos);
}

TEST_CASE("averaging order is honored: the two orders give different matrices") {
  TempDir a("avg_a"), b("avg_b");
  PipelineOptions oa, ob;
  oa.out_dir = a.path;
  ob.out_dir = b.path;
  oa.quiet = ob.quiet = true;

  RunConfig cta = tiny_config();
  cmd_generate(cta, oa);
  cmd_lrs(cta, oa);

  std::string text = R"(schema_version = 1
[run]
seed = 11
[vit]
layers = 6
d_model = 16
heads = 2
d_ff = 32
image_size = 8
patch_size = 4
[data]
samples = 48
noise_sigma = 0.25
task = low band=1:2 strength=1.2 dims=0:5 classes=3
task = high band=5:6 strength=1.2 dims=6:11 classes=3
[analysis]
averaging = average_then_cosine
)";
  RunConfig atc = parse_run_config(text);
  cmd_generate(atc, ob);
  cmd_lrs(atc, ob);

  CHECK(read_file(a.path / "lrs.csv") != read_file(b.path / "lrs.csv"));
  // traces themselves are identical: same seed, same data block
  CHECK(read_file(a.path / "traces/trace_00000.ltrc") ==
        read_file(b.path / "traces/trace_00000.ltrc"));
}

TEST_CASE("cli surfaces numerical invariant violations as exit 4") {
  TempDir tmp("numerical");
  // noise-free dataset whose layers outside the band pool to all-zero rows:
  // the similarity computation must refuse the zero-norm representation
  const fs::path cfg_file = tmp.path / "degenerate.cfg";
  fs::create_directories(tmp.path);
  std::ofstream(cfg_file) << R"(schema_version = 1
[run]
seed = 2
[vit]
layers = 6
d_model = 16
heads = 2
d_ff = 32
image_size = 8
patch_size = 4
[data]
samples = 8
noise_sigma = 0
task = only band=1:2 strength=1.0 dims=0:5 classes=3
)";
  const std::string out = (tmp.path / "o").string();
  REQUIRE(run_cli("generate --config " + cfg_file.string() + " --out " + out) == 0);
  CHECK(run_cli("lrs --config " + cfg_file.string() + " --out " + out) == 4);
}

TEST_CASE("a stale lock blocks the command with a data error") {
  TempDir tmp("lock");
  fs::create_directories(tmp.path / "o");
  std::ofstream(tmp.path / "o" / ".layerlens.lock") << "";
  PipelineOptions opts;
  opts.out_dir = tmp.path / "o";
  opts.quiet = true;
  CHECK_THROWS_AS(cmd_generate(tiny_config(), opts), DataError);
}
