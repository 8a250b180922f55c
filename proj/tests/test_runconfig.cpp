#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "layerlens/runconfig.hpp"

using namespace layerlens;

namespace {

const std::string kValid = R"(schema_version = 1

# desk-scale two-band run
[run]
seed = 7
mode = planted

[vit]
layers = 12
d_model = 32
heads = 4

[data]
samples = 64
noise_sigma = 0.2
task = low band=1:4 strength=1.5 dims=0:7 classes=4
task = high band=9:12 strength=1.0 dims=8,9,10:15 classes=3

[train]
phase1_epochs = 3
phase2_epochs = 1
optimizer = sgd

[analysis]
pooling = mean_patches
groups = 3

[sweep]
ref_layer = 10

[fusion]
set = L5
set = bands:10,3
objective_task = low

[report]
reference_grid = false
)";

}  // namespace

TEST_CASE("a complete config parses with every field applied") {
  const RunConfig cfg = parse_run_config(kValid);
  CHECK(cfg.seed == 7);
  CHECK(cfg.mode == DatasetMode::planted);
  CHECK(cfg.vit.num_layers == 12);
  CHECK(cfg.num_samples == 64);
  CHECK(cfg.noise_sigma == 0.2);
  REQUIRE(cfg.planted_tasks.size() == 2);
  CHECK(cfg.planted_tasks[0].id == "low");
  CHECK(cfg.planted_tasks[0].band_lo == 1);
  CHECK(cfg.planted_tasks[0].band_hi == 4);
  CHECK(cfg.planted_tasks[0].signal_strength == 1.5);
  CHECK(cfg.planted_tasks[0].decodable_dims == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(cfg.planted_tasks[1].decodable_dims ==
        std::vector<int>{8, 9, 10, 11, 12, 13, 14, 15});
  CHECK(cfg.planted_tasks[1].num_classes == 3);
  CHECK(cfg.train.phase1_epochs == 3);
  CHECK(cfg.train.optimizer == OptimizerKind::sgd);
  CHECK(cfg.ref_layer == 10);
  CHECK(cfg.effective_ref_layer() == 10);
  REQUIRE(cfg.fusion_sets.size() == 2);
  CHECK(cfg.fusion_sets[0].is_builtin());
  CHECK(cfg.fusion_sets[1].name == "bands");
  CHECK(cfg.fusion_sets[1].layers == std::vector<int>{10, 3});
  CHECK(cfg.objective_task == "low");
  CHECK(!cfg.reference_grid_checks);

  const PlantedTraceSpec spec = cfg.planted_spec();
  CHECK(spec.layers == 12);
  CHECK(spec.dim == 32);
  CHECK(spec.tokens == 17);  // 16 patches + CLS
}

TEST_CASE("defaults: penultimate reference layer") {
  const RunConfig cfg = default_run_config();
  CHECK(cfg.ref_layer == 0);
  CHECK(cfg.effective_ref_layer() == cfg.vit.num_layers - 1);
}

TEST_CASE("missing schema_version is rejected") {
  CHECK_THROWS_AS(parse_run_config("[run]\nseed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("seed = 1\n"), ConfigError);
}

TEST_CASE("wrong schema_version is rejected") {
  CHECK_THROWS_AS(parse_run_config("schema_version = 2\n"), ConfigError);
}

TEST_CASE("unknown sections and keys are errors with line numbers") {
  try {
    parse_run_config("schema_version = 1\n[vit]\nlayerz = 12\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("layerz") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("schema_version = 1\n[nope]\nx = 1\n"), ConfigError);
}

TEST_CASE("field-level validation failures name the field") {
  try {
    parse_run_config("schema_version = 1\n[data]\nsamples = 0\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("samples") != std::string::npos);
  }
  // planted mode without tasks
  CHECK_THROWS_AS(
      parse_run_config("schema_version = 1\n[data]\ntask = a band=1:20 dims=0:3 classes=2\n"),
      ConfigError);
  // encoder mode rejects task lines
  CHECK_THROWS_AS(parse_run_config("schema_version = 1\n[run]\nmode = encoder\n[data]\ntask = a "
                                   "band=1:2 dims=0:3 classes=2\n"),
                  ConfigError);
  // fusion set referencing an unknown builtin
  CHECK_THROWS_AS(parse_run_config("schema_version = 1\n[data]\ntask = a band=1:2 dims=0:3 "
                                   "classes=2\n[fusion]\nset = L9\n"),
                  ConfigError);
  // bad objective task
  CHECK_THROWS_AS(parse_run_config("schema_version = 1\n[data]\ntask = a band=1:2 dims=0:3 "
                                   "classes=2\n[fusion]\nobjective_task = b\n"),
                  ConfigError);
}

TEST_CASE("digest is stable and sensitive to every field") {
  const RunConfig a = parse_run_config(kValid);
  const RunConfig b = parse_run_config(kValid);
  CHECK(a.digest() == b.digest());

  std::string tweaked = kValid;
  tweaked.replace(tweaked.find("seed = 7"), 8, "seed = 8");
  CHECK(parse_run_config(tweaked).digest() != a.digest());
}

TEST_CASE("seed override rewires the derived component seeds") {
  RunConfig cfg = parse_run_config(kValid);
  const auto train_seed = cfg.train.seed;
  cfg.seed = 1234;  // direct field write does not rewire; parsing does
  CHECK(cfg.train.seed == train_seed);

  std::string with_new_seed = kValid;
  with_new_seed.replace(with_new_seed.find("seed = 7"), 8, "seed = 9");
  const RunConfig other = parse_run_config(with_new_seed);
  CHECK(other.train.seed != train_seed);
}
