#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "layerlens/errors.hpp"
#include "layerlens/manifest.hpp"
#include "layerlens/pipeline.hpp"
#include "layerlens/runconfig.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layerlens: layer-wise encoder representation analysis"};
  app.set_version_flag("--version", layerlens::kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  int ref_layer = -1;

  app.add_option("--config", config_path, "run configuration file (built-in defaults if omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--seed", seed, "override the run seed")->each([&](const std::string&) {
    seed_given = true;
  });
  app.add_option("--jobs", jobs, "parallel probe workers")->check(CLI::PositiveNumber);
  app.add_option("--ref-layer", ref_layer,
                 "reference layer for failed-group analysis (default: penultimate)");

  const std::map<std::string, std::function<void(const layerlens::RunConfig&,
                                                 const layerlens::PipelineOptions&)>>
      commands = {
          {"generate", layerlens::cmd_generate}, {"lrs", layerlens::cmd_lrs},
          {"sweep", layerlens::cmd_sweep},       {"fuse", layerlens::cmd_fuse},
          {"report", layerlens::cmd_report},
      };
  app.add_subcommand("generate", "synthesize the dataset and write traces")->fallthrough();
  app.add_subcommand("lrs", "layer similarity matrix and partition")->fallthrough();
  app.add_subcommand("sweep", "per-layer probes, scores and failed-group grid")->fallthrough();
  app.add_subcommand("fuse", "multi-layer concat fusion comparison")->fallthrough();
  app.add_subcommand("report", "consolidate artifacts and run reference checks")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    layerlens::RunConfig cfg = config_path.empty() ? layerlens::default_run_config()
                                                   : layerlens::load_run_config(config_path);
    layerlens::PipelineOptions opts;
    opts.out_dir = out_dir;
    opts.jobs = jobs;
    if (seed_given) opts.seed_override = seed;
    if (ref_layer >= 0) opts.ref_layer_override = ref_layer;

    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) {
        fn(cfg, opts);
        return kExitOk;
      }
    }
    std::cerr << "no subcommand given\n";
    return kExitConfig;
  } catch (const layerlens::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const layerlens::ValueError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const layerlens::NumericalError& e) {
    std::cerr << "numerical invariant violation: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const layerlens::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const layerlens::ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
