#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "layerlens/planted.hpp"

using namespace layerlens;

namespace {

PlantedTraceSpec two_band_spec() {
  PlantedTraceSpec spec;
  spec.layers = 12;
  spec.tokens = 17;
  spec.dim = 32;
  spec.noise_sigma = 0.25;
  spec.num_samples = 32;
  spec.seed = 2024;
  spec.tasks = {
      PlantedTask{"shallow_sig", 1, 4, 1.0, {0, 1, 2, 3, 4, 5, 6, 7}, 4},
      PlantedTask{"deep_sig", 9, 12, 1.0, {8, 9, 10, 11, 12, 13, 14, 15}, 4},
  };
  return spec;
}

}  // namespace

TEST_CASE("class directions are orthonormal") {
  const PlantedTraceSpec spec = two_band_spec();
  for (std::size_t t = 0; t < spec.tasks.size(); ++t) {
    const Tensor dirs = planted_class_directions(spec, t);
    REQUIRE(dirs.rows() == 4);
    for (std::size_t a = 0; a < dirs.rows(); ++a) {
      for (std::size_t b = 0; b < dirs.rows(); ++b) {
        double prod = 0.0;
        for (std::size_t j = 0; j < dirs.cols(); ++j) prod += dirs.at(a, j) * dirs.at(b, j);
        CHECK(std::abs(prod - (a == b ? 1.0 : 0.0)) < 1e-12);
      }
    }
  }
}

TEST_CASE("noise-free traces expose the exact planted structure") {
  PlantedTraceSpec spec = two_band_spec();
  spec.noise_sigma = 0.0;
  const PlantedDataset data = synthesize_planted_traces(spec);
  REQUIRE(data.traces.size() == 32);

  const Tensor shallow_dirs = planted_class_directions(spec, 0);
  for (std::size_t s = 0; s < data.traces.size(); ++s) {
    const LayerTrace& trace = data.traces[s];
    const int label = data.labels.at("shallow_sig")[s];

    // inside the band every token carries strength * direction on dims 0..7
    const Tensor& in_band = trace.layer(2);
    for (int j = 0; j < 8; ++j) {
      CHECK(in_band.at(3, static_cast<std::size_t>(j)) ==
            doctest::Approx(shallow_dirs.at(static_cast<std::size_t>(label),
                                            static_cast<std::size_t>(j)))
                .epsilon(1e-12));
    }
    // outside its band the task contributes nothing
    const Tensor& outside = trace.layer(6);
    for (double v : outside.data) CHECK(v == 0.0);
    // and the deep task's dims are untouched by the shallow task
    for (int j = 8; j < 16; ++j) {
      CHECK(in_band.at(3, static_cast<std::size_t>(j)) == 0.0);
    }
  }
}

TEST_CASE("synthesis is deterministic in the seed") {
  const PlantedTraceSpec spec = two_band_spec();
  const PlantedDataset a = synthesize_planted_traces(spec);
  const PlantedDataset b = synthesize_planted_traces(spec);
  CHECK(a.labels == b.labels);
  for (std::size_t s = 0; s < a.traces.size(); ++s) {
    for (int l = 1; l <= 12; ++l) {
      CHECK(tensors_equal(a.traces[s].layer(l), b.traces[s].layer(l)));
    }
  }
}

TEST_CASE("labels are roughly uniform") {
  PlantedTraceSpec spec = two_band_spec();
  spec.num_samples = 2000;
  const PlantedDataset data = synthesize_planted_traces(spec);
  std::vector<int> counts(4, 0);
  for (int y : data.labels.at("deep_sig")) counts[static_cast<std::size_t>(y)]++;
  for (int c : counts) {
    CHECK(c > 2000 / 4 - 150);
    CHECK(c < 2000 / 4 + 150);
  }
}

TEST_CASE("overlapping decodable dims are rejected") {
  PlantedTraceSpec spec = two_band_spec();
  spec.tasks[1].decodable_dims = {7, 8, 9, 10};
  spec.tasks[1].num_classes = 4;
  CHECK_THROWS_AS(synthesize_planted_traces(spec), ConfigError);
}

TEST_CASE("invalid specs are rejected with field-level messages") {
  PlantedTraceSpec spec = two_band_spec();
  spec.tasks[0].band_hi = 13;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  PlantedTraceSpec empty = two_band_spec();
  empty.num_samples = 0;
  CHECK_THROWS_AS(empty.validate(), ConfigError);

  PlantedTraceSpec crowded = two_band_spec();
  crowded.tasks[0].num_classes = 9;  // exceeds the 8 decodable dims
  CHECK_THROWS_AS(crowded.validate(), ConfigError);
}
