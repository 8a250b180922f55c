#include "layerlens/fixtures.hpp"

#include <cstdio>

namespace layerlens::fixtures {

namespace {

constexpr int kLayers = 24;
constexpr int kTasks = 14;

const char* kTaskNames[kTasks] = {"MME_P", "MME_C",  "MMB",    "SEEDB",   "GQA",
                                  "TVQA",  "OCRB",   "CVB",    "CVB_2D",  "CVB_3D",
                                  "RWD",   "MMVet",  "RefCOCO", "POPE"};

// Rows are layers 1..24 in order.
const double kScores[kLayers][kTasks] = {
    {750.1, 211.4, 0, 25.30, 40.55, 7.99, 24, 40.14, 34.87, 45.42, 38.17, 9.9, 5.73, 70.21},
    {790.2, 212.5, 0.34, 25.76, 41.24, 7.96, 23, 40.21, 34.34, 46.08, 37.12, 10.1, 5.36, 71.01},
    {742.7, 219.2, 0.17, 25.00, 41.76, 8.10, 28, 42.69, 37.89, 47.50, 36.08, 10.4, 6.87, 72.33},
    {788.4, 239.6, 0, 25.53, 42.26, 8.50, 23, 42.69, 36.71, 48.67, 37.25, 10.2, 7.61, 72.34},
    {813.2, 220.7, 0.17, 25.26, 42.74, 8.22, 21, 41.30, 33.69, 48.92, 36.86, 10.9, 8.25, 72.91},
    {838.8, 227.8, 0, 25.23, 43.16, 8.26, 24, 41.69, 35.97, 47.42, 36.86, 11.5, 9.31, 75.18},
    {815.6, 235.7, 0, 25.74, 44.90, 8.75, 25, 43.02, 37.12, 48.92, 37.39, 10.6, 11.10, 75.44},
    {857.7, 237.5, 0, 25.48, 46.14, 8.77, 25, 41.43, 36.85, 46.00, 36.99, 11.2, 10.79, 76.20},
    {889.7, 232.8, 0.17, 27.72, 47.02, 9.05, 28, 40.53, 36.23, 44.83, 37.12, 13.0, 10.06, 77.84},
    {903.4, 228.2, 0.17, 26.61, 48.39, 9.03, 30, 41.8, 36.19, 47.42, 37.39, 11.4, 13.50, 77.46},
    {935.3, 224.3, 0.52, 26.58, 49.85, 10.65, 32, 42.51, 37.27, 47.75, 36.86, 14.2, 12.14, 79.24},
    {980.1, 232.1, 0.09, 26.85, 50.39, 16.58, 70, 41.81, 36.7, 46.92, 38.56, 12.6, 11.20, 80.63},
    {964.0, 252.5, 0.09, 26.33, 51.14, 18.12, 91, 41.71, 35.75, 47.67, 37.25, 11.6, 12.50, 81.39},
    {984.2, 265.4, 0.69, 34.07, 51.83, 22.86, 130, 42.69, 36.12, 49.25, 39.08, 13.8, 14.37, 81.97},
    {1042.8, 227.5, 0.17, 28.98, 52.89, 25.79, 155, 43.85, 36.37, 51.33, 37.12, 13.6, 13.77, 83.11},
    {1069.5, 225.4, 0, 27.95, 52.81, 28.08, 166, 43.26, 36.61, 49.92, 38.04, 13.7, 15.41, 84.32},
    {1074.8, 230.4, 0.26, 32.81, 53.86, 28.25, 200, 47.26, 39.43, 55.08, 39.22, 15.4, 18.49, 84.46},
    {1088.7, 237.1, 29.38, 52.06, 54.37, 31.44, 200, 47.29, 41.17, 53.42, 39.48, 14.3, 17.04, 84.26},
    {945.1, 236.8, 20.02, 44.64, 48.32, 18.27, 121, 45.69, 37.21, 54.17, 35.95, 13.2, 18.22, 81.47},
    {1118.2, 232.1, 26.03, 51.72, 54.83, 32.05, 211, 47.29, 40.32, 54.25, 38.82, 16.3, 18.49, 84.76},
    {1041.4, 212.5, 0.95, 35.42, 49.47, 28.10, 190, 44.37, 39.32, 49.42, 39.87, 14.5, 17.09, 81.91},
    {1123.6, 238.9, 23.28, 49.60, 54.52, 30.84, 211, 44.37, 36.73, 52.00, 39.87, 17.3, 16.32, 84.79},
    {1142.7, 245.0, 35.31, 52.84, 54.61, 33.73, 233, 44.26, 38.02, 50.50, 45.36, 18.0, 17.08, 84.00},
    {1114.1, 243.5, 32.65, 51.09, 53.61, 30.63, 197, 46.68, 39.78, 53.58, 43.92, 16.1, 17.08, 83.65},
};

}  // namespace

ScoreTable reference_layer_scores() {
  ScoreTable t;
  t.layers.resize(kLayers);
  for (int i = 0; i < kLayers; ++i) t.layers[static_cast<std::size_t>(i)] = i + 1;
  t.tasks.assign(kTaskNames, kTaskNames + kTasks);
  t.higher_better.assign(kTasks, 1);
  t.scores.resize(kLayers);
  for (int l = 0; l < kLayers; ++l) {
    t.scores[static_cast<std::size_t>(l)].assign(kScores[l], kScores[l] + kTasks);
  }
  t.validate();
  return t;
}

const std::map<std::string, int>& reference_best_layers() {
  static const std::map<std::string, int> best = {
      {"MME_P", 23}, {"MME_C", 14},  {"MMB", 23},     {"SEEDB", 23}, {"GQA", 20},
      {"TVQA", 23},  {"OCRB", 23},   {"CVB", 18},     {"CVB_2D", 18}, {"CVB_3D", 17},
      {"RWD", 23},   {"MMVet", 23},  {"RefCOCO", 17}, {"POPE", 22},
  };
  return best;
}

std::string reference_layer_scores_csv() {
  return score_table_to_csv(reference_layer_scores());
}

const std::vector<FusionFixtureRow>& reference_fusion_rows() {
  auto row = [](std::string name, std::vector<int> layers,
                std::vector<double> v) -> FusionFixtureRow {
    const char* cols[12] = {"MME_P", "MME_C", "MMB", "SEEDB",  "GQA",  "TVQA",
                            "OCRB",  "CVB",   "CVB_2D", "CVB_3D", "RWD", "POPE"};
    FusionFixtureRow out;
    out.name = std::move(name);
    out.layers = std::move(layers);
    for (int i = 0; i < 12; ++i) out.scores[cols[i]] = v[static_cast<std::size_t>(i)];
    return out;
  };
  static const std::vector<FusionFixtureRow> rows = {
      row("baseline_23", {},
          {1142.8, 245.0, 35.31, 52.84, 52.84, 33.73, 233, 44.26, 38.02, 50.50, 45.36, 84.00}),
      row("plus_18", {23, 18},
          {1148.5, 228.9, 46.91, 57.01, 56.80, 37.66, 273, 44.73, 35.79, 53.67, 45.49, 84.51}),
      row("plus_1_18", {23, 18, 1},
          {1155.4, 246.8, 48.54, 56.75, 56.68, 36.53, 236, 45.65, 36.21, 55.08, 46.93, 84.56}),
      row("plus_17_18", {23, 18, 17},
          {1182.5, 220.7, 48.80, 56.68, 56.48, 38.29, 263, 45.38, 36.25, 54.50, 44.71, 85.50}),
      row("fused_23_18_3", {23, 18, 3},
          {1157.2, 236.1, 49.22, 57.23, 57.35, 37.70, 265, 44.56, 36.53, 52.58, 45.75, 84.82}),
  };
  return rows;
}

}  // namespace layerlens::fixtures
