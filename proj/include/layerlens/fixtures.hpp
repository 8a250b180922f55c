#pragma once

#include <map>
#include <string>
#include <vector>

#include "layerlens/probe.hpp"

namespace layerlens::fixtures {

// Frozen reference grid: per-layer benchmark scores of a 24-layer
// CLIP ViT-L/14 encoder probed through a 1.4B language model (LLaVA-style
// two-stage training on the 665K mix). Shipped for report cross-checks and
// regression tests; nothing in this codebase re-derives these numbers.
//
// Columns: MME_P, MME_C, MMB, SEEDB, GQA, TVQA, OCRB, CVB, CVB_2D, CVB_3D,
// RWD, MMVet, RefCOCO, POPE. All higher-better.
ScoreTable reference_layer_scores();

// The per-task argmax layers of the grid above, ties resolved to the lowest
// layer index.
const std::map<std::string, int>& reference_best_layers();

// The same grid rendered as CSV; data/clip_vitl14_layer_scores.csv must stay
// byte-identical to this.
std::string reference_layer_scores_csv();

// Frozen rows of the concat-fusion comparison on the same setup: the
// single-layer baseline (layer 23) and four fused layer sets.
struct FusionFixtureRow {
  std::string name;
  std::vector<int> layers;                // empty for the baseline row
  std::map<std::string, double> scores;   // task -> score
};
const std::vector<FusionFixtureRow>& reference_fusion_rows();

}  // namespace layerlens::fixtures
