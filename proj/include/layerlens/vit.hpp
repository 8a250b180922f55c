#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "layerlens/rng.hpp"
#include "layerlens/tensor.hpp"
#include "layerlens/trace.hpp"

namespace layerlens {

// Configuration of the toy vision-transformer encoder. Defaults are the
// desk-scale setup: full layer sweeps finish in seconds while 12 layers still
// admit a three-block partition.
struct VitConfig {
  int num_layers = 12;
  int d_model = 32;
  int num_heads = 4;
  int d_ff = 64;
  int patch_size = 4;
  int image_size = 16;
  int channels = 3;
  double layernorm_eps = 1e-5;
  bool cls_token = true;
  // Alternative block wiring y = FFN(MSA(x)) + x: a single residual around
  // the fused attention+FFN composite with no per-sublayer normalization.
  // Default off; the standard block is pre-layernorm with two residuals.
  bool fused_residual = false;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigError naming the offending field
  int patches_per_side() const { return image_size / patch_size; }
  int num_patches() const { return patches_per_side() * patches_per_side(); }
  int num_tokens() const { return num_patches() + (cls_token ? 1 : 0); }
  int patch_dim() const { return patch_size * patch_size * channels; }
  // Stable digest over all fields; stamped into traces as config_hash.
  std::uint64_t digest() const;
};

// Synthesized input image with per-task integer labels.
struct SynthImage {
  Tensor pixels;  // H x W x C, values in [0, 1]
  std::map<std::string, int> labels;
  std::string sample_id;
};

struct VitLayerWeights {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

// Frozen weight bundle. Nothing outside init_weights writes to it.
struct VitWeights {
  Tensor patch_proj;  // patch_dim x D
  Tensor patch_bias;  // D
  Tensor cls_embed;   // D (unused when cls_token is off)
  Tensor pos_embed;   // num_tokens x D
  std::vector<VitLayerWeights> layers;
  std::uint64_t config_hash = 0;
};

// Seeded Gaussian(0, 0.02^2) matrices and embeddings, layernorm gains 1,
// all biases 0. Same seed, same bundle, bit for bit.
VitWeights init_weights(const VitConfig& config);

// Non-overlapping patch flattening (row-major y, x, channel), linear
// projection to D, learned positional embedding, optional CLS token at row 0.
Tensor embed_patches(const SynthImage& image, const VitWeights& weights, const VitConfig& config);

// One encoder block applied to an N x D token matrix.
Tensor transformer_block(const Tensor& x, const VitLayerWeights& w, const VitConfig& config);

// Runs all blocks, recording the post-block hidden state of every layer.
LayerTrace encode_with_taps(const SynthImage& image, const VitWeights& weights,
                            const VitConfig& config);

// Image with one brightened quadrant; label = quadrant index 0..3
// (top-left, top-right, bottom-left, bottom-right). The decodable signal any
// real encoder should surface.
SynthImage make_quadrant_image(const VitConfig& config, SeededRng& rng, int quadrant);

}  // namespace layerlens
