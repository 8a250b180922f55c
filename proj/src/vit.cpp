#include "layerlens/vit.hpp"

#include <cmath>
#include <string>

#include "layerlens/digest.hpp"

namespace layerlens {

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) {
    throw ConfigError("vit config: " + field + " " + why);
  }
}

Tensor gaussian_matrix(std::size_t r, std::size_t c, SeededRng& rng, double std_dev) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data) v = rng.gaussian() * std_dev;
  return t;
}

Tensor gaussian_vec(std::size_t n, SeededRng& rng, double std_dev) {
  Tensor t = Tensor::vec(n);
  for (double& v : t.data) v = rng.gaussian() * std_dev;
  return t;
}

// Multi-head self-attention over N x D tokens.
Tensor self_attention(const Tensor& x, const VitLayerWeights& w, const VitConfig& config) {
  const std::size_t d = static_cast<std::size_t>(config.d_model);
  const std::size_t heads = static_cast<std::size_t>(config.num_heads);
  const std::size_t d_head = d / heads;

  const Tensor q = add_row_vector(matmul(x, w.wq), w.bq);
  const Tensor k = add_row_vector(matmul(x, w.wk), w.bk);
  const Tensor v = add_row_vector(matmul(x, w.wv), w.bv);

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t lo = h * d_head, hi = lo + d_head;
    const Tensor qh = slice_cols(q, lo, hi);
    const Tensor kh = slice_cols(k, lo, hi);
    const Tensor vh = slice_cols(v, lo, hi);
    const Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
    head_outputs.push_back(matmul(softmax_rows(scores), vh));
  }
  return add_row_vector(matmul(hcat(head_outputs), w.wo), w.bo);
}

Tensor feed_forward(const Tensor& x, const VitLayerWeights& w) {
  const Tensor h = gelu(add_row_vector(matmul(x, w.ffn_w1), w.ffn_b1));
  return add_row_vector(matmul(h, w.ffn_w2), w.ffn_b2);
}

}  // namespace

void VitConfig::validate() const {
  require(num_layers > 0, "num_layers", "must be positive");
  require(d_model > 0, "d_model", "must be positive");
  require(num_heads > 0, "num_heads", "must be positive");
  require(d_model % num_heads == 0, "num_heads", "must divide d_model");
  require(d_ff > 0, "d_ff", "must be positive");
  require(patch_size > 0, "patch_size", "must be positive");
  require(image_size > 0, "image_size", "must be positive");
  require(image_size % patch_size == 0, "image_size", "must be divisible by patch_size");
  require(channels > 0, "channels", "must be positive");
  require(layernorm_eps > 0.0, "layernorm_eps", "must be > 0");
}

std::uint64_t VitConfig::digest() const {
  std::string repr = "vit|" + std::to_string(num_layers) + "|" + std::to_string(d_model) + "|" +
                     std::to_string(num_heads) + "|" + std::to_string(d_ff) + "|" +
                     std::to_string(patch_size) + "|" + std::to_string(image_size) + "|" +
                     std::to_string(channels) + "|" + std::to_string(layernorm_eps) + "|" +
                     std::to_string(cls_token) + "|" + std::to_string(fused_residual) + "|" +
                     std::to_string(seed);
  return fnv1a64(repr);
}

VitWeights init_weights(const VitConfig& config) {
  config.validate();
  constexpr double kInitStd = 0.02;
  SeededRng rng(config.seed);

  VitWeights w;
  const std::size_t d = static_cast<std::size_t>(config.d_model);
  const std::size_t p = static_cast<std::size_t>(config.patch_dim());
  const std::size_t n = static_cast<std::size_t>(config.num_tokens());
  const std::size_t ff = static_cast<std::size_t>(config.d_ff);

  w.patch_proj = gaussian_matrix(p, d, rng, kInitStd);
  w.patch_bias = Tensor::vec(d);
  w.cls_embed = config.cls_token ? gaussian_vec(d, rng, kInitStd) : Tensor::vec(d);
  w.pos_embed = gaussian_matrix(n, d, rng, kInitStd);

  w.layers.reserve(static_cast<std::size_t>(config.num_layers));
  for (int i = 0; i < config.num_layers; ++i) {
    VitLayerWeights lw;
    lw.wq = gaussian_matrix(d, d, rng, kInitStd);
    lw.wk = gaussian_matrix(d, d, rng, kInitStd);
    lw.wv = gaussian_matrix(d, d, rng, kInitStd);
    lw.wo = gaussian_matrix(d, d, rng, kInitStd);
    lw.bq = Tensor::vec(d);
    lw.bk = Tensor::vec(d);
    lw.bv = Tensor::vec(d);
    lw.bo = Tensor::vec(d);
    lw.ln1_gamma = Tensor::vec(d, 1.0);
    lw.ln1_beta = Tensor::vec(d, 0.0);
    lw.ln2_gamma = Tensor::vec(d, 1.0);
    lw.ln2_beta = Tensor::vec(d, 0.0);
    lw.ffn_w1 = gaussian_matrix(d, ff, rng, kInitStd);
    lw.ffn_b1 = Tensor::vec(ff);
    lw.ffn_w2 = gaussian_matrix(ff, d, rng, kInitStd);
    lw.ffn_b2 = Tensor::vec(d);
    w.layers.push_back(std::move(lw));
  }
  w.config_hash = config.digest();
  return w;
}

Tensor embed_patches(const SynthImage& image, const VitWeights& weights, const VitConfig& config) {
  config.validate();
  const std::size_t h = static_cast<std::size_t>(config.image_size);
  const std::size_t c = static_cast<std::size_t>(config.channels);
  if (image.pixels.ndim() != 3 || image.pixels.shape[0] != h || image.pixels.shape[1] != h ||
      image.pixels.shape[2] != c) {
    throw ShapeError("embed_patches: image shape " + image.pixels.shape_str() +
                     " does not match config " + std::to_string(h) + "x" + std::to_string(h) +
                     "x" + std::to_string(c));
  }
  const std::size_t ps = static_cast<std::size_t>(config.patch_size);
  const std::size_t side = static_cast<std::size_t>(config.patches_per_side());
  const std::size_t pd = static_cast<std::size_t>(config.patch_dim());
  const std::size_t d = static_cast<std::size_t>(config.d_model);
  const std::size_t n = static_cast<std::size_t>(config.num_tokens());

  Tensor tokens = Tensor::matrix(n, d);
  const std::size_t patch_row0 = config.cls_token ? 1 : 0;
  if (config.cls_token) {
    for (std::size_t j = 0; j < d; ++j) tokens.data[j] = weights.cls_embed.data[j];
  }

  Tensor flat = Tensor::vec(pd);
  for (std::size_t py = 0; py < side; ++py) {
    for (std::size_t px = 0; px < side; ++px) {
      std::size_t idx = 0;
      for (std::size_t y = 0; y < ps; ++y) {
        for (std::size_t x = 0; x < ps; ++x) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            flat.data[idx++] =
                image.pixels.data[((py * ps + y) * h + (px * ps + x)) * c + ch];
          }
        }
      }
      const std::size_t row = patch_row0 + py * side + px;
      for (std::size_t j = 0; j < d; ++j) {
        double acc = weights.patch_bias.data[j];
        for (std::size_t i = 0; i < pd; ++i) acc += flat.data[i] * weights.patch_proj.data[i * d + j];
        tokens.data[row * d + j] = acc;
      }
    }
  }
  tokens = add(tokens, weights.pos_embed);
  ensure_finite(tokens, "embed_patches");
  return tokens;
}

Tensor transformer_block(const Tensor& x, const VitLayerWeights& w, const VitConfig& config) {
  if (config.fused_residual) {
    return add(feed_forward(self_attention(x, w, config), w), x);
  }
  const Tensor attended =
      add(x, self_attention(layernorm(x, w.ln1_gamma, w.ln1_beta, config.layernorm_eps), w, config));
  return add(attended,
             feed_forward(layernorm(attended, w.ln2_gamma, w.ln2_beta, config.layernorm_eps), w));
}

LayerTrace encode_with_taps(const SynthImage& image, const VitWeights& weights,
                            const VitConfig& config) {
  if (weights.layers.size() != static_cast<std::size_t>(config.num_layers)) {
    throw ShapeError("encode_with_taps: weight bundle has " +
                     std::to_string(weights.layers.size()) + " layers, config expects " +
                     std::to_string(config.num_layers));
  }
  LayerTrace trace;
  trace.has_cls = config.cls_token;
  trace.config_hash = weights.config_hash;
  trace.sample_id = image.sample_id;
  trace.hidden.reserve(static_cast<std::size_t>(config.num_layers));

  Tensor x = embed_patches(image, weights, config);
  for (const VitLayerWeights& lw : weights.layers) {
    x = transformer_block(x, lw, config);
    trace.hidden.push_back(x);
  }
  trace.validate();
  return trace;
}

SynthImage make_quadrant_image(const VitConfig& config, SeededRng& rng, int quadrant) {
  if (quadrant < 0 || quadrant > 3) {
    throw ValueError("make_quadrant_image: quadrant must be in [0, 3]");
  }
  const std::size_t h = static_cast<std::size_t>(config.image_size);
  const std::size_t c = static_cast<std::size_t>(config.channels);
  SynthImage img;
  img.pixels = Tensor({h, h, c});
  const std::size_t half = h / 2;
  const std::size_t y0 = (quadrant / 2) * half;
  const std::size_t x0 = (quadrant % 2) * half;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < h; ++x) {
      const bool hot = y >= y0 && y < y0 + half && x >= x0 && x < x0 + half;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double base = 0.5 * rng.uniform();
        img.pixels.data[(y * h + x) * c + ch] = hot ? base + 0.5 : base;
      }
    }
  }
  img.labels["quadrant"] = quadrant;
  return img;
}

}  // namespace layerlens
