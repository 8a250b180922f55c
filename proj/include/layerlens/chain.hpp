#pragma once

#include <cstdint>
#include <vector>

#include "layerlens/rng.hpp"
#include "layerlens/tensor.hpp"

namespace layerlens {

// Nonlinearity between the projection and the classifier head. `identity`
// exists for test configurations where the chain must be purely linear.
enum class Activation { gelu, identity };

// Parameters of the trainable chain: a one-layer MLP projection (w1, b1)
// followed by a linear classifier head (w2, b2).
//
//   logits = w2 * act(w1 * x + b1) + b2
struct LinearChainParams {
  Tensor w1;  // d_in x d_hidden
  Tensor b1;  // d_hidden
  Tensor w2;  // d_hidden x n_classes
  Tensor b2;  // n_classes

  static LinearChainParams zeros(std::size_t d_in, std::size_t d_hidden, std::size_t n_classes);
  // Gaussian(0, init_std^2) matrices, zero biases, drawn in w1, w2 order.
  static LinearChainParams seeded(std::size_t d_in, std::size_t d_hidden, std::size_t n_classes,
                                  SeededRng& rng, double init_std = 0.02);

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t num_classes() const { return w2.cols(); }

  // Shape consistency and finiteness; throws ShapeError / NumericalError.
  void validate() const;
};

struct ChainOutput {
  double loss = 0.0;  // mean cross-entropy of softmax(logits)
  Tensor logits;      // batch x n_classes
};

// Forward pass over a batch x d_in input. Labels index rows of the softmax;
// out-of-range labels throw ValueError.
ChainOutput chain_forward(const LinearChainParams& params, const Tensor& x,
                          const std::vector<int>& labels, Activation act = Activation::gelu);

// Analytic gradients of the mean cross-entropy loss, same shapes as params.
LinearChainParams chain_backward(const LinearChainParams& params, const Tensor& x,
                                 const std::vector<int>& labels, Activation act = Activation::gelu);

// Compares chain_backward against central finite differences coordinate-wise
// and returns the max relative error, denominator max(|a|, |b|, 1e-8).
double grad_check(const LinearChainParams& params, const Tensor& x, const std::vector<int>& labels,
                  double step, Activation act = Activation::gelu);

// argmax per row; ties resolve to the lowest class index.
std::vector<int> predict(const LinearChainParams& params, const Tensor& x,
                         Activation act = Activation::gelu);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

}  // namespace layerlens
