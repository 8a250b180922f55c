#include "layerlens/chain.hpp"

#include <algorithm>
#include <cmath>

namespace layerlens {

namespace {

void check_batch(const LinearChainParams& params, const Tensor& x, const std::vector<int>& labels) {
  params.validate();
  if (!x.is_matrix() || x.cols() != params.input_dim()) {
    throw ShapeError("chain: input shape " + x.shape_str() + " does not match d_in " +
                     std::to_string(params.input_dim()));
  }
  if (labels.size() != x.rows()) {
    throw ShapeError("chain: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(x.rows()) + " rows");
  }
  if (x.rows() == 0) {
    throw ShapeError("chain: empty batch");
  }
  const int n = static_cast<int>(params.num_classes());
  for (int y : labels) {
    if (y < 0 || y >= n) {
      throw ValueError("chain: label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(n) + ")");
    }
  }
}

Tensor activate(const Tensor& z, Activation act) {
  return act == Activation::gelu ? gelu(z) : z;
}

// Mean cross-entropy via log-sum-exp with max subtraction.
double cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t b = logits.rows(), n = logits.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = &logits.data[i * n];
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
    const double lse = mx + std::log(sum);
    total += lse - row[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(b);
}

}  // namespace

LinearChainParams LinearChainParams::zeros(std::size_t d_in, std::size_t d_hidden,
                                           std::size_t n_classes) {
  LinearChainParams p;
  p.w1 = Tensor::matrix(d_in, d_hidden);
  p.b1 = Tensor::vec(d_hidden);
  p.w2 = Tensor::matrix(d_hidden, n_classes);
  p.b2 = Tensor::vec(n_classes);
  return p;
}

LinearChainParams LinearChainParams::seeded(std::size_t d_in, std::size_t d_hidden,
                                            std::size_t n_classes, SeededRng& rng,
                                            double init_std) {
  LinearChainParams p = zeros(d_in, d_hidden, n_classes);
  for (double& v : p.w1.data) v = rng.gaussian() * init_std;
  for (double& v : p.w2.data) v = rng.gaussian() * init_std;
  return p;
}

void LinearChainParams::validate() const {
  if (!w1.is_matrix() || !w2.is_matrix() || b1.ndim() != 1 || b2.ndim() != 1) {
    throw ShapeError("chain params: w1/w2 must be matrices, b1/b2 vectors");
  }
  if (b1.size() != w1.cols() || w2.rows() != w1.cols() || b2.size() != w2.cols()) {
    throw ShapeError("chain params: inconsistent shapes w1=" + w1.shape_str() +
                     " b1=" + b1.shape_str() + " w2=" + w2.shape_str() + " b2=" + b2.shape_str());
  }
  ensure_finite(w1, "chain params w1");
  ensure_finite(b1, "chain params b1");
  ensure_finite(w2, "chain params w2");
  ensure_finite(b2, "chain params b2");
}

ChainOutput chain_forward(const LinearChainParams& params, const Tensor& x,
                          const std::vector<int>& labels, Activation act) {
  check_batch(params, x, labels);
  const Tensor z1 = add_row_vector(matmul(x, params.w1), params.b1);
  const Tensor h = activate(z1, act);
  Tensor logits = add_row_vector(matmul(h, params.w2), params.b2);
  ensure_finite(logits, "chain_forward logits");
  return ChainOutput{cross_entropy(logits, labels), std::move(logits)};
}

LinearChainParams chain_backward(const LinearChainParams& params, const Tensor& x,
                                 const std::vector<int>& labels, Activation act) {
  check_batch(params, x, labels);
  const std::size_t b = x.rows();

  const Tensor z1 = add_row_vector(matmul(x, params.w1), params.b1);
  const Tensor h = activate(z1, act);
  const Tensor logits = add_row_vector(matmul(h, params.w2), params.b2);

  // dL/dlogits = (softmax - onehot) / batch
  Tensor dlogits = softmax_rows(logits);
  const std::size_t n = dlogits.cols();
  for (std::size_t i = 0; i < b; ++i) {
    dlogits.data[i * n + static_cast<std::size_t>(labels[i])] -= 1.0;
  }
  dlogits = scale(dlogits, 1.0 / static_cast<double>(b));

  LinearChainParams grads = LinearChainParams::zeros(params.input_dim(), params.hidden_dim(),
                                                     params.num_classes());
  grads.w2 = matmul(transpose(h), dlogits);
  grads.b2 = sum_over_rows(dlogits);

  Tensor dh = matmul(dlogits, transpose(params.w2));
  Tensor dz1 = std::move(dh);
  if (act == Activation::gelu) {
    for (std::size_t i = 0; i < dz1.size(); ++i) {
      dz1.data[i] *= gelu_derivative(z1.data[i]);
    }
  }
  grads.w1 = matmul(transpose(x), dz1);
  grads.b1 = sum_over_rows(dz1);

  ensure_finite(grads.w1, "chain_backward w1");
  ensure_finite(grads.b1, "chain_backward b1");
  ensure_finite(grads.w2, "chain_backward w2");
  ensure_finite(grads.b2, "chain_backward b2");
  return grads;
}

double grad_check(const LinearChainParams& params, const Tensor& x, const std::vector<int>& labels,
                  double step, Activation act) {
  if (!(step > 0.0)) {
    throw ValueError("grad_check: step must be > 0");
  }
  const LinearChainParams analytic = chain_backward(params, x, labels, act);

  LinearChainParams probe = params;
  Tensor* tensors[] = {&probe.w1, &probe.b1, &probe.w2, &probe.b2};
  const Tensor* grads[] = {&analytic.w1, &analytic.b1, &analytic.w2, &analytic.b2};

  double max_rel = 0.0;
  for (int t = 0; t < 4; ++t) {
    Tensor& theta = *tensors[t];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta.data[i];
      theta.data[i] = saved + step;
      const double up = chain_forward(probe, x, labels, act).loss;
      theta.data[i] = saved - step;
      const double down = chain_forward(probe, x, labels, act).loss;
      theta.data[i] = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double exact = grads[t]->data[i];
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      max_rel = std::max(max_rel, std::abs(numeric - exact) / denom);
    }
  }
  return max_rel;
}

std::vector<int> predict(const LinearChainParams& params, const Tensor& x, Activation act) {
  // Labels are irrelevant to the logits; reuse the forward path with zeros.
  const std::vector<int> dummy(x.rows(), 0);
  const Tensor logits = chain_forward(params, x, dummy, act).logits;
  const std::size_t n = logits.cols();
  std::vector<int> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* row = &logits.data[i * n];
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (row[j] > row[best]) best = j;  // strict: ties keep the lowest index
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || predictions.empty()) {
    throw ShapeError("accuracy: prediction/label size mismatch");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace layerlens
