#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "layerlens/errors.hpp"

namespace layerlens {

// Dense row-major tensor of doubles. Analysis math runs in double precision
// throughout; single precision appears only inside trace files.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor vec(std::size_t n, double fill = 0.0);
  // Row-major 2-D literal, e.g. Tensor::from_rows({{1, 2}, {3, 4}}).
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t size() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  bool is_matrix() const { return shape.size() == 2; }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  std::string shape_str() const;  // "3x4"
};

// Throws NumericalError naming `context` if any entry is NaN or Inf. Public
// operations call this on their results; finite in, finite out.
void ensure_finite(const Tensor& t, const char* context);

bool tensors_equal(const Tensor& a, const Tensor& b);  // bitwise
double max_abs_diff(const Tensor& a, const Tensor& b);

// Standard matrix product, row-major. Shape mismatch names both operands.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// Row-wise softmax with per-row max subtraction. Total on finite input.
Tensor softmax_rows(const Tensor& x);

// Per-row layer normalisation with population variance and eps guard:
// out = gamma * (x - mean) / sqrt(var + eps) + beta.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

// Exact-erf GELU, elementwise: 0.5 * x * (1 + erf(x / sqrt(2))).
double gelu_scalar(double x);
double gelu_derivative(double x);
Tensor gelu(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
// m[i][j] + v[j] for every row i.
Tensor add_row_vector(const Tensor& m, const Tensor& v);
// Column means of a matrix, as a length-cols vector.
Tensor mean_over_rows(const Tensor& m);
// Column sums of a matrix, as a length-cols vector.
Tensor sum_over_rows(const Tensor& m);
// Columns [lo, hi) of a matrix.
Tensor slice_cols(const Tensor& m, std::size_t lo, std::size_t hi);
// Horizontal concatenation of matrices with equal row counts.
Tensor hcat(const std::vector<Tensor>& parts);

double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& a);

}  // namespace layerlens
