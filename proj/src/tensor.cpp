#include "layerlens/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace layerlens {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

void require_matrix(const Tensor& t, const char* op) {
  if (!t.is_matrix()) {
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got shape " + t.shape_str());
  }
}

void require_vector(const Tensor& t, std::size_t n, const char* op) {
  if (t.ndim() != 1 || t.size() != n) {
    throw ShapeError(std::string(op) + ": expected a vector of length " + std::to_string(n) +
                     ", got shape " + t.shape_str());
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : shape(std::move(dims)), data(product(shape), fill) {}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::vec(std::size_t n, double fill) { return Tensor({n}, fill); }

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Tensor out = Tensor::matrix(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw ShapeError("from_rows: ragged rows");
    }
    for (double v : row) out.data[i++] = v;
  }
  return out;
}

std::size_t Tensor::rows() const {
  if (!is_matrix()) throw ShapeError("rows(): tensor is not 2-D, shape " + shape_str());
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (!is_matrix()) throw ShapeError("cols(): tensor is not 2-D, shape " + shape_str());
  return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data[r * cols() + c];
}

std::string Tensor::shape_str() const {
  if (shape.empty()) return "scalar";
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

void ensure_finite(const Tensor& t, const char* context) {
  for (double v : t.data) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string(context) + ": non-finite value encountered");
    }
  }
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape && a.data == b.data;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: shapes differ: " + a.shape_str() + " vs " + b.shape_str());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions do not match: " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = &out.data[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.data[i * k + p];
      const double* brow = &b.data[p * n];
      for (std::size_t j = 0; j < n; ++j) {
        orow[j] += aip * brow[j];
      }
    }
  }
  ensure_finite(out, "matmul");
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.data[j * m + i] = a.data[i * n + j];
    }
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows");
  ensure_finite(x, "softmax_rows input");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &x.data[i * n];
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    double* orow = &out.data[i * n];
    for (std::size_t j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (std::size_t j = 0; j < n; ++j) orow[j] /= sum;
  }
  ensure_finite(out, "softmax_rows");
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_matrix(x, "layernorm");
  const std::size_t n = x.rows(), d = x.cols();
  require_vector(gamma, d, "layernorm gamma");
  require_vector(beta, d, "layernorm beta");
  if (!(eps > 0.0)) {
    throw ValueError("layernorm: eps must be > 0");
  }
  Tensor out = Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &x.data[i * d];
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    double* orow = &out.data[i * d];
    for (std::size_t j = 0; j < d; ++j) {
      orow[j] = gamma.data[j] * (row[j] - mean) * inv + beta.data[j];
    }
  }
  ensure_finite(out, "layernorm");
  return out;
}

double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double gelu_derivative(double x) {
  // d/dx [x * Phi(x)] = Phi(x) + x * phi(x)
  const double phi_cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double phi_pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return phi_cdf + x * phi_pdf;
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data) v = gelu_scalar(v);
  ensure_finite(out, "gelu");
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: shapes differ: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("subtract: shapes differ: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (double& v : out.data) v *= s;
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("hadamard: shapes differ: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

Tensor add_row_vector(const Tensor& m, const Tensor& v) {
  require_matrix(m, "add_row_vector");
  require_vector(v, m.cols(), "add_row_vector");
  Tensor out = m;
  const std::size_t rows = m.rows(), cols = m.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out.data[i * cols + j] += v.data[j];
    }
  }
  return out;
}

Tensor mean_over_rows(const Tensor& m) {
  Tensor sum = sum_over_rows(m);
  return scale(sum, 1.0 / static_cast<double>(m.rows()));
}

Tensor sum_over_rows(const Tensor& m) {
  require_matrix(m, "sum_over_rows");
  const std::size_t rows = m.rows(), cols = m.cols();
  if (rows == 0) {
    throw ShapeError("sum_over_rows: matrix has no rows");
  }
  Tensor out = Tensor::vec(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out.data[j] += m.data[i * cols + j];
    }
  }
  return out;
}

Tensor slice_cols(const Tensor& m, std::size_t lo, std::size_t hi) {
  require_matrix(m, "slice_cols");
  if (lo >= hi || hi > m.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     ") out of bounds for " + m.shape_str());
  }
  const std::size_t rows = m.rows(), cols = m.cols(), w = hi - lo;
  Tensor out = Tensor::matrix(rows, w);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(&m.data[i * cols + lo], w, &out.data[i * w]);
  }
  return out;
}

Tensor hcat(const std::vector<Tensor>& parts) {
  if (parts.empty()) {
    throw ShapeError("hcat: no tensors given");
  }
  const std::size_t rows = parts.front().rows();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("hcat: row counts differ: " + parts.front().shape_str() + " vs " +
                       p.shape_str());
    }
    total += p.cols();
  }
  Tensor out = Tensor::matrix(rows, total);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t off = 0;
    for (const Tensor& p : parts) {
      std::copy_n(&p.data[i * p.cols()], p.cols(), &out.data[i * total + off]);
      off += p.cols();
    }
  }
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: sizes differ: " + a.shape_str() + " vs " + b.shape_str());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double l2_norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

}  // namespace layerlens
