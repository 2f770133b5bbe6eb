#include "wrvi/ad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace wrvi::ad {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& s) {
  std::size_t p = 1;
  for (auto d : s) p *= d;
  return p;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("Tensor: shape " + shape_string(shape_) + " does not match data length " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  auto n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
  auto n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::vector(std::vector<double> data) {
  auto n = data.size();
  return Tensor({n}, std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

double Tensor::at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
double& Tensor::at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows: tensor of shape " + shape_string(shape_) + " is not a matrix");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols: tensor of shape " + shape_string(shape_) + " is not a matrix");
  return shape_[1];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_string(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string(op) + ": produced a non-finite value");
  }
}

namespace {

template <class F>
Tensor binary_ew(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = f(pa[i], pb[i]);
  require_finite(out, op);
  return out;
}

template <class F>
Tensor unary_ew(const Tensor& a, const char* op, F f) {
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = f(pa[i]);
  require_finite(out, op);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "mul", [](double x, double y) { return x * y; });
}
Tensor div(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "div", [](double x, double y) { return x / y; });
}
Tensor neg(const Tensor& a) {
  return unary_ew(a, "neg", [](double x) { return -x; });
}
Tensor add_scalar(const Tensor& a, double c) {
  return unary_ew(a, "add_scalar", [c](double x) { return x + c; });
}
Tensor mul_scalar(const Tensor& a, double c) {
  return unary_ew(a, "mul_scalar", [c](double x) { return x * c; });
}

Tensor exp(const Tensor& a) {
  return unary_ew(a, "exp", [](double x) { return std::exp(x); });
}

Tensor log(const Tensor& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0)) {
      throw NumericError("log: non-positive input " + std::to_string(a[i]) + " at index " +
                         std::to_string(i));
    }
  }
  return unary_ew(a, "log", [](double x) { return std::log(x); });
}

Tensor square(const Tensor& a) {
  return unary_ew(a, "square", [](double x) { return x * x; });
}

Tensor sqrt(const Tensor& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0)) {
      throw NumericError("sqrt: non-positive input " + std::to_string(a[i]) + " at index " +
                         std::to_string(i));
    }
  }
  return unary_ew(a, "sqrt", [](double x) { return std::sqrt(x); });
}

Tensor abs(const Tensor& a) {
  return unary_ew(a, "abs", [](double x) { return std::fabs(x); });
}

Tensor sign(const Tensor& a) {
  return unary_ew(a, "sign", [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor sigmoid(const Tensor& a) {
  // Split on the argument sign so large |x| never overflows exp.
  return unary_ew(a, "sigmoid", [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Tensor softplus(const Tensor& a) {
  return unary_ew(a, "softplus", [](double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
  });
}

Tensor swish(const Tensor& a) {
  return unary_ew(a, "swish", [](double x) {
    double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return x * s;
  });
}

Tensor tanh(const Tensor& a) {
  return unary_ew(a, "tanh", [](double x) { return std::tanh(x); });
}

Tensor sin(const Tensor& a) {
  return unary_ew(a, "sin", [](double x) { return std::sin(x); });
}

Tensor cos(const Tensor& a) {
  return unary_ew(a, "cos", [](double x) { return std::cos(x); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* orow = po + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  require_finite(out, "matmul");
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out = Tensor::zeros({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      po[i * n + j] = acc;
    }
  }
  require_finite(out, "matmul_nt");
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = pa + kk * m;
    const double* brow = pb + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  require_finite(out, "matmul_tn");
  return out;
}

Tensor bcast_add(const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || m.cols() != v.size()) {
    throw ShapeError("bcast_add: shape mismatch " + shape_string(m.shape()) + " vs " +
                     shape_string(v.shape()));
  }
  Tensor out = Tensor::zeros(m.shape());
  const std::size_t r = m.rows(), c = m.cols();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.data()[i * c + j] = m.data()[i * c + j] + v[j];
  }
  require_finite(out, "bcast_add");
  return out;
}

Tensor col_broadcast(const Tensor& v, std::size_t n) {
  if (v.rank() != 1) {
    throw ShapeError("col_broadcast: expected rank-1 tensor, got " + shape_string(v.shape()));
  }
  const std::size_t c = v.size();
  Tensor out = Tensor::zeros({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) out.data()[i * c + j] = v[j];
  }
  return out;
}

Tensor colsum(const Tensor& m) {
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out = Tensor::zeros({c});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j] += m.data()[i * c + j];
  }
  require_finite(out, "colsum");
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
    throw ShapeError("concat_cols: shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  const std::size_t n = a.rows(), p = a.cols(), q = b.cols();
  Tensor out = Tensor::zeros({n, p + q});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.data() + i * p, p, out.data() + i * (p + q));
    std::copy_n(b.data() + i * q, q, out.data() + i * (p + q) + p);
  }
  return out;
}

Tensor slice_cols(const Tensor& m, std::size_t start, std::size_t len) {
  if (m.rank() != 2 || start + len > m.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of " + shape_string(m.shape()));
  }
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out = Tensor::zeros({r, len});
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(m.data() + i * c + start, len, out.data() + i * len);
  }
  return out;
}

Tensor slice(const Tensor& v, std::size_t start, std::size_t len) {
  if (v.rank() != 1 || start + len > v.size()) {
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of " + shape_string(v.shape()));
  }
  return Tensor({len}, std::vector<double>(v.data() + start, v.data() + start + len));
}

Tensor concat(const std::vector<Tensor>& parts) {
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.rank() != 1) throw ShapeError("concat: expected rank-1 parts, got " + shape_string(p.shape()));
    n += p.size();
  }
  Tensor out = Tensor::zeros({n});
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy_n(p.data(), p.size(), out.data() + off);
    off += p.size();
  }
  return out;
}

Tensor reshape(const Tensor& t, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != t.size()) {
    throw ShapeError("reshape: " + shape_string(t.shape()) + " to " + shape_string(shape) +
                     " changes element count");
  }
  return Tensor(std::move(shape), std::vector<double>(t.data(), t.data() + t.size()));
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  Tensor out = Tensor::scalar(acc);
  require_finite(out, "sum");
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  return Tensor::scalar(sum_value(a) / static_cast<double>(a.size()));
}

double sum_value(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  return acc;
}

double dot_value(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

}  // namespace wrvi::ad
