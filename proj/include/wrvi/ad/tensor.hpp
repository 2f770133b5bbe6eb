#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "wrvi/common.hpp"

namespace wrvi::ad {

// Dense row-major array of 64-bit floats. Rank 0 is a scalar, rank 1 a
// vector, rank 2 a matrix. Values are immutable by convention once handed
// to a tape; kernels return fresh tensors.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor vector(std::vector<double> data);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool is_scalar() const { return data_.size() == 1 && shape_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const;
  double& at(std::size_t r, std::size_t c);

  std::size_t rows() const;
  std::size_t cols() const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& s);
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);
void require_finite(const Tensor& t, const char* op);

// ---- pure-evaluation kernels (no tape involved) ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sign(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor swish(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);

// matmul: [m,k]x[k,n] -> [m,n]. _nt multiplies by the transpose of b,
// _tn by the transpose of a; both avoid materializing transposes.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor bcast_add(const Tensor& m, const Tensor& v);     // [r,c] + [c]
Tensor col_broadcast(const Tensor& v, std::size_t n);   // [c] -> [n,c]
Tensor colsum(const Tensor& m);                         // [r,c] -> [c]
Tensor concat_cols(const Tensor& a, const Tensor& b);   // [n,p],[n,q] -> [n,p+q]
Tensor slice_cols(const Tensor& m, std::size_t start, std::size_t len);

Tensor slice(const Tensor& v, std::size_t start, std::size_t len);  // rank 1
Tensor concat(const std::vector<Tensor>& parts);                    // rank 1
Tensor reshape(const Tensor& t, std::vector<std::size_t> shape);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

double sum_value(const Tensor& a);
double dot_value(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& a);

}  // namespace wrvi::ad
