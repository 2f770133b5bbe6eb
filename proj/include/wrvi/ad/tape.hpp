#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wrvi/ad/tensor.hpp"

namespace wrvi::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; the tape owns the storage.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  bool valid() const { return tape != nullptr && id >= 0; }
};

enum class Op : std::uint8_t {
  leaf,
  add, sub, mul, div, neg,
  add_scalar, mul_scalar, scalar_mul,
  exp, log, square, sqrt, abs, sign,
  sigmoid, softplus, swish, tanh, sin, cos,
  matmul, bcast_add, col_broadcast, concat_cols,
  slice, concat, reshape,
  sum, mean,
};

const char* op_name(Op op);

// Record of one primitive application: the produced value, the operation,
// and the ids of its inputs. Inputs always reference earlier nodes, so a
// single reverse sweep visits every node exactly once.
struct Node {
  Op op = Op::leaf;
  Tensor value;
  std::vector<int> parents;
  double c = 0.0;   // scalar operand for add_scalar / mul_scalar
  int i0 = 0;       // op-specific: slice start, broadcast row count, ...
};

// Append-only operation record enabling reverse-mode differentiation.
// Single-owner: a tape must not be shared across threads.
class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  Var leaf(Tensor value);
  Var constant(Tensor value) { return leaf(std::move(value)); }
  Var constant_scalar(double v) { return leaf(Tensor::scalar(v)); }

  const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss. Returns one gradient per entry of
  // `wrt`, zero-filled for parameters the loss does not depend on.
  // Throws NumericError (with the offending node) if a non-finite value
  // appears during the sweep.
  std::vector<Tensor> gradients(Var loss, const std::vector<Var>& wrt);

  Var emit(Op op, Tensor value, std::vector<int> parents, double c = 0.0, int i0 = 0);

 private:
  std::vector<Node> nodes_;
};

// ---- primitive operations (record on the tape, evaluate eagerly) ----

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);   // elementwise
Var operator/(Var a, Var b);   // elementwise
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);

Var scalar_mul(Var x, Var s);  // x * s, s a scalar node

Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sqrt(Var a);
Var abs(Var a);
Var sign(Var a);               // zero gradient everywhere
Var sigmoid(Var a);
Var softplus(Var a);
Var swish(Var a);
Var tanh(Var a);
Var sin(Var a);
Var cos(Var a);

Var matmul(Var a, Var b);
Var bcast_add(Var m, Var v);
Var col_broadcast(Var v, std::size_t n);
Var concat_cols(Var a, Var b);
Var slice(Var v, std::size_t start, std::size_t len);
Var concat(const std::vector<Var>& parts);
Var reshape(Var t, std::vector<std::size_t> shape);
Var sum(Var a);
Var mean(Var a);

// max over coordinates of |analytic - central difference| / max(1, |analytic|)
// for a scalar-valued builder over a list of parameter tensors.
double gradient_check(const std::function<Var(Tape&, const std::vector<Var>&)>& builder,
                      const std::vector<Tensor>& params, double step);

// Central-difference gradient of the same builder, exposed so tests can
// compare mismatched analytic/numeric pairs deliberately.
std::vector<Tensor> finite_difference_gradient(
    const std::function<Var(Tape&, const std::vector<Var>&)>& builder,
    const std::vector<Tensor>& params, double step);

double max_relative_error(const std::vector<Tensor>& analytic, const std::vector<Tensor>& numeric);

// Convenience wrapper: gradients of a scalar builder at the given parameter
// values, one tensor per parameter.
std::vector<Tensor> grad(const std::function<Var(Tape&, const std::vector<Var>&)>& builder,
                         const std::vector<Tensor>& params);

}  // namespace wrvi::ad
