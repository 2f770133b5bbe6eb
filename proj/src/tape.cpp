#include "wrvi/ad/tape.hpp"

#include <cmath>
#include <string>

namespace wrvi::ad {

const Tensor& Var::value() const { return tape->value(*this); }

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::neg: return "neg";
    case Op::add_scalar: return "add_scalar";
    case Op::mul_scalar: return "mul_scalar";
    case Op::scalar_mul: return "scalar_mul";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::square: return "square";
    case Op::sqrt: return "sqrt";
    case Op::abs: return "abs";
    case Op::sign: return "sign";
    case Op::sigmoid: return "sigmoid";
    case Op::softplus: return "softplus";
    case Op::swish: return "swish";
    case Op::tanh: return "tanh";
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::matmul: return "matmul";
    case Op::bcast_add: return "bcast_add";
    case Op::col_broadcast: return "col_broadcast";
    case Op::concat_cols: return "concat_cols";
    case Op::slice: return "slice";
    case Op::concat: return "concat";
    case Op::reshape: return "reshape";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
  }
  return "?";
}

Var Tape::leaf(Tensor value) { return emit(Op::leaf, std::move(value), {}); }

Var Tape::emit(Op op, Tensor value, std::vector<int> parents, double c, int i0) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.c = c;
  n.i0 = i0;
  nodes_.push_back(std::move(n));
  Var v;
  v.tape = this;
  v.id = static_cast<int>(nodes_.size()) - 1;
  return v;
}

namespace {

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw ShapeError(std::string(op) + ": operands from different tapes");
}

Tensor pad1d(const Tensor& g, std::size_t start, std::size_t total) {
  Tensor out = Tensor::zeros({total});
  std::copy_n(g.data(), g.size(), out.data() + start);
  return out;
}

}  // namespace

// ---- forward ops ----

Var operator+(Var a, Var b) {
  require_same_tape(a, b, "add");
  return a.tape->emit(Op::add, add(a.value(), b.value()), {a.id, b.id});
}
Var operator-(Var a, Var b) {
  require_same_tape(a, b, "sub");
  return a.tape->emit(Op::sub, sub(a.value(), b.value()), {a.id, b.id});
}
Var operator*(Var a, Var b) {
  require_same_tape(a, b, "mul");
  return a.tape->emit(Op::mul, mul(a.value(), b.value()), {a.id, b.id});
}
Var operator/(Var a, Var b) {
  require_same_tape(a, b, "div");
  return a.tape->emit(Op::div, div(a.value(), b.value()), {a.id, b.id});
}
Var operator-(Var a) { return a.tape->emit(Op::neg, neg(a.value()), {a.id}); }

Var operator+(Var a, double c) { return a.tape->emit(Op::add_scalar, add_scalar(a.value(), c), {a.id}, c); }
Var operator+(double c, Var a) { return a + c; }
Var operator-(Var a, double c) { return a + (-c); }
Var operator-(double c, Var a) { return (-a) + c; }
Var operator*(Var a, double c) { return a.tape->emit(Op::mul_scalar, mul_scalar(a.value(), c), {a.id}, c); }
Var operator*(double c, Var a) { return a * c; }

Var scalar_mul(Var x, Var s) {
  require_same_tape(x, s, "scalar_mul");
  if (s.value().size() != 1) {
    throw ShapeError("scalar_mul: scalar operand has shape " + shape_string(s.value().shape()));
  }
  return x.tape->emit(Op::scalar_mul, mul_scalar(x.value(), s.value()[0]), {x.id, s.id});
}

#define WRVI_UNARY(name, kernel) \
  Var name(Var a) { return a.tape->emit(Op::name, kernel(a.value()), {a.id}); }

WRVI_UNARY(exp, exp)
WRVI_UNARY(log, log)
WRVI_UNARY(square, square)
WRVI_UNARY(sqrt, sqrt)
WRVI_UNARY(abs, abs)
WRVI_UNARY(sign, sign)
WRVI_UNARY(sigmoid, sigmoid)
WRVI_UNARY(softplus, softplus)
WRVI_UNARY(swish, swish)
WRVI_UNARY(tanh, tanh)
WRVI_UNARY(sin, sin)
WRVI_UNARY(cos, cos)

#undef WRVI_UNARY

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  return a.tape->emit(Op::matmul, matmul(a.value(), b.value()), {a.id, b.id});
}

Var bcast_add(Var m, Var v) {
  require_same_tape(m, v, "bcast_add");
  return m.tape->emit(Op::bcast_add, bcast_add(m.value(), v.value()), {m.id, v.id});
}

Var col_broadcast(Var v, std::size_t n) {
  return v.tape->emit(Op::col_broadcast, col_broadcast(v.value(), n), {v.id}, 0.0,
                      static_cast<int>(n));
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b, "concat_cols");
  return a.tape->emit(Op::concat_cols, concat_cols(a.value(), b.value()), {a.id, b.id});
}

Var slice(Var v, std::size_t start, std::size_t len) {
  return v.tape->emit(Op::slice, slice(v.value(), start, len), {v.id}, 0.0,
                      static_cast<int>(start));
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  std::vector<Tensor> vals;
  std::vector<int> ids;
  for (Var p : parts) {
    require_same_tape(parts.front(), p, "concat");
    vals.push_back(p.value());
    ids.push_back(p.id);
  }
  return parts.front().tape->emit(Op::concat, concat(vals), std::move(ids));
}

Var reshape(Var t, std::vector<std::size_t> shape) {
  return t.tape->emit(Op::reshape, reshape(t.value(), std::move(shape)), {t.id});
}

Var sum(Var a) { return a.tape->emit(Op::sum, sum(a.value()), {a.id}); }
Var mean(Var a) { return a.tape->emit(Op::mean, mean(a.value()), {a.id}); }

// ---- backward ----

std::vector<Tensor> Tape::gradients(Var loss, const std::vector<Var>& wrt) {
  if (loss.tape != this) throw ShapeError("gradients: loss lives on a different tape");
  if (loss.value().size() != 1) {
    throw ShapeError("gradients: loss has shape " + shape_string(loss.value().shape()) +
                     ", expected a scalar");
  }

  std::vector<Tensor> grads(nodes_.size());
  std::vector<char> has_grad(nodes_.size(), 0);
  auto acc = [&](int parent, Tensor delta, int at_node) {
    if (!delta.all_finite()) {
      throw NumericError("backward: non-finite gradient at node " + std::to_string(at_node) +
                         " (" + op_name(nodes_[static_cast<std::size_t>(at_node)].op) + ")");
    }
    Tensor& g = grads[static_cast<std::size_t>(parent)];
    if (!has_grad[static_cast<std::size_t>(parent)]) {
      g = std::move(delta);
      has_grad[static_cast<std::size_t>(parent)] = 1;
    } else {
      double* pg = g.data();
      const double* pd = delta.data();
      for (std::size_t i = 0; i < g.size(); ++i) pg[i] += pd[i];
    }
  };

  grads[static_cast<std::size_t>(loss.id)] = Tensor::scalar(1.0);
  has_grad[static_cast<std::size_t>(loss.id)] = 1;

  for (int i = loss.id; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    Tensor& g = grads[static_cast<std::size_t>(i)];
    if (!has_grad[static_cast<std::size_t>(i)]) continue;
    const auto parent_value = [&](int k) -> const Tensor& {
      return nodes_[static_cast<std::size_t>(n.parents[static_cast<std::size_t>(k)])].value;
    };
    const auto p = [&](int k) { return n.parents[static_cast<std::size_t>(k)]; };
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::add:
        acc(p(0), g, i);
        acc(p(1), g, i);
        break;
      case Op::sub:
        acc(p(0), g, i);
        acc(p(1), neg(g), i);
        break;
      case Op::mul:
        acc(p(0), mul(g, parent_value(1)), i);
        acc(p(1), mul(g, parent_value(0)), i);
        break;
      case Op::div: {
        const Tensor& a = parent_value(0);
        const Tensor& b = parent_value(1);
        acc(p(0), div(g, b), i);
        acc(p(1), neg(div(mul(g, a), mul(b, b))), i);
        break;
      }
      case Op::neg:
        acc(p(0), neg(g), i);
        break;
      case Op::add_scalar:
        acc(p(0), g, i);
        break;
      case Op::mul_scalar:
        acc(p(0), mul_scalar(g, n.c), i);
        break;
      case Op::scalar_mul: {
        const Tensor& x = parent_value(0);
        const Tensor& s = parent_value(1);
        acc(p(0), mul_scalar(g, s[0]), i);
        acc(p(1), Tensor::scalar(dot_value(g, x)), i);
        break;
      }
      case Op::exp:
        acc(p(0), mul(g, n.value), i);
        break;
      case Op::log:
        acc(p(0), div(g, parent_value(0)), i);
        break;
      case Op::square:
        acc(p(0), mul_scalar(mul(g, parent_value(0)), 2.0), i);
        break;
      case Op::sqrt:
        acc(p(0), mul_scalar(div(g, n.value), 0.5), i);
        break;
      case Op::abs:
        acc(p(0), mul(g, sign(parent_value(0))), i);
        break;
      case Op::sign:
        break;  // piecewise constant
      case Op::sigmoid: {
        const Tensor& s = n.value;
        acc(p(0), mul(g, mul(s, add_scalar(neg(s), 1.0))), i);
        break;
      }
      case Op::softplus:
        acc(p(0), mul(g, sigmoid(parent_value(0))), i);
        break;
      case Op::swish: {
        const Tensor& x = parent_value(0);
        Tensor s = sigmoid(x);
        // d/dx x*s(x) = s + x*s*(1-s)
        Tensor d = add(s, mul(mul(x, s), add_scalar(neg(s), 1.0)));
        acc(p(0), mul(g, d), i);
        break;
      }
      case Op::tanh: {
        const Tensor& t = n.value;
        acc(p(0), mul(g, add_scalar(neg(mul(t, t)), 1.0)), i);
        break;
      }
      case Op::sin:
        acc(p(0), mul(g, cos(parent_value(0))), i);
        break;
      case Op::cos:
        acc(p(0), neg(mul(g, sin(parent_value(0)))), i);
        break;
      case Op::matmul:
        acc(p(0), matmul_nt(g, parent_value(1)), i);
        acc(p(1), matmul_tn(parent_value(0), g), i);
        break;
      case Op::bcast_add:
        acc(p(0), g, i);
        acc(p(1), colsum(g), i);
        break;
      case Op::col_broadcast:
        acc(p(0), colsum(g), i);
        break;
      case Op::concat_cols: {
        const std::size_t pc = parent_value(0).cols();
        const std::size_t qc = parent_value(1).cols();
        acc(p(0), slice_cols(g, 0, pc), i);
        acc(p(1), slice_cols(g, pc, qc), i);
        break;
      }
      case Op::slice: {
        const Tensor& src = parent_value(0);
        acc(p(0), pad1d(g, static_cast<std::size_t>(n.i0), src.size()), i);
        break;
      }
      case Op::concat: {
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          const Tensor& part = parent_value(static_cast<int>(k));
          acc(n.parents[k], slice(g, off, part.size()), i);
          off += part.size();
        }
        break;
      }
      case Op::reshape:
        acc(p(0), reshape(g, parent_value(0).shape()), i);
        break;
      case Op::sum:
        acc(p(0), Tensor::full(parent_value(0).shape(), g[0]), i);
        break;
      case Op::mean:
        acc(p(0),
            Tensor::full(parent_value(0).shape(),
                         g[0] / static_cast<double>(parent_value(0).size())),
            i);
        break;
    }
  }

  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (Var w : wrt) {
    if (w.tape != this) throw ShapeError("gradients: wrt var lives on a different tape");
    if (!has_grad[static_cast<std::size_t>(w.id)]) {
      out.push_back(Tensor::zeros(w.value().shape()));
    } else {
      out.push_back(grads[static_cast<std::size_t>(w.id)]);
    }
  }
  return out;
}

// ---- derivative checking ----

std::vector<Tensor> grad(const std::function<Var(Tape&, const std::vector<Var>&)>& builder,
                         const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.leaf(p));
  Var loss = builder(tape, vars);
  return tape.gradients(loss, vars);
}

std::vector<Tensor> finite_difference_gradient(
    const std::function<Var(Tape&, const std::vector<Var>&)>& builder,
    const std::vector<Tensor>& params, double step) {
  auto eval = [&](const std::vector<Tensor>& at) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : at) vars.push_back(tape.leaf(p));
    return builder(tape, vars).value()[0];
  };
  std::vector<Tensor> out;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor g = Tensor::zeros(params[pi].shape());
    for (std::size_t k = 0; k < params[pi].size(); ++k) {
      std::vector<Tensor> hi = params;
      std::vector<Tensor> lo = params;
      hi[pi][k] += step;
      lo[pi][k] -= step;
      g[k] = (eval(hi) - eval(lo)) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double max_relative_error(const std::vector<Tensor>& analytic, const std::vector<Tensor>& numeric) {
  double worst = 0.0;
  for (std::size_t pi = 0; pi < analytic.size(); ++pi) {
    for (std::size_t k = 0; k < analytic[pi].size(); ++k) {
      double a = analytic[pi][k];
      double n = numeric[pi][k];
      double err = std::fabs(a - n) / std::max(1.0, std::fabs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double gradient_check(const std::function<Var(Tape&, const std::vector<Var>&)>& builder,
                      const std::vector<Tensor>& params, double step) {
  if (!(step > 0.0)) throw NumericError("gradient_check: step must be positive");
  auto analytic = grad(builder, params);
  auto numeric = finite_difference_gradient(builder, params, step);
  return max_relative_error(analytic, numeric);
}

}  // namespace wrvi::ad
