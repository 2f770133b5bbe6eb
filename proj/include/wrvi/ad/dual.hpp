#pragma once

#include <tuple>
#include <utility>

#include "wrvi/ad/tape.hpp"

namespace wrvi::ad {

// Forward-mode pair carried through taped computations. Because tangents
// are built from ordinary tape primitives, any result (value or tangent)
// stays reverse-differentiable with respect to tape leaves, and nesting
// DualT<DualT<Var>> yields second directional derivatives.
template <class T>
struct DualT {
  T v;  // value
  T t;  // tangent
};

using Dual = DualT<Var>;
using Dual2 = DualT<Dual>;

inline Var zeros_like(Var x) { return x.tape->constant(Tensor::zeros(x.value().shape())); }
template <class T>
DualT<T> zeros_like(const DualT<T>& x) {
  return {zeros_like(x.v), zeros_like(x.t)};
}

inline Var primal(Var x) { return x; }
template <class T>
Var primal(const DualT<T>& x) {
  return primal(x.v);
}

template <class T>
struct Lift {
  static T from(Var v) { return v; }
};
template <class U>
struct Lift<DualT<U>> {
  static DualT<U> from(Var v) {
    U pv = Lift<U>::from(v);
    return {pv, zeros_like(pv)};
  }
};

// ---- arithmetic ----

template <class T>
DualT<T> operator+(const DualT<T>& a, const DualT<T>& b) {
  return {a.v + b.v, a.t + b.t};
}
template <class T>
DualT<T> operator-(const DualT<T>& a, const DualT<T>& b) {
  return {a.v - b.v, a.t - b.t};
}
template <class T>
DualT<T> operator*(const DualT<T>& a, const DualT<T>& b) {
  return {a.v * b.v, a.t * b.v + a.v * b.t};
}
template <class T>
DualT<T> operator/(const DualT<T>& a, const DualT<T>& b) {
  return {a.v / b.v, (a.t * b.v - a.v * b.t) / (b.v * b.v)};
}
template <class T>
DualT<T> operator-(const DualT<T>& a) {
  return {-a.v, -a.t};
}
template <class T>
DualT<T> operator+(const DualT<T>& a, double c) {
  return {a.v + c, a.t};
}
template <class T>
DualT<T> operator+(double c, const DualT<T>& a) {
  return a + c;
}
template <class T>
DualT<T> operator-(const DualT<T>& a, double c) {
  return {a.v - c, a.t};
}
template <class T>
DualT<T> operator-(double c, const DualT<T>& a) {
  return {c - a.v, -a.t};
}
template <class T>
DualT<T> operator*(const DualT<T>& a, double c) {
  return {a.v * c, a.t * c};
}
template <class T>
DualT<T> operator*(double c, const DualT<T>& a) {
  return a * c;
}

template <class T>
DualT<T> scalar_mul(const DualT<T>& x, const DualT<T>& s) {
  return {scalar_mul(x.v, s.v), scalar_mul(x.t, s.v) + scalar_mul(x.v, s.t)};
}

// ---- elementwise functions ----

template <class T>
DualT<T> exp(const DualT<T>& a) {
  T e = exp(a.v);
  return {e, a.t * e};
}
template <class T>
DualT<T> log(const DualT<T>& a) {
  return {log(a.v), a.t / a.v};
}
template <class T>
DualT<T> square(const DualT<T>& a) {
  return {square(a.v), 2.0 * (a.v * a.t)};
}
template <class T>
DualT<T> sqrt(const DualT<T>& a) {
  T s = sqrt(a.v);
  return {s, a.t / (2.0 * s)};
}
template <class T>
DualT<T> abs(const DualT<T>& a) {
  return {abs(a.v), a.t * sign(a.v)};
}
template <class T>
DualT<T> sign(const DualT<T>& a) {
  T s = sign(a.v);
  return {s, zeros_like(s)};
}
template <class T>
DualT<T> sigmoid(const DualT<T>& a) {
  T s = sigmoid(a.v);
  return {s, a.t * (s * (1.0 - s))};
}
template <class T>
DualT<T> softplus(const DualT<T>& a) {
  return {softplus(a.v), a.t * sigmoid(a.v)};
}
template <class T>
DualT<T> swish(const DualT<T>& a) {
  T s = sigmoid(a.v);
  return {a.v * s, a.t * (s + a.v * (s * (1.0 - s)))};
}
template <class T>
DualT<T> tanh(const DualT<T>& a) {
  T th = tanh(a.v);
  return {th, a.t * (1.0 - th * th)};
}
template <class T>
DualT<T> sin(const DualT<T>& a) {
  return {sin(a.v), a.t * cos(a.v)};
}
template <class T>
DualT<T> cos(const DualT<T>& a) {
  return {cos(a.v), -(a.t * sin(a.v))};
}

// ---- structural ops ----

template <class T>
DualT<T> matmul(const DualT<T>& a, const DualT<T>& b) {
  return {matmul(a.v, b.v), matmul(a.t, b.v) + matmul(a.v, b.t)};
}
template <class T>
DualT<T> slice(const DualT<T>& a, std::size_t start, std::size_t len) {
  return {slice(a.v, start, len), slice(a.t, start, len)};
}
template <class T>
DualT<T> reshape(const DualT<T>& a, std::vector<std::size_t> shape) {
  return {reshape(a.v, shape), reshape(a.t, std::move(shape))};
}
template <class T>
DualT<T> concat_cols(const DualT<T>& a, const DualT<T>& b) {
  return {concat_cols(a.v, b.v), concat_cols(a.t, b.t)};
}
template <class T>
DualT<T> sum(const DualT<T>& a) {
  return {sum(a.v), sum(a.t)};
}
template <class T>
DualT<T> mean(const DualT<T>& a) {
  return {mean(a.v), mean(a.t)};
}

// Directional derivative of fn at x along `tangent`; fn maps Dual -> Dual.
// Returns (value, J_fn(x) . tangent). The result remains attached to the
// tape, so an outer reverse sweep still reaches network parameters.
template <class F>
std::pair<Var, Var> jvp(F&& fn, Var x, Var tangent) {
  if (!x.value().same_shape(tangent.value())) {
    throw ShapeError("jvp: tangent shape " + shape_string(tangent.value().shape()) +
                     " does not match input shape " + shape_string(x.value().shape()));
  }
  Dual out = fn(Dual{x, tangent});
  return {out.v, out.t};
}

// Second directional derivative along a single direction; fn must accept
// DualT<DualT<Var>>. Returns (value, first, second).
template <class F>
std::tuple<Var, Var, Var> jvp2(F&& fn, Var x, Var tangent) {
  if (!x.value().same_shape(tangent.value())) {
    throw ShapeError("jvp2: tangent shape " + shape_string(tangent.value().shape()) +
                     " does not match input shape " + shape_string(x.value().shape()));
  }
  Dual inner{x, tangent};
  Dual2 in{inner, DualT<Var>{tangent, zeros_like(tangent)}};
  Dual2 out = fn(in);
  return {out.v.v, out.v.t, out.t.t};
}

}  // namespace wrvi::ad
