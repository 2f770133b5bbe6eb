#pragma once

#include <string>
#include <vector>

#include "wrvi/ad/tensor.hpp"

namespace wrvi {

// Pointwise output transform composed with a basis expansion, used to
// impose properties such as positivity on reconstructed fields.
enum class Transform { identity, softplus, softplus_plus_one, sigmoid };

Transform transform_from_string(const std::string& s);
std::string transform_to_string(Transform t);

double apply_transform(Transform t, double x);
ad::Tensor apply_transform(Transform t, const ad::Tensor& x);

struct Interval {
  double a = -1.0;
  double b = 1.0;

  double width() const { return b - a; }
  // Affine map onto [-1, 1].
  double to_unit(double x) const { return (2.0 * x - a - b) / (b - a); }
};

// First-kind Chebyshev expansion over an interval, optionally composed
// with a pointwise nonlinear output transform.
struct ChebyshevField {
  ad::Tensor coeffs;  // length order+1
  Interval domain;
  Transform transform = Transform::identity;

  std::size_t order() const { return coeffs.size() - 1; }
};

// Rows evaluate T_0..T_order at each point (mapped to [-1,1] first),
// built by the three-term recurrence. Points must lie inside the domain
// up to a 1e-12 tolerance.
struct Vandermonde {
  ad::Tensor matrix;           // n_points x (order+1)
  std::vector<double> points;  // physical coordinates
};

Vandermonde chebyshev_vandermonde(std::size_t order, const std::vector<double>& points,
                                  Interval domain);

// transform(V . coeffs) at the mesh nodes.
ad::Tensor project_to_fem(const ChebyshevField& field, const std::vector<double>& mesh_nodes);

// Push a diagonal Gaussian over coefficients through the linear map V:
// mesh_mean = V mean, mesh_cov = V diag(cov) V^T (full matrix).
struct MeshGaussian {
  ad::Tensor mean;  // [n]
  ad::Tensor cov;   // [n, n]

  ad::Tensor cov_diagonal() const;
};

MeshGaussian pushforward_gaussian(const ad::Tensor& mean, const ad::Tensor& diag_cov,
                                  const Vandermonde& v);

// Least-squares Chebyshev fit of nodal values (the pseudo-inverse of the
// Vandermonde map), used to feed mesh fields into coefficient-space inputs.
ad::Tensor chebyshev_fit(std::size_t order, const std::vector<double>& nodes,
                         const ad::Tensor& nodal_values, Interval domain);

}  // namespace wrvi
